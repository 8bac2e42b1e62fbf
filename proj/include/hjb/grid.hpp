#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "hjb/directions.hpp"
#include "hjb/geometry.hpp"

namespace hjb {

enum class NodeClass : std::uint8_t { unused = 0, interior = 1, band = 2 };

struct EmptyInteriorError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/**
 * Lattice view of a domain at mesh size h.
 *
 * Nodes live on origin + h * Z^dim, carried as integer multi-indices inside
 * an inclusive index box that covers the bounding box plus a stencil margin.
 * Interior nodes are those with psi > 0 whose one-step stencil neighbours all
 * stay in {psi > 0}; the boundary band is the one-step halo of the interior.
 * Everything else is unused. interior/band lists are in ascending flat
 * (lexicographic) order, which fixes sweep order everywhere downstream.
 */
struct Grid {
    int dim = 2;
    double h = 0.0;
    DirectionSet dirs = canonical_directions(2);
    Offset lo{0, 0, 0}, hi{0, 0, 0};  // inclusive index bounds
    std::array<std::int64_t, 3> stride{0, 0, 0};
    std::vector<NodeClass> cls;                // size = cell_count()
    std::vector<std::int64_t> interior, band;  // flat ids, ascending
    std::vector<std::int64_t> dir_step;        // flat jump per unsigned direction, [d1]

    std::int64_t cell_count() const {
        std::int64_t n = 1;
        for (int a = 0; a < dim; ++a) n *= (hi[static_cast<size_t>(a)] - lo[static_cast<size_t>(a)] + 1);
        return n;
    }
    std::int64_t flat(const Offset& idx) const {
        std::int64_t f = 0;
        for (int a = 0; a < dim; ++a)
            f += (idx[static_cast<size_t>(a)] - lo[static_cast<size_t>(a)]) * stride[static_cast<size_t>(a)];
        return f;
    }
    Offset unflat(std::int64_t id) const {
        Offset idx{0, 0, 0};
        for (int a = 0; a < dim; ++a) {
            idx[static_cast<size_t>(a)] = static_cast<int>(id / stride[static_cast<size_t>(a)]) + lo[static_cast<size_t>(a)];
            id %= stride[static_cast<size_t>(a)];
        }
        return idx;
    }
    bool in_box(const Offset& idx) const {
        for (int a = 0; a < dim; ++a)
            if (idx[static_cast<size_t>(a)] < lo[static_cast<size_t>(a)] || idx[static_cast<size_t>(a)] > hi[static_cast<size_t>(a)]) return false;
        return true;
    }
    void coord(std::int64_t id, double* x) const {
        const Offset idx = unflat(id);
        for (int a = 0; a < dim; ++a) x[a] = h * idx[static_cast<size_t>(a)];
        for (int a = dim; a < 3; ++a) x[a] = 0.0;
    }
    // signed direction step in flat index space, k in [-d1, d1]
    std::int64_t step(int k) const {
        if (k == 0) return 0;
        return k > 0 ? dir_step[static_cast<size_t>(k - 1)] : -dir_step[static_cast<size_t>(-k - 1)];
    }
    NodeClass node_class(std::int64_t id) const { return cls[static_cast<size_t>(id)]; }
};

using GridPtr = std::shared_ptr<const Grid>;

// Classify the lattice at mesh h. Throws EmptyInteriorError when no node
// qualifies (h too coarse for the domain) and std::invalid_argument for a
// non-positive h or an inconsistent direction set / domain dimension.
Grid build_grid(const Domain& dom, double h, const DirectionSet& dirs);

inline GridPtr make_grid(const Domain& dom, double h, const DirectionSet& dirs) {
    return std::make_shared<const Grid>(build_grid(dom, h, dirs));
}

// mask[id] = 1 iff every stencil chain of <= depth steps from id stays in
// {psi > 0}; depth 1 reproduces the interior set.
std::vector<std::uint8_t> classify_deep_interior(const Domain& dom, const Grid& g, int depth);

/**
 * Values attached to the valued (interior + band) nodes of a grid.
 * Unused nodes hold NaN. Dense storage over the index box.
 */
struct GridFunction {
    GridPtr grid;
    std::vector<double> v;

    static GridFunction undefined(GridPtr g);  // NaN everywhere
    static GridFunction zeros(GridPtr g);      // 0 on valued nodes
    static GridFunction from_callable(GridPtr g, const ScalarField& f);

    double operator[](std::int64_t id) const { return v[static_cast<size_t>(id)]; }
    double& operator[](std::int64_t id) { return v[static_cast<size_t>(id)]; }

    // true when every interior (and, unless interior_only, band) node is finite
    bool values_complete(bool interior_only = false) const;
};

}  // namespace hjb
