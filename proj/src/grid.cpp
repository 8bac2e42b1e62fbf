#include "hjb/grid.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace hjb {

Grid build_grid(const Domain& dom, double h, const DirectionSet& dirs) {
    if (!(h > 0)) throw std::invalid_argument("build_grid: h must be positive");
    if (!dom.psi) throw std::invalid_argument("build_grid: domain has no psi");
    if (dom.dim != dirs.dim())
        throw std::invalid_argument("build_grid: domain and direction set dimensions differ");

    Grid g;
    g.dim = dom.dim;
    g.h = h;
    g.dirs = dirs;

    // index box: bounding box plus a margin wide enough that halving h keeps
    // every valued coarse node inside the fine box (margin = 2*reach + 2)
    const int margin = 2 * dirs.stencil_reach() + 2;
    for (int a = 0; a < g.dim; ++a) {
        g.lo[static_cast<size_t>(a)] = static_cast<int>(std::floor(dom.box_lo[static_cast<size_t>(a)] / h)) - margin;
        g.hi[static_cast<size_t>(a)] = static_cast<int>(std::ceil(dom.box_hi[static_cast<size_t>(a)] / h)) + margin;
    }
    std::array<std::int64_t, 3> ext{1, 1, 1};
    for (int a = 0; a < g.dim; ++a) ext[static_cast<size_t>(a)] = g.hi[static_cast<size_t>(a)] - g.lo[static_cast<size_t>(a)] + 1;
    if (g.dim == 2) {
        g.stride = {ext[1], 1, 0};
    } else {
        g.stride = {ext[1] * ext[2], ext[2], 1};
    }

    const std::int64_t n = g.cell_count();
    g.cls.assign(static_cast<size_t>(n), NodeClass::unused);

    g.dir_step.resize(static_cast<size_t>(dirs.d1()));
    for (int k = 1; k <= dirs.d1(); ++k) {
        const Offset& e = dirs.offset(k);
        std::int64_t s = 0;
        for (int a = 0; a < g.dim; ++a) s += e[static_cast<size_t>(a)] * g.stride[static_cast<size_t>(a)];
        g.dir_step[static_cast<size_t>(k - 1)] = s;
    }

    // inside mask: psi > 0 per node
    std::vector<std::uint8_t> inside(static_cast<size_t>(n), 0);
    {
        double x[3];
        for (std::int64_t id = 0; id < n; ++id) {
            g.coord(id, x);
            inside[static_cast<size_t>(id)] = dom.psi(x) > 0.0 ? 1 : 0;
        }
    }

    // interior: inside and all one-step stencil neighbours inside
    const int d1 = dirs.d1();
    for (std::int64_t id = 0; id < n; ++id) {
        if (!inside[static_cast<size_t>(id)]) continue;
        const Offset idx = g.unflat(id);
        bool ok = true;
        for (int k = 1; k <= d1 && ok; ++k) {
            const Offset& e = dirs.offset(k);
            Offset p = idx, m = idx;
            for (int a = 0; a < g.dim; ++a) {
                p[static_cast<size_t>(a)] += e[static_cast<size_t>(a)];
                m[static_cast<size_t>(a)] -= e[static_cast<size_t>(a)];
            }
            ok = g.in_box(p) && g.in_box(m) && inside[static_cast<size_t>(g.flat(p))] &&
                 inside[static_cast<size_t>(g.flat(m))];
        }
        if (ok) {
            g.cls[static_cast<size_t>(id)] = NodeClass::interior;
            g.interior.push_back(id);
        }
    }
    if (g.interior.empty())
        throw EmptyInteriorError("build_grid: no interior node at h = " + std::to_string(h) +
                                 " on domain '" + dom.name + "'; refine h");

    // band: one-step halo of the interior
    for (std::int64_t id : g.interior) {
        for (int k = 1; k <= d1; ++k) {
            for (int sgn : {+1, -1}) {
                const std::int64_t nb = id + sgn * g.dir_step[static_cast<size_t>(k - 1)];
                if (g.cls[static_cast<size_t>(nb)] == NodeClass::unused)
                    g.cls[static_cast<size_t>(nb)] = NodeClass::band;
            }
        }
    }
    for (std::int64_t id = 0; id < n; ++id)
        if (g.cls[static_cast<size_t>(id)] == NodeClass::band) g.band.push_back(id);

    return g;
}

std::vector<std::uint8_t> classify_deep_interior(const Domain& dom, const Grid& g, int depth) {
    if (depth < 1) throw std::invalid_argument("classify_deep_interior: depth must be >= 1");
    const std::int64_t n = g.cell_count();
    std::vector<std::uint8_t> level(static_cast<size_t>(n), 0);
    {
        double x[3];
        for (std::int64_t id = 0; id < n; ++id) {
            g.coord(id, x);
            level[static_cast<size_t>(id)] = dom.psi(x) > 0.0 ? 1 : 0;
        }
    }
    // level[id] counts after this loop: 1 = inside, and each pass trims nodes
    // whose neighbours fail the previous pass, so pass p leaves exactly the
    // nodes whose <= p-step chains stay inside
    std::vector<std::uint8_t> next(static_cast<size_t>(n), 0);
    for (int pass = 0; pass < depth; ++pass) {
        for (std::int64_t id = 0; id < n; ++id) {
            if (!level[static_cast<size_t>(id)]) { next[static_cast<size_t>(id)] = 0; continue; }
            const Offset idx = g.unflat(id);
            bool ok = true;
            for (int k = 1; k <= g.dirs.d1() && ok; ++k) {
                const Offset& e = g.dirs.offset(k);
                Offset p = idx, m = idx;
                for (int a = 0; a < g.dim; ++a) {
                    p[static_cast<size_t>(a)] += e[static_cast<size_t>(a)];
                    m[static_cast<size_t>(a)] -= e[static_cast<size_t>(a)];
                }
                ok = g.in_box(p) && g.in_box(m) && level[static_cast<size_t>(g.flat(p))] &&
                     level[static_cast<size_t>(g.flat(m))];
            }
            next[static_cast<size_t>(id)] = ok ? 1 : 0;
        }
        level.swap(next);
    }
    return level;
}

GridFunction GridFunction::undefined(GridPtr g) {
    GridFunction f;
    f.grid = std::move(g);
    f.v.assign(static_cast<size_t>(f.grid->cell_count()),
               std::numeric_limits<double>::quiet_NaN());
    return f;
}

GridFunction GridFunction::zeros(GridPtr g) {
    GridFunction f = undefined(std::move(g));
    for (std::int64_t id : f.grid->interior) f.v[static_cast<size_t>(id)] = 0.0;
    for (std::int64_t id : f.grid->band) f.v[static_cast<size_t>(id)] = 0.0;
    return f;
}

GridFunction GridFunction::from_callable(GridPtr g, const ScalarField& fn) {
    GridFunction f = undefined(std::move(g));
    double x[3];
    for (std::int64_t id : f.grid->interior) {
        f.grid->coord(id, x);
        f.v[static_cast<size_t>(id)] = fn(x);
    }
    for (std::int64_t id : f.grid->band) {
        f.grid->coord(id, x);
        f.v[static_cast<size_t>(id)] = fn(x);
    }
    return f;
}

bool GridFunction::values_complete(bool interior_only) const {
    for (std::int64_t id : grid->interior)
        if (!std::isfinite(v[static_cast<size_t>(id)])) return false;
    if (!interior_only)
        for (std::int64_t id : grid->band)
            if (!std::isfinite(v[static_cast<size_t>(id)])) return false;
    return true;
}

}  // namespace hjb
