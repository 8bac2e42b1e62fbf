#pragma once

#include <array>
#include <string>
#include <vector>

namespace hjb {

// Integer lattice offset, padded with zeros above the active dimension.
using Offset = std::array<int, 3>;

/**
 * Symmetric family of integer stencil directions.
 *
 * One representative is stored per +/- pair; signed index k in [1, d1] maps
 * to e_k, k in [-d1, -1] to -e_{|k|}, and index 0 to the zero vector. The
 * family must consist of distinct nonzero primitive-ish offsets spanning R^d.
 * Optionally the first `core_count` offsets (plus the zero vector and
 * negations) are designated as the core set L; in that case the full family
 * must satisfy the pairwise-sum closure
 *     L + L >= Lambda >= { l' + l'' : l', l'' in L, l' != l'' },
 * which is what grants the wide stencil its second-order cross terms.
 *
 * Invariants are checked at construction; violations throw
 * std::invalid_argument.
 */
class DirectionSet {
public:
    DirectionSet(int dim, std::vector<Offset> offsets, int core_count = 0);

    int dim() const { return dim_; }
    int d1() const { return static_cast<int>(offsets_.size()); }
    int core_count() const { return core_count_; }

    // unsigned access, k in [1, d1]
    const Offset& offset(int k) const { return offsets_[static_cast<size_t>(k - 1)]; }
    // signed access, k in [-d1, d1]; k == 0 yields the zero vector
    Offset signed_offset(int k) const;

    // max |e|_inf over the family
    int stencil_reach() const { return reach_; }

    const std::vector<Offset>& offsets() const { return offsets_; }

    bool operator==(const DirectionSet& o) const {
        return dim_ == o.dim_ && offsets_ == o.offsets_ && core_count_ == o.core_count_;
    }

    std::string describe() const;

private:
    void check_invariants() const;

    int dim_ = 0;
    std::vector<Offset> offsets_;
    int core_count_ = 0;
    int reach_ = 0;
};

// Canonical scheme sets (reach 1):
//   dim 2: e1, e2, e1+e2, e1-e2 (d1 = 4, core = axes)
//   dim 3: e1, e2, e3, e_i +/- e_j for i < j (d1 = 9, core = axes)
DirectionSet canonical_directions(int dim);

// All primitive integer vectors with |e|_inf <= reach, one per +/- pair.
// Rich sets for decomposing strongly anisotropic matrices; no core designated.
DirectionSet extended_directions(int dim, int reach);

}  // namespace hjb
