#include "hjb/directions.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace hjb {

namespace {

Offset negate(const Offset& e) { return {-e[0], -e[1], -e[2]}; }

Offset add(const Offset& a, const Offset& b) {
    return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

bool is_zero(const Offset& e) { return e[0] == 0 && e[1] == 0 && e[2] == 0; }

// rank over the rationals via fraction-free Gaussian elimination
int int_rank(std::vector<Offset> rows, int dim) {
    int rank = 0;
    for (int col = 0; col < dim && rank < static_cast<int>(rows.size()); ++col) {
        int pivot = -1;
        for (int r = rank; r < static_cast<int>(rows.size()); ++r) {
            if (rows[static_cast<size_t>(r)][static_cast<size_t>(col)] != 0) { pivot = r; break; }
        }
        if (pivot < 0) continue;
        std::swap(rows[static_cast<size_t>(rank)], rows[static_cast<size_t>(pivot)]);
        const auto& p = rows[static_cast<size_t>(rank)];
        for (int r = rank + 1; r < static_cast<int>(rows.size()); ++r) {
            auto& q = rows[static_cast<size_t>(r)];
            int qc = q[static_cast<size_t>(col)];
            if (qc == 0) continue;
            int pc = p[static_cast<size_t>(col)];
            for (int c = 0; c < dim; ++c)
                q[static_cast<size_t>(c)] = q[static_cast<size_t>(c)] * pc - p[static_cast<size_t>(c)] * qc;
        }
        ++rank;
    }
    return rank;
}

}  // namespace

DirectionSet::DirectionSet(int dim, std::vector<Offset> offsets, int core_count)
    : dim_(dim), offsets_(std::move(offsets)), core_count_(core_count) {
    check_invariants();
    for (const auto& e : offsets_)
        for (int c = 0; c < dim_; ++c) reach_ = std::max(reach_, std::abs(e[static_cast<size_t>(c)]));
}

Offset DirectionSet::signed_offset(int k) const {
    if (k == 0) return {0, 0, 0};
    if (k > 0) return offset(k);
    return negate(offset(-k));
}

void DirectionSet::check_invariants() const {
    if (dim_ < 1 || dim_ > 3) throw std::invalid_argument("direction set: dim must be 1..3");
    if (offsets_.empty()) throw std::invalid_argument("direction set: no offsets");
    if (core_count_ < 0 || core_count_ > d1())
        throw std::invalid_argument("direction set: core_count out of range");

    std::set<Offset> seen;
    for (const auto& e : offsets_) {
        if (is_zero(e)) throw std::invalid_argument("direction set: zero offset in family");
        for (int c = dim_; c < 3; ++c)
            if (e[static_cast<size_t>(c)] != 0)
                throw std::invalid_argument("direction set: offset uses axis beyond dim");
        if (!seen.insert(e).second || seen.count(negate(e)))
            throw std::invalid_argument("direction set: duplicate or +/- duplicate offset");
    }

    if (int_rank(offsets_, dim_) != dim_)
        throw std::invalid_argument("direction set: offsets do not span R^dim");

    if (core_count_ > 0) {
        // L = {0, +/- e_k : k <= core_count}; Lambda = {0, +/- e_k : k <= d1}
        std::set<Offset> core{{0, 0, 0}}, lambda{{0, 0, 0}};
        for (int k = 1; k <= core_count_; ++k) {
            core.insert(offset(k));
            core.insert(negate(offset(k)));
        }
        for (int k = 1; k <= d1(); ++k) {
            lambda.insert(offset(k));
            lambda.insert(negate(offset(k)));
        }
        std::set<Offset> sums, distinct_sums;
        for (const auto& a : core)
            for (const auto& b : core) {
                sums.insert(add(a, b));
                if (a != b) distinct_sums.insert(add(a, b));
            }
        for (const auto& e : lambda)
            if (!sums.count(e))
                throw std::invalid_argument("direction set: family not contained in core + core");
        for (const auto& e : distinct_sums)
            if (!lambda.count(e))
                throw std::invalid_argument(
                    "direction set: distinct core sums escape the family");
    }
}

std::string DirectionSet::describe() const {
    std::ostringstream os;
    os << "dim " << dim_ << ", d1 " << d1() << ", reach " << reach_;
    if (core_count_ > 0) os << ", core " << core_count_;
    return os.str();
}

DirectionSet canonical_directions(int dim) {
    if (dim == 2) {
        return DirectionSet(2, {{1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {1, -1, 0}}, 2);
    }
    if (dim == 3) {
        return DirectionSet(3,
                            {{1, 0, 0},
                             {0, 1, 0},
                             {0, 0, 1},
                             {1, 1, 0},
                             {1, -1, 0},
                             {1, 0, 1},
                             {1, 0, -1},
                             {0, 1, 1},
                             {0, 1, -1}},
                            3);
    }
    throw std::invalid_argument("canonical_directions: dim must be 2 or 3");
}

DirectionSet extended_directions(int dim, int reach) {
    if (dim < 2 || dim > 3) throw std::invalid_argument("extended_directions: dim must be 2 or 3");
    if (reach < 1) throw std::invalid_argument("extended_directions: reach must be >= 1");
    std::vector<Offset> out;
    Offset e{0, 0, 0};
    const int zmax = (dim == 3) ? reach : 0;
    for (int x = -reach; x <= reach; ++x)
        for (int y = -reach; y <= reach; ++y)
            for (int z = -zmax; z <= zmax; ++z) {
                e = {x, y, z};
                if (is_zero(e)) continue;
                // canonical sign: first nonzero component positive
                int lead = (x != 0) ? x : (y != 0 ? y : z);
                if (lead < 0) continue;
                int g = std::gcd(std::gcd(std::abs(x), std::abs(y)), std::abs(z));
                if (g != 1) continue;
                out.push_back(e);
            }
    std::sort(out.begin(), out.end());
    return DirectionSet(dim, std::move(out), 0);
}

}  // namespace hjb
