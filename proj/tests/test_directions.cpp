#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <numeric>
#include <set>

#include "hjb/directions.hpp"

using namespace hjb;

namespace {

// independent enumeration of primitive offsets with |e|_inf <= reach,
// one representative per +/- pair (first nonzero component positive)
std::set<Offset> primitive_oracle(int dim, int reach) {
    std::set<Offset> out;
    const int zmax = dim == 3 ? reach : 0;
    for (int x = -reach; x <= reach; ++x)
        for (int y = -reach; y <= reach; ++y)
            for (int z = -zmax; z <= zmax; ++z) {
                if (x == 0 && y == 0 && z == 0) continue;
                if (std::gcd(std::gcd(std::abs(x), std::abs(y)), std::abs(z)) != 1) continue;
                Offset e{x, y, z};
                Offset n{-x, -y, -z};
                out.insert(std::max(e, n));  // lexicographic pick is sign-canonical here
            }
    return out;
}

}  // namespace

TEST_CASE("canonical 2D set: axes plus both diagonals, axes designated core") {
    const DirectionSet d = canonical_directions(2);
    CHECK(d.dim() == 2);
    CHECK(d.d1() == 4);
    CHECK(d.core_count() == 2);
    CHECK(d.stencil_reach() == 1);
    CHECK(d.offset(1) == Offset{1, 0, 0});
    CHECK(d.offset(2) == Offset{0, 1, 0});
    CHECK(d.offset(3) == Offset{1, 1, 0});
    CHECK(d.offset(4) == Offset{1, -1, 0});
}

TEST_CASE("canonical 3D set: three axes plus the six axis-pair diagonals") {
    const DirectionSet d = canonical_directions(3);
    CHECK(d.dim() == 3);
    CHECK(d.d1() == 9);
    CHECK(d.core_count() == 3);
    CHECK(d.stencil_reach() == 1);
    std::set<Offset> got(d.offsets().begin(), d.offsets().end());
    std::set<Offset> want{{1, 0, 0}, {0, 1, 0}, {0, 0, 1},  {1, 1, 0}, {1, -1, 0},
                          {1, 0, 1}, {1, 0, -1}, {0, 1, 1}, {0, 1, -1}};
    CHECK(got == want);
}

TEST_CASE("canonical_directions rejects unsupported dimensions") {
    CHECK_THROWS_AS(canonical_directions(1), std::invalid_argument);
    CHECK_THROWS_AS(canonical_directions(4), std::invalid_argument);
}

TEST_CASE("signed index maps to the offset, its negation, or zero") {
    const DirectionSet d = canonical_directions(2);
    CHECK(d.signed_offset(3) == Offset{1, 1, 0});
    CHECK(d.signed_offset(-3) == Offset{-1, -1, 0});
    CHECK(d.signed_offset(-1) == Offset{-1, 0, 0});
    CHECK(d.signed_offset(0) == Offset{0, 0, 0});
}

TEST_CASE("extended sets enumerate exactly the primitive offsets up to the reach") {
    for (int dim = 2; dim <= 3; ++dim) {
        for (int reach = 1; reach <= 3; ++reach) {
            CAPTURE(dim);
            CAPTURE(reach);
            const DirectionSet d = extended_directions(dim, reach);
            const std::set<Offset> want = primitive_oracle(dim, reach);
            std::set<Offset> got;
            for (const Offset& e : d.offsets()) {
                Offset n{-e[0], -e[1], -e[2]};
                got.insert(std::max(e, n));
            }
            CHECK(got.size() == d.offsets().size());  // sign-canonical, no +/- clashes
            CHECK(got == want);
            CHECK(d.stencil_reach() == reach);
            CHECK(d.core_count() == 0);
        }
    }
    // frozen counts used throughout: rich enough for eigenvalues in [0.2, 5]
    CHECK(extended_directions(2, 3).d1() == 16);
    CHECK(extended_directions(3, 3).d1() == 145);
}

TEST_CASE("constructor rejects degenerate families") {
    CHECK_THROWS_AS(DirectionSet(2, {}), std::invalid_argument);
    CHECK_THROWS_AS(DirectionSet(2, {{0, 0, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(DirectionSet(2, {{1, 0, 0}, {1, 0, 0}}), std::invalid_argument);
    // +/- duplicate
    CHECK_THROWS_AS(DirectionSet(2, {{1, 0, 0}, {-1, 0, 0}}), std::invalid_argument);
    // collinear, does not span R^2
    CHECK_THROWS_AS(DirectionSet(2, {{1, 0, 0}, {2, 0, 0}}), std::invalid_argument);
    // third axis used in a 2D set
    CHECK_THROWS_AS(DirectionSet(2, {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(DirectionSet(2, {{1, 0, 0}, {0, 1, 0}}, 3), std::invalid_argument);
}

TEST_CASE("core closure: distinct core sums must stay inside the family") {
    // the diagonal (1,-1) is a distinct sum of core vectors but missing here
    CHECK_THROWS_AS(DirectionSet(2, {{1, 0, 0}, {0, 1, 0}, {1, 1, 0}}, 2),
                    std::invalid_argument);
    // and the family may not escape core + core: (2,1) is not a sum of
    // {0, +/-e1, +/-e2}
    CHECK_THROWS_AS(DirectionSet(2, {{1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {1, -1, 0}, {2, 1, 0}},
                                 2),
                    std::invalid_argument);
    // the canonical families themselves satisfy the closure
    CHECK_NOTHROW(canonical_directions(2));
    CHECK_NOTHROW(canonical_directions(3));
}

TEST_CASE("describe mentions the family shape") {
    const std::string s = canonical_directions(2).describe();
    CHECK(s.find("dim 2") != std::string::npos);
    CHECK(s.find("d1 4") != std::string::npos);
}
