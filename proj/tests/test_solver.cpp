#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <bit>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "hjb/problem.hpp"
#include "hjb/solver.hpp"

using namespace hjb;

namespace {

// single-control problem with constant coefficients on the canonical 2D stencil:
// a over (e1, e2, e1+e2, e1-e2), optional drift along e1/e2, zeroth order c0
BellmanProblem constant_problem(std::array<double, 4> a, double bp0, double bm1, double c0,
                                ScalarField f, ScalarField g, double radius = 1.0) {
    BellmanProblem p;
    p.name = "constant-test";
    p.domain = disk_domain(radius);
    p.dirs = canonical_directions(2);
    p.n_controls = 1;
    p.has_drift = (bp0 != 0.0) || (bm1 != 0.0);
    p.min_c = c0;
    p.delta = *std::min_element(a.begin(), a.begin() + 2);
    p.big_k = 10.0;
    p.coeffs = [=](int, const double*, double* pa, double* pbp, double* pbm, double& c,
                   double& pf_out) {
        for (int k = 0; k < 4; ++k) pa[k] = a[static_cast<size_t>(k)];
        if (pbp) std::fill(pbp, pbp + 4, 0.0);
        if (pbm) std::fill(pbm, pbm + 4, 0.0);
        if (pbp) pbp[0] = bp0;
        if (pbm) pbm[1] = bm1;
        c = c0;
        pf_out = 0.0;
    };
    if (f) {
        auto base = p.coeffs;
        p.coeffs = [base, f](int ctrl, const double* x, double* pa, double* pbp, double* pbm,
                             double& c, double& pf_out) {
            base(ctrl, x, pa, pbp, pbm, c, pf_out);
            pf_out = f(x);
        };
    }
    p.boundary_g = g ? g : [](const double*) { return 0.0; };
    return p;
}

std::int64_t find_node(const Grid& grid, double x0, double x1) {
    double x[3];
    for (std::int64_t id : grid.interior) {
        grid.coord(id, x);
        if (std::abs(x[0] - x0) < 1e-9 && std::abs(x[1] - x1) < 1e-9) return id;
    }
    return -1;
}

// bitwise equality on the valued nodes; unvalued entries hold NaN and are skipped
bool identical_on_valued(const Grid& grid, const GridFunction& u, const GridFunction& w) {
    auto same = [&](std::int64_t id) {
        return std::bit_cast<std::uint64_t>(u[id]) == std::bit_cast<std::uint64_t>(w[id]);
    };
    for (std::int64_t id : grid.interior)
        if (!same(id)) return false;
    for (std::int64_t id : grid.band)
        if (!same(id)) return false;
    return true;
}

double max_interior_diff(const Grid& grid, const GridFunction& u, const GridFunction& w) {
    double m = 0.0;
    for (std::int64_t id : grid.interior) m = std::max(m, std::abs(u[id] - w[id]));
    return m;
}

// dense direct solve of the linear system behind a single-control problem,
// assembled straight from the coefficient oracle and eliminated with partial
// pivoting; fully independent of the iterative solver internals
GridFunction dense_reference_solve(const BellmanProblem& p, GridPtr grid) {
    REQUIRE(p.n_controls == 1);
    const Grid& g = *grid;
    const double h = g.h, h2 = h * h;
    const int d1 = p.dirs.d1();

    std::map<std::int64_t, int> row_of;
    for (std::int64_t id : g.interior) {
        const int r = static_cast<int>(row_of.size());
        row_of[id] = r;
    }
    const int n = static_cast<int>(row_of.size());

    GridFunction bc = GridFunction::undefined(grid);
    double x[3];
    for (std::int64_t id : g.band) {
        g.coord(id, x);
        bc.v[static_cast<size_t>(id)] = p.boundary_g(x);
    }

    std::vector<double> A(static_cast<size_t>(n) * static_cast<size_t>(n), 0.0);
    std::vector<double> rhs(static_cast<size_t>(n), 0.0);
    std::vector<double> a(static_cast<size_t>(d1)), bp(static_cast<size_t>(d1)),
        bm(static_cast<size_t>(d1));
    auto at = [&](int r, int cidx) -> double& {
        return A[static_cast<size_t>(r) * static_cast<size_t>(n) + static_cast<size_t>(cidx)];
    };
    for (const auto& [id, r] : row_of) {
        g.coord(id, x);
        double c = 0, f = 0;
        std::fill(bp.begin(), bp.end(), 0.0);
        std::fill(bm.begin(), bm.end(), 0.0);
        p.coeffs(0, x, a.data(), bp.data(), bm.data(), c, f);
        rhs[static_cast<size_t>(r)] = -h2 * f;
        double diag = -h2 * c;
        auto add = [&](std::int64_t nb, double w) {
            auto it = row_of.find(nb);
            if (it != row_of.end())
                at(r, it->second) += w;
            else
                rhs[static_cast<size_t>(r)] -= w * bc[nb];
        };
        for (int k = 0; k < d1; ++k) {
            const std::int64_t s = g.dir_step[static_cast<size_t>(k)];
            diag -= 2.0 * a[static_cast<size_t>(k)] +
                    h * (bp[static_cast<size_t>(k)] + bm[static_cast<size_t>(k)]);
            add(id + s, a[static_cast<size_t>(k)] + h * bp[static_cast<size_t>(k)]);
            add(id - s, a[static_cast<size_t>(k)] + h * bm[static_cast<size_t>(k)]);
        }
        at(r, r) += diag;
    }

    // Gaussian elimination with partial pivoting
    std::vector<int> perm(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<size_t>(i)] = i;
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(at(r, col)) > std::abs(at(piv, col))) piv = r;
        REQUIRE(std::abs(at(piv, col)) > 1e-14);
        if (piv != col) {
            for (int cidx = 0; cidx < n; ++cidx) std::swap(at(piv, cidx), at(col, cidx));
            std::swap(rhs[static_cast<size_t>(piv)], rhs[static_cast<size_t>(col)]);
        }
        for (int r = col + 1; r < n; ++r) {
            const double m = at(r, col) / at(col, col);
            if (m == 0.0) continue;
            at(r, col) = 0.0;
            for (int cidx = col + 1; cidx < n; ++cidx) at(r, cidx) -= m * at(col, cidx);
            rhs[static_cast<size_t>(r)] -= m * rhs[static_cast<size_t>(col)];
        }
    }
    std::vector<double> sol(static_cast<size_t>(n), 0.0);
    for (int r = n - 1; r >= 0; --r) {
        double acc = rhs[static_cast<size_t>(r)];
        for (int cidx = r + 1; cidx < n; ++cidx)
            acc -= at(r, cidx) * sol[static_cast<size_t>(cidx)];
        sol[static_cast<size_t>(r)] = acc / at(r, r);
    }

    GridFunction out = bc;
    for (const auto& [id, r] : row_of)
        out.v[static_cast<size_t>(id)] = sol[static_cast<size_t>(r)];
    return out;
}

}  // namespace

TEST_CASE("damping constant matches the frozen closed forms") {
    auto zero = [](const double*) { return 0.0; };

    // a = 1 on all four canonical directions, no drift, c = 0: n0 = 2 * 4 = 8
    BellmanProblem p8 = constant_problem({1, 1, 1, 1}, 0, 0, 0, nullptr, zero);
    GridPtr grid = make_grid(p8.domain, 0.1, p8.dirs);
    SchemeCache k8 = build_cache(p8, grid, 1);
    CHECK(k8.n0 == 8.0);
    CHECK(k8.min_c == 0.0);
    CHECK(k8.max_c == 0.0);

    // adding |b| mass 2 at h = 0.1 contributes h * 2: n0 = 8.2
    BellmanProblem pb = constant_problem({1, 1, 1, 1}, 1.0, 1.0, 0, nullptr, zero);
    SchemeCache kb = build_cache(pb, grid, 1);
    CHECK(kb.n0 == doctest::Approx(8.2).epsilon(1e-15));

    // axes-only a with c = 3 at h = 0.1 contributes c h^2: n0 = 4.03
    BellmanProblem pc = constant_problem({1, 1, 0, 0}, 0, 0, 3.0, nullptr, zero);
    SchemeCache kc = build_cache(pc, grid, 1);
    CHECK(kc.n0 == doctest::Approx(4.03).epsilon(1e-15));
    CHECK(kc.min_c == 3.0);

    CHECK(contraction_bound(8.0, 1.0, 0.1) == doctest::Approx(0.99875).epsilon(1e-15));
    CHECK(contraction_bound(4.0, 0.0, 0.1) == 1.0);
    DampingInfo info = compute_damping(kc);
    CHECK(info.n0 == kc.n0);
    CHECK(info.contraction_bound == doctest::Approx(1.0 - 3.0 * 0.01 / 4.03).epsilon(1e-15));
}

TEST_CASE("cache construction is independent of the thread count") {
    BellmanProblem p = make_problem("two-control", {});
    GridPtr grid = make_grid(p.domain, 0.1, p.dirs);
    SchemeCache k1 = build_cache(p, grid, 1);
    SchemeCache k4 = build_cache(p, grid, 4);
    CHECK(k1.n0 == k4.n0);
    CHECK(k1.min_c == k4.min_c);
    CHECK(k1.max_c == k4.max_c);
    CHECK(k1.data == k4.data);
}

TEST_CASE("operator application reproduces hand-computed values") {
    auto zero = [](const double*) { return 0.0; };
    BellmanProblem p = constant_problem({1, 1, 0, 0}, 0, 0, 1.0, nullptr, zero);
    GridPtr grid = make_grid(p.domain, 0.25, p.dirs);
    SchemeCache cache = build_cache(p, grid, 1);

    GridFunction v = GridFunction::from_callable(
        grid, [](const double* x) { return x[0] * x[0] + x[1] * x[1]; });

    // at (0.5, 0): second differences of |x|^2 are exactly 2 along each axis,
    // so H v = 2 + 2 - 1 * 0.25 + 0 = 3.75
    const std::int64_t node = find_node(*grid, 0.5, 0.0);
    REQUIRE(node >= 0);
    CHECK(bellman_apply(cache, v, node) == doctest::Approx(3.75).epsilon(1e-13));

    // the residual is the sup of |H v| over the interior; at the origin
    // H v = 4 - 0 = 4, which dominates every other node of this paraboloid
    CHECK(bellman_residual(cache, v, 1) == doctest::Approx(4.0).epsilon(1e-13));
    CHECK(bellman_residual(cache, v, 1) == bellman_residual(cache, v, 4));

    CHECK_THROWS_AS(bellman_apply(cache, v, grid->band.front()), std::invalid_argument);
}

TEST_CASE("sup over controls picks the larger bracket") {
    auto zero = [](const double*) { return 0.0; };
    BellmanProblem p = constant_problem({1, 1, 0, 0}, 0, 0, 1.0, nullptr, zero);
    p.n_controls = 2;
    p.coeffs = [](int ctrl, const double*, double* pa, double*, double*, double& c, double& f) {
        pa[0] = pa[1] = 1.0;
        pa[2] = pa[3] = 0.0;
        c = 1.0;
        f = (ctrl == 0) ? 0.0 : -1.0;
    };
    GridPtr grid = make_grid(p.domain, 0.25, p.dirs);
    SchemeCache cache = build_cache(p, grid, 1);
    GridFunction v = GridFunction::from_callable(
        grid, [](const double* x) { return x[0] * x[0] + x[1] * x[1]; });
    const std::int64_t node = find_node(*grid, 0.5, 0.0);
    REQUIRE(node >= 0);
    // brackets are 3.75 and 2.75; the sup keeps 3.75
    CHECK(bellman_apply(cache, v, node) == doctest::Approx(3.75).epsilon(1e-13));

    p.coeffs = [](int ctrl, const double*, double* pa, double*, double*, double& c, double& f) {
        pa[0] = pa[1] = 1.0;
        pa[2] = pa[3] = 0.0;
        c = 1.0;
        f = (ctrl == 0) ? 0.0 : 1.0;
    };
    SchemeCache cache2 = build_cache(p, grid, 1);
    CHECK(bellman_apply(cache2, v, node) == doctest::Approx(4.75).epsilon(1e-13));
}

TEST_CASE("iterative solutions match a dense direct solve on a small grid") {
    SolveOptions opts;
    opts.method = Method::policy;
    opts.tol = 1e-12;

    SUBCASE("pure second-order problem") {
        BellmanProblem p = make_problem("linear-manufactured-disk", {});
        GridPtr grid = make_grid(p.domain, 0.2, p.dirs);
        REQUIRE(grid->interior.size() <= 50);
        REQUIRE(grid->interior.size() >= 20);
        GridFunction ref = dense_reference_solve(p, grid);
        auto [v, rep] = solve(p, grid, opts);
        REQUIRE(rep.converged);
        CHECK(max_interior_diff(*grid, v, ref) <= 1e-8);
    }

    SUBCASE("problem with first-order drift") {
        auto f = [](const double* x) { return 1.0 + x[0] - 0.5 * x[1]; };
        auto g = [](const double* x) { return 0.25 * x[0] * x[1]; };
        BellmanProblem p = constant_problem({1, 1, 0.25, 0.25}, 0.5, 0.25, 1.0, f, g);
        GridPtr grid = make_grid(p.domain, 0.2, p.dirs);
        GridFunction ref = dense_reference_solve(p, grid);
        auto [v, rep] = solve(p, grid, opts);
        REQUIRE(rep.converged);
        CHECK(max_interior_diff(*grid, v, ref) <= 1e-8);
    }
}

TEST_CASE("the three iteration methods agree on the built-in problems") {
    const double tol = 1e-10;
    for (const char* name : {"linear-manufactured-disk", "two-control"}) {
        CAPTURE(name);
        BellmanProblem p = make_problem(name, {});
        GridPtr grid = make_grid(p.domain, 0.1, p.dirs);
        const SchemeCache cache = build_cache(p, grid, 1);

        std::vector<GridFunction> sols;
        for (Method m : {Method::jacobi, Method::gauss_seidel, Method::policy}) {
            SolveOptions opts;
            opts.method = m;
            opts.tol = tol;
            auto [v, rep] = solve_with_cache(p, cache, opts);
            REQUIRE(rep.converged);
            CHECK(rep.final_residual <= tol);
            CHECK(bellman_residual(cache, v, 1) == rep.final_residual);
            sols.push_back(std::move(v));
        }
        for (size_t i = 0; i < sols.size(); ++i)
            for (size_t j = i + 1; j < sols.size(); ++j)
                CHECK(max_interior_diff(*grid, sols[i], sols[j]) <= 10 * tol);
    }
}

TEST_CASE("solves are deterministic run to run and across thread counts") {
    BellmanProblem p = make_problem("two-control", {});
    GridPtr grid = make_grid(p.domain, 0.1, p.dirs);
    for (Method m : {Method::jacobi, Method::gauss_seidel, Method::policy}) {
        SolveOptions o1;
        o1.method = m;
        o1.tol = 1e-9;
        SolveOptions o4 = o1;
        o4.threads = 4;
        auto [v1, r1] = solve(p, grid, o1);
        auto [v1b, r1b] = solve(p, grid, o1);
        auto [v4, r4] = solve(p, grid, o4);
        REQUIRE(r1.converged);
        CHECK(identical_on_valued(*grid, v1, v1b));
        CHECK(r1.iterations == r1b.iterations);
        CHECK(identical_on_valued(*grid, v1, v4));
        CHECK(r1.iterations == r4.iterations);
        CHECK(r1.final_residual == r4.final_residual);
    }
}

TEST_CASE("damped iterates contract at the predicted rate") {
    BellmanProblem p = make_problem("linear-manufactured-disk", {});
    GridPtr grid = make_grid(p.domain, 0.2, p.dirs);
    SolveOptions opts;
    opts.method = Method::jacobi;
    opts.tol = 1e-11;
    auto [v, rep] = solve(p, grid, opts);
    REQUIRE(rep.converged);
    const double kappa = rep.contraction_bound;
    CHECK(kappa == contraction_bound(rep.n0, rep.min_c, grid->h));
    CHECK(kappa < 1.0);

    // successive sup-changes shrink at least by the contraction factor
    REQUIRE(rep.sup_change_history.size() >= 10);
    for (size_t i = 1; i < rep.sup_change_history.size(); ++i) {
        const double prev = rep.sup_change_history[i - 1];
        const double cur = rep.sup_change_history[i];
        if (prev < 1e-13) continue;
        CHECK(cur <= kappa * prev + 1e-15);
    }

    // the recorded residual and sup-change maximize the same update, so they
    // differ only by the fixed factor n0 / h^2
    const double h2 = grid->h * grid->h;
    REQUIRE(rep.residual_history.size() == rep.sup_change_history.size() + 1);
    for (size_t i = 0; i < rep.sup_change_history.size(); ++i) {
        const double lhs = rep.sup_change_history[i] * rep.n0;
        const double rhs = rep.residual_history[i] * h2;
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }

    // residuals themselves decay monotonically up to roundoff
    for (size_t i = 1; i < rep.residual_history.size(); ++i)
        CHECK(rep.residual_history[i] <= rep.residual_history[i - 1] * (1 + 1e-10) + 1e-15);
}

TEST_CASE("the damped update is monotone in its input") {
    BellmanProblem p = make_problem("two-control", {});
    GridPtr grid = make_grid(p.domain, 0.2, p.dirs);
    SchemeCache cache = build_cache(p, grid, 1);

    GridFunction g = GridFunction::undefined(grid);
    double x[3];
    for (std::int64_t id : grid->band) {
        grid->coord(id, x);
        g.v[static_cast<size_t>(id)] = p.boundary_g(x);
    }

    std::mt19937_64 rng(321);
    std::uniform_real_distribution<double> base(-1.0, 1.0), bump(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        GridFunction u = GridFunction::zeros(grid);
        GridFunction w = GridFunction::zeros(grid);
        for (std::int64_t id : grid->interior) {
            const double b = base(rng);
            u.v[static_cast<size_t>(id)] = b;
            w.v[static_cast<size_t>(id)] = b + bump(rng);
        }
        for (std::int64_t id : grid->band) {
            const double b = base(rng);
            u.v[static_cast<size_t>(id)] = b;
            w.v[static_cast<size_t>(id)] = b + bump(rng);
        }
        GridFunction nu = jacobi_step(cache, u, g, cache.n0, nullptr, 1);
        GridFunction nw = jacobi_step(cache, w, g, cache.n0, nullptr, 1);
        for (std::int64_t id : grid->interior) CHECK(nu[id] <= nw[id] + 1e-12);
    }
}

TEST_CASE("discrete comparison principle holds for random value pairs") {
    std::mt19937_64 rng(9001);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (const char* name : {"linear-manufactured-disk", "two-control"}) {
        CAPTURE(name);
        BellmanProblem p = make_problem(name, {});
        GridPtr grid = make_grid(p.domain, 0.1, p.dirs);
        SchemeCache cache = build_cache(p, grid, 1);
        for (int trial = 0; trial < 100; ++trial) {
            GridFunction v1 = GridFunction::zeros(grid);
            GridFunction v2 = GridFunction::zeros(grid);
            auto fill = [&](GridFunction& v) {
                for (std::int64_t id : grid->interior)
                    v.v[static_cast<size_t>(id)] = dist(rng);
                for (std::int64_t id : grid->band) v.v[static_cast<size_t>(id)] = dist(rng);
            };
            fill(v1);
            fill(v2);
            ComparisonResult r = comparison_check(cache, v1, v2);
            CHECK(r.pass);
            CHECK(r.slack >= -1e-12 * std::max(1.0, std::abs(r.rhs)));
            CHECK(r.rhs == doctest::Approx(r.interior_term / cache.min_c + r.band_term));
        }
    }
}

TEST_CASE("comparison terms take frozen values on a constant shift") {
    BellmanProblem p = make_problem("linear-manufactured-disk", {});
    GridPtr grid = make_grid(p.domain, 0.2, p.dirs);
    SchemeCache cache = build_cache(p, grid, 1);
    SolveOptions opts;
    opts.tol = 1e-11;
    auto [v, rep] = solve(p, grid, opts);
    REQUIRE(rep.converged);

    SUBCASE("identical functions give zero slack components") {
        ComparisonResult r = comparison_check(cache, v, v);
        CHECK(r.lhs == 0.0);
        CHECK(r.band_term == 0.0);
        CHECK(r.interior_term == 0.0);
        CHECK(r.pass);
    }

    SUBCASE("shifting by a constant is matched exactly through c = 1") {
        GridFunction w = v;
        for (double& val : w.v)
            if (!std::isnan(val)) val += 0.3;
        // lhs = 0.3; the interior term picks up c * 0.3 = 0.3, the band 0.3
        ComparisonResult r = comparison_check(cache, w, v);
        CHECK(r.lhs == doctest::Approx(0.3).epsilon(1e-12));
        CHECK(r.band_term == doctest::Approx(0.3).epsilon(1e-12));
        CHECK(r.interior_term == doctest::Approx(0.3).epsilon(1e-9));
        CHECK(r.slack == doctest::Approx(0.3).epsilon(1e-9));
        CHECK(r.pass);
    }
}

TEST_CASE("converged solutions satisfy the a-priori sup bound") {
    for (const auto& info : list_problems()) {
        CAPTURE(info.name);
        BellmanProblem p = make_problem(info.name, {});
        GridPtr grid = make_grid(p.domain, 0.1, p.dirs);
        SchemeCache cache = build_cache(p, grid, 1);
        SolveOptions opts;
        opts.tol = 1e-9;
        auto [v, rep] = solve_with_cache(p, cache, opts);
        REQUIRE(rep.converged);

        GridFunction g = GridFunction::undefined(grid);
        double x[3];
        for (std::int64_t id : grid->band) {
            grid->coord(id, x);
            g.v[static_cast<size_t>(id)] = p.boundary_g(x);
        }
        AprioriResult r = apriori_bound_check(cache, v, g, opts.tol);
        CHECK(r.pass);
        CHECK(r.sup_plus <= r.bound_plus + 10 * opts.tol);
        CHECK(r.sup_minus <= r.bound_minus + 10 * opts.tol);
    }
}

TEST_CASE("zero data yields the zero solution instantly") {
    auto zero = [](const double*) { return 0.0; };
    BellmanProblem p = constant_problem({1, 1, 1, 1}, 0, 0, 1.0, zero, zero);
    GridPtr grid = make_grid(p.domain, 0.1, p.dirs);
    SolveOptions opts;
    opts.method = Method::jacobi;
    auto [v, rep] = solve(p, grid, opts);
    CHECK(rep.converged);
    CHECK(rep.iterations == 0);
    CHECK(rep.final_residual == 0.0);
    for (std::int64_t id : grid->interior) CHECK(v[id] == 0.0);
}

TEST_CASE("relabeling the controls does not change the solution") {
    BellmanProblem p = make_problem("two-control", {});
    BellmanProblem q = p;
    auto base = p.coeffs;
    q.coeffs = [base](int ctrl, const double* x, double* a, double* bp, double* bm, double& c,
                      double& f) { base(1 - ctrl, x, a, bp, bm, c, f); };

    GridPtr grid = make_grid(p.domain, 0.1, p.dirs);
    SolveOptions opts;
    opts.tol = 1e-10;
    auto [vp, rp] = solve(p, grid, opts);
    auto [vq, rq] = solve(q, grid, opts);
    REQUIRE(rp.converged);
    REQUIRE(rq.converged);
    CHECK(max_interior_diff(*grid, vp, vq) <= 10 * opts.tol);
}

TEST_CASE("a dominated control never influences the solution") {
    auto f0 = [](const double* x) { return 5.0 + std::sin(3.0 * x[0]) * x[1]; };
    auto zero = [](const double*) { return 0.0; };
    BellmanProblem single = constant_problem({1, 1, 0, 0}, 0, 0, 1.0, f0, zero);

    BellmanProblem both = single;
    both.n_controls = 2;
    both.coeffs = [f0](int ctrl, const double* x, double* a, double*, double*, double& c,
                       double& f) {
        a[0] = a[1] = 1.0;
        a[2] = a[3] = 0.0;
        c = 1.0;
        f = f0(x) - (ctrl == 1 ? 20.0 : 0.0);
    };

    GridPtr grid = make_grid(single.domain, 0.1, single.dirs);
    SolveOptions opts;
    opts.tol = 1e-10;
    auto [v1, r1] = solve(single, grid, opts);
    auto [v2, r2] = solve(both, grid, opts);
    REQUIRE(r1.converged);
    REQUIRE(r2.converged);
    CHECK(max_interior_diff(*grid, v1, v2) <= 10 * opts.tol);

    // the frozen linear system of the active control is what policy iteration
    // should identify in a single outer step from the converged neighbor value
    SchemeCache cache = build_cache(both, grid, 1);
    GridFunction w = v2;
    PolicyStepResult step = policy_iteration_step(cache, w, 1e-14, 50);
    for (int ctrl : step.policy) CHECK(ctrl == 0);
}

TEST_CASE("monotonicity violations are rejected at solve time") {
    auto zero = [](const double*) { return 0.0; };

    SUBCASE("drift too strong for the mesh") {
        BellmanProblem p = constant_problem({1, 1, 0, 0}, 3.0, 0, 1.0, nullptr, zero);
        GridPtr coarse = make_grid(p.domain, 0.4, p.dirs);
        CHECK_THROWS_WITH_AS(solve(p, coarse, {}),
                             doctest::Contains("monotonicity"), SolverError);
        GridPtr fine = make_grid(p.domain, 0.25, p.dirs);
        auto [v, rep] = solve(p, fine, {});
        CHECK(rep.converged);
    }

    SUBCASE("negative second-difference weight") {
        BellmanProblem p = constant_problem({1, -0.1, 0, 0}, 0, 0, 1.0, nullptr, zero);
        GridPtr grid = make_grid(p.domain, 0.2, p.dirs);
        CHECK_THROWS_WITH_AS(solve(p, grid, {}),
                             doctest::Contains("second-difference"), SolverError);
    }

    SUBCASE("negative zeroth-order coefficient") {
        BellmanProblem p = constant_problem({1, 1, 0, 0}, 0, 0, -1.0, nullptr, zero);
        GridPtr grid = make_grid(p.domain, 0.2, p.dirs);
        CHECK_THROWS_WITH_AS(solve(p, grid, {}),
                             doctest::Contains("zeroth-order"), SolverError);
    }
}

TEST_CASE("iteration budget exhaustion is reported, not thrown") {
    BellmanProblem p = make_problem("linear-manufactured-disk", {});
    GridPtr grid = make_grid(p.domain, 0.1, p.dirs);
    SolveOptions opts;
    opts.method = Method::jacobi;
    opts.max_iter = 5;
    auto [v, rep] = solve(p, grid, opts);
    CHECK_FALSE(rep.converged);
    CHECK(rep.iterations == 5);
    CHECK(rep.final_residual > opts.tol);
    for (std::int64_t id : grid->interior) CHECK(std::isfinite(v[id]));
}

TEST_CASE("solve options are validated") {
    BellmanProblem p = make_problem("linear-manufactured-disk", {});
    GridPtr grid = make_grid(p.domain, 0.2, p.dirs);
    SolveOptions opts;
    opts.tol = 0.0;
    CHECK_THROWS_AS(solve(p, grid, opts), std::invalid_argument);
    opts.tol = -1e-9;
    CHECK_THROWS_AS(solve(p, grid, opts), std::invalid_argument);

    CHECK(method_from_string("jacobi") == Method::jacobi);
    CHECK(method_from_string("gauss-seidel") == Method::gauss_seidel);
    CHECK(method_from_string("gauss_seidel") == Method::gauss_seidel);
    CHECK(method_from_string("policy") == Method::policy);
    CHECK_THROWS_AS(method_from_string("sor"), std::invalid_argument);
}

TEST_CASE("history recording honors the cap") {
    BellmanProblem p = make_problem("linear-manufactured-disk", {});
    GridPtr grid = make_grid(p.domain, 0.1, p.dirs);
    SolveOptions opts;
    opts.method = Method::jacobi;
    opts.max_iter = 50;
    opts.history_cap = 4;
    auto [v, rep] = solve(p, grid, opts);
    CHECK_FALSE(rep.converged);
    CHECK(rep.residual_history.size() == 4);
    CHECK(rep.sup_change_history.size() == 4);
}

TEST_CASE("solve reports serialize with the expected shape") {
    BellmanProblem p = make_problem("two-control", {});
    GridPtr grid = make_grid(p.domain, 0.2, p.dirs);
    SolveOptions opts;
    opts.method = Method::policy;
    opts.tol = 1e-9;
    auto [v, rep] = solve(p, grid, opts);
    REQUIRE(rep.converged);
    CHECK(rep.policy_steps >= 1);
    CHECK_FALSE(rep.linear_stagnation);
    CHECK(rep.interior_nodes == static_cast<long>(grid->interior.size()));
    CHECK(rep.band_nodes == static_cast<long>(grid->band.size()));
    CHECK(rep.h == grid->h);

    nlohmann::json j = rep.to_json();
    CHECK(j.at("schema") == "hjb-solve/1");
    CHECK(j.at("method") == "policy");
    CHECK(j.at("converged") == true);
    CHECK(j.at("min_c") == 1.0);
    CHECK(j.at("interior_nodes").get<long>() == rep.interior_nodes);
    CHECK(j.at("n0").get<double>() == rep.n0);
    CHECK(j.at("final_residual").get<double>() <= 1e-9);
    CHECK(j.contains("wall_time_sec"));
    CHECK(j.at("residual_history").is_array());
}

TEST_CASE("policy iteration inner solves flag stagnation at a tiny sweep cap") {
    BellmanProblem p = make_problem("two-control", {});
    GridPtr grid = make_grid(p.domain, 0.2, p.dirs);
    SchemeCache cache = build_cache(p, grid, 1);
    GridFunction v = GridFunction::zeros(grid);
    double x[3];
    for (std::int64_t id : grid->band) {
        grid->coord(id, x);
        v.v[static_cast<size_t>(id)] = p.boundary_g(x);
    }
    PolicyStepResult step = policy_iteration_step(cache, v, 1e-13, 1);
    CHECK(step.stagnated);
    CHECK(step.sweeps == 1);
    CHECK(step.policy.size() == grid->interior.size());
}
