#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "hjb/grid.hpp"
#include "hjb/problem.hpp"

namespace hjb {

enum class Method { jacobi, gauss_seidel, policy };

Method method_from_string(const std::string& s);
std::string method_name(Method m);

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/**
 * Frozen per-(interior node, control) scheme coefficients.
 *
 * Layout per (slot, control) block: a[0..d1), then when has_drift
 * b_plus[0..d1) and b_minus[0..d1), then c, f. Slot order equals
 * grid->interior order. n0 is the damping constant
 *   max over (node, control) of (2 sum_k a_k + h sum_k |b_k| + c h^2),
 * which keeps every weight of the damped update nonnegative, including the
 * centre one.
 */
struct SchemeCache {
    GridPtr grid;
    int n_controls = 1;
    bool has_drift = false;
    int d1 = 0;
    int block = 0;
    std::vector<double> data;
    double n0 = 0.0;
    double min_c = 0.0;
    double max_c = 0.0;

    const double* entry(std::int64_t slot, int ctrl) const {
        return data.data() + (slot * n_controls + ctrl) * block;
    }
    double c_at(std::int64_t slot, int ctrl) const {
        return entry(slot, ctrl)[block - 2];
    }
    double f_at(std::int64_t slot, int ctrl) const {
        return entry(slot, ctrl)[block - 1];
    }
};

SchemeCache build_cache(const BellmanProblem& p, GridPtr grid, int threads = 1);

struct DampingInfo {
    double n0 = 0.0;
    double contraction_bound = 0.0;  // 1 - min_c h^2 / n0
};

// formula form, exposed for direct checks
double contraction_bound(double n0, double min_c, double h);

DampingInfo compute_damping(const SchemeCache& cache);

// H_h[v](x) = max over controls of (a.D2 + b.D1 - c v + f), equation units
double bellman_apply(const SchemeCache& cache, const GridFunction& v, std::int64_t node);

// sup over interior of |H_h[v]|
double bellman_residual(const SchemeCache& cache, const GridFunction& v, int threads = 1);

// one damped fixed-point step: v + n0^{-1} h^2 H[v] on interior, g on band;
// sup_change = max |v_next - v| over valued nodes
GridFunction jacobi_step(const SchemeCache& cache, const GridFunction& v,
                         const GridFunction& g, double n0, double* sup_change,
                         int threads = 1);

struct SolveOptions {
    Method method = Method::policy;
    double tol = 1e-9;
    long max_iter = 2000000;
    int threads = 1;
    long history_cap = 0;  // 0 = keep everything
};

struct SolveReport {
    std::string method;
    bool converged = false;
    long iterations = 0;     // jacobi steps / GS sweeps incl. policy inner sweeps
    long policy_steps = 0;   // outer policy improvements (policy method only)
    double final_residual = 0.0;
    double n0 = 0.0;
    double contraction_bound = 0.0;
    double min_c = 0.0;
    bool linear_stagnation = false;  // a policy inner solve hit its sweep cap
    std::vector<double> sup_change_history;
    std::vector<double> residual_history;
    double wall_time_sec = 0.0;  // volatile; excluded from determinism checks
    long interior_nodes = 0;
    long band_nodes = 0;
    double h = 0.0;

    nlohmann::json to_json() const;
};

// Solve sup_alpha[a.D2 + b.D1 - c v + f] = 0 on the interior with v = g on
// the band, starting from zero. Throws SolverError when the cached
// coefficients violate the monotonicity inequalities at this h. A run that
// exhausts max_iter returns converged = false with the best iterate.
std::pair<GridFunction, SolveReport> solve(const BellmanProblem& p, GridPtr grid,
                                           const SolveOptions& opts);

// same, reusing a prebuilt cache
std::pair<GridFunction, SolveReport> solve_with_cache(const BellmanProblem& p,
                                                      const SchemeCache& cache,
                                                      const SolveOptions& opts);

struct PolicyStepResult {
    std::vector<int> policy;  // argmax control per interior slot
    long sweeps = 0;
    bool stagnated = false;
};

// one outer policy improvement: greedy argmax (ties -> lowest control index)
// then Gauss-Seidel sweeps on the frozen linear system until the sweep
// change drops below inner_change_tol or sweep_cap is hit. v is updated in
// place; band values must already be set.
PolicyStepResult policy_iteration_step(const SchemeCache& cache, GridFunction& v,
                                       double inner_change_tol, long sweep_cap);

struct ComparisonResult {
    double lhs = 0.0;            // sup (v1 - v2)_+
    double interior_term = 0.0;  // sup over interior (H[v2] - H[v1])_+
    double band_term = 0.0;      // sup over band (v1 - v2)_+
    double rhs = 0.0;            // interior_term / min_c + band_term
    double slack = 0.0;          // rhs - lhs
    bool pass = false;
};

// discrete comparison inequality for two arbitrary grid functions
ComparisonResult comparison_check(const SchemeCache& cache, const GridFunction& v1,
                                  const GridFunction& v2);

struct AprioriResult {
    double sup_plus = 0.0, bound_plus = 0.0;
    double sup_minus = 0.0, bound_minus = 0.0;
    bool pass = false;
};

// sup v_+ <= min_c^{-1} sup (H[0])_+ + sup g_+ and the mirror image, with
// tolerance inflation 10 * tol for solver-accurate iterates
AprioriResult apriori_bound_check(const SchemeCache& cache, const GridFunction& v,
                                  const GridFunction& g, double tol);

}  // namespace hjb
