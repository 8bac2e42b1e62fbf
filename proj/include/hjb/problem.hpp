#pragma once

#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "hjb/decompose.hpp"
#include "hjb/differences.hpp"
#include "hjb/directions.hpp"
#include "hjb/geometry.hpp"

namespace hjb {

/**
 * Coefficient oracle: for control alpha at point x, fill
 *   a[0..d1)        second-difference weights per unsigned direction,
 *   b_plus[0..d1)   forward-difference weights for +e_k,
 *   b_minus[0..d1)  forward-difference weights for -e_k,
 * and set c (zeroth order, stored >= 0, enters as -c v) and f (source).
 *
 * Convention: a_k multiplies the symmetric second difference along e_k once
 * per unsigned direction, so sum_k a_k D^2_{e_k} reproduces the matrix
 * sum_k a_k e_k e_k^T. Drift weights are per signed direction.
 */
using CoeffOracle = std::function<void(int ctrl, const double* x, double* a, double* b_plus,
                                       double* b_minus, double& c, double& f)>;

struct BellmanProblem {
    std::string name;
    std::string description;
    Domain domain;
    DirectionSet dirs = canonical_directions(2);
    int n_controls = 1;
    bool has_drift = false;
    CoeffOracle coeffs;
    ScalarField boundary_g;

    double delta = 0.0;   // floor for the positive second-difference weights
    double min_c = 0.0;   // lower bound for c; comparison/a-priori constant
    double big_k = 0.0;   // C^{1,1}-style data bound (sampled estimate for built-ins)
    bool outside_theory = false;  // set when min_c == 0 was explicitly permitted

    ScalarField exact_solution;   // empty unless manufactured
    nlohmann::json params;        // construction parameters (catalogue echo)
};

struct ValidationIssue {
    std::string condition;  // "a_floor" | "c_nonneg" | "drift_monotone" | "empty_interior"
    int control = 0;
    Point x{0, 0, 0};
    int k = 0;  // signed direction index when relevant
    double lhs = 0, rhs = 0;
};

struct ValidationReport {
    bool pass = false;
    std::vector<ValidationIssue> issues;  // capped; first offenders
    long issue_count = 0;
    double max_admissible_h = 0;  // from h |b_k| <= a_k over the sample; inf -> huge
    double theory_window_h = 0;   // delta / big_k when both known
    long sampled_nodes = 0;
    int controls = 0;
    std::string summary() const;
};

// Monotonicity / ellipticity audit of the scheme coefficients at mesh h over
// a node sample and all controls. Never throws for data problems: an
// un-discretisable h (no interior node) comes back as a failed report.
ValidationReport validate_problem(const BellmanProblem& p, double h);

// Sampled Lipschitz/sup bound over the data (a, b, c, f, g); deterministic.
double estimate_big_k(const BellmanProblem& p, int n_samples, std::uint64_t seed);

// exact solution sin(pi x1) sin(pi x2) with certified directional bounds
SmoothField sinsin_field();

/**
 * Single-control linear problem manufactured from a known solution:
 * coefficients from decompose_matrix(a_matrix), b = 0, c = c0,
 * f = c0 * exact - sum_k lambda_k D^2_{e_k} exact, g = exact.
 */
BellmanProblem builtin_linear_manufactured(const Domain& dom, const SmoothField& exact,
                                           const SymMatrix& a_matrix, double c0);

// Two-control genuinely nonlinear example: a in {I, [[2,1],[1,2]]} with
// sources 1 +/- 2 x1, c = 1, g = 0.
BellmanProblem builtin_two_control(const Domain& dom);

/**
 * Regularised Monge-Ampere example: sup over trace-1 PSD controls
 * a(theta, s) = R(theta) diag(s, 1-s) R(theta)^T of
 *   (a + gamma^2 I) : D^2 v + 2 sqrt(s(1-s)) f(x) - c0 v = 0.
 * Controls enumerate a nested Halton sequence in (theta, s), so growing
 * n_controls only ever enlarges the control set. c0 = 0 is permitted only
 * with allow_zero_c0 (flags the problem outside_theory).
 */
BellmanProblem builtin_monge_ampere(const Domain& dom, double gamma, const ScalarField& f_field,
                                    int n_controls, double c0, bool allow_zero_c0 = false);

struct ProblemInfo {
    std::string name;
    std::string description;
    nlohmann::json defaults;  // parameter schema with default values
};

std::vector<ProblemInfo> list_problems();

// Instantiate a catalogue problem; params override the defaults. Unknown
// names or parameter keys throw std::invalid_argument.
BellmanProblem make_problem(const std::string& name, const nlohmann::json& params);

}  // namespace hjb
