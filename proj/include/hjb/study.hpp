#pragma once

#include <iosfwd>
#include <span>

#include "hjb/solver.hpp"

namespace hjb {

struct ReferenceSpec {
    enum class Kind { exact, fine_grid };
    Kind kind = Kind::exact;
    double h_ref = 0.0;  // fine_grid only; must divide every study h
};

struct FitResult {
    bool defined = false;
    double p_hat = 0.0;
    double intercept = 0.0;      // log-space offset
    double max_residual = 0.0;   // max |log e - fit| over used points
    int points_used = 0;
    std::vector<int> excluded;   // indices dropped for non-positive error
};

// OLS slope of log(error) against log(h). Non-positive errors are excluded;
// fewer than two usable points throws std::invalid_argument.
FitResult fit_rate(std::span<const double> h, std::span<const double> err);

struct MonitorSet {
    double m1 = 0.0;  // max |v - g| / rho over interior
    double m2 = 0.0;  // max |forward difference| over interior, signed dirs
    double m3 = 0.0;  // max (rho - 6 h reach) |delta_i delta_j v| over deep interior
    double m4 = 0.0;  // max |v(x)-v(y)| / (|x-y| + h) over sampled pairs
};

// the four a-priori regularity monitors; deep interior at the given depth,
// pair_samples seeded node pairs for m4
MonitorSet estimate_monitor(const BellmanProblem& p, const GridFunction& v,
                            const GridFunction& g, int deep_depth, int pair_samples,
                            std::uint64_t seed);

// Copy fine-grid values onto a coarser nested grid (same origin; h ratio must
// be an integer). Every coarse interior node must have a valued fine twin
// (throws otherwise); coarse band nodes without a valued twin stay NaN, so
// the result is complete on the interior only.
GridFunction restrict_to_coarse(const GridFunction& fine, GridPtr coarse);

struct StudyRow {
    double h = 0.0;
    double error = 0.0;
    MonitorSet monitors;
    long interior_nodes = 0;
    SolveReport solve_report;
};

struct StudyReport {
    std::string problem;
    ReferenceSpec reference;
    std::vector<StudyRow> rows;  // same order as the h list
    FitResult fit;
    std::uint64_t seed = 0;
    std::string method;
    double tol = 0.0;

    nlohmann::json to_json() const;
};

// A solve failed partway through a study; rows completed before the failure
// ride along so callers can keep partial artifacts.
struct StudyError : SolverError {
    StudyError(const std::string& msg, StudyReport partial_report)
        : SolverError(msg), partial(std::move(partial_report)) {}
    StudyReport partial;
};

/**
 * Sweep the mesh sizes, solve, and measure sup-norm errors on each grid's
 * interior against the reference (exact callable, or a fine-grid solve at
 * h_ref restricted by exact node coincidence). h_list must be positive and
 * strictly decreasing; fine references must nest (integer ratios). The rate
 * fit is flagged undefined instead of failing when errors vanish; a solve
 * that fails to converge raises StudyError with the completed rows attached.
 */
StudyReport run_convergence_study(const BellmanProblem& p, const std::vector<double>& h_list,
                                  const ReferenceSpec& ref, const SolveOptions& opts,
                                  std::uint64_t seed = 20240801ull);

// machine artifacts
void write_study_csv(const StudyReport& rep, std::ostream& os);
void write_study_svg(const StudyReport& rep, std::ostream& os);  // log-log error plot

constexpr int kDeepInteriorDepth = 3;
constexpr int kMonitorPairSamples = 1000;

}  // namespace hjb
