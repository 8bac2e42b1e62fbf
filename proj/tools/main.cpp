// command-line driver: problem catalogue, solves, convergence studies,
// property-check suites, matrix decomposition

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hjb/decompose.hpp"
#include "hjb/differences.hpp"
#include "hjb/io.hpp"
#include "hjb/problem.hpp"
#include "hjb/solver.hpp"
#include "hjb/study.hpp"

namespace {

using nlohmann::json;
using namespace hjb;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;  // solver / computation failure
constexpr int kExitConfig = 2;   // config, parse, validation errors

// One fully defaulted record drives every command; flags override file values.
struct RunConfig {
    std::string command = "solve";
    std::string problem = "linear-manufactured-disk";
    json params = json::object();
    double h = 0.1;
    std::vector<double> h_list = {0.1, 0.05, 0.025, 0.0125};
    std::string method = "policy";
    double tol = 1e-9;
    long max_iter = 2000000;
    int threads = 1;
    std::uint64_t seed = 20240801;
    std::string reference = "auto";  // auto | exact | fine
    double h_ref = 0.0;              // 0 = (min h)/2 when a fine reference is used
    double rate_floor = 0.61;
    std::string output_dir = ".";
    bool plot = false;
    std::vector<std::string> suites = {"comparison", "apriori", "decomposition", "taylor"};
    int trials = 100;
    std::vector<double> matrix;  // upper triangle: 3 values = 2D, 6 values = 3D
    int reach = 3;
};

json config_to_json(const RunConfig& c) {
    json j;
    j["command"] = c.command;
    j["problem"] = c.problem;
    j["params"] = c.params;
    j["h"] = c.h;
    j["h_list"] = c.h_list;
    j["method"] = c.method;
    j["tol"] = c.tol;
    j["max_iter"] = c.max_iter;
    j["threads"] = c.threads;
    j["seed"] = c.seed;
    j["reference"] = c.reference;
    j["h_ref"] = c.h_ref;
    j["rate_floor"] = c.rate_floor;
    j["output_dir"] = c.output_dir;
    j["plot"] = c.plot;
    j["suites"] = c.suites;
    j["trials"] = c.trials;
    j["matrix"] = c.matrix;
    j["reach"] = c.reach;
    return j;
}

void apply_config_json(RunConfig& c, const json& j) {
    if (!j.is_object()) throw std::invalid_argument("config root must be a JSON object");
    static const char* known =
        "command, problem, params, h, h_list, method, tol, max_iter, threads, seed, "
        "reference, h_ref, rate_floor, output_dir, plot, suites, trials, matrix, reach";
    for (const auto& [key, val] : j.items()) {
        try {
            if (key == "command") c.command = val.get<std::string>();
            else if (key == "problem") c.problem = val.get<std::string>();
            else if (key == "params") {
                if (!val.is_object())
                    throw std::invalid_argument("config key 'params' must be an object");
                c.params = val;
            }
            else if (key == "h") c.h = val.get<double>();
            else if (key == "h_list") c.h_list = val.get<std::vector<double>>();
            else if (key == "method") c.method = val.get<std::string>();
            else if (key == "tol") c.tol = val.get<double>();
            else if (key == "max_iter") c.max_iter = val.get<long>();
            else if (key == "threads") c.threads = val.get<int>();
            else if (key == "seed") c.seed = val.get<std::uint64_t>();
            else if (key == "reference") c.reference = val.get<std::string>();
            else if (key == "h_ref") c.h_ref = val.get<double>();
            else if (key == "rate_floor") c.rate_floor = val.get<double>();
            else if (key == "output_dir") c.output_dir = val.get<std::string>();
            else if (key == "plot") c.plot = val.get<bool>();
            else if (key == "suites") c.suites = val.get<std::vector<std::string>>();
            else if (key == "trials") c.trials = val.get<int>();
            else if (key == "matrix") c.matrix = val.get<std::vector<double>>();
            else if (key == "reach") c.reach = val.get<int>();
            else
                throw std::invalid_argument("unknown config key '" + key +
                                            "' (known keys: " + known + ")");
        } catch (const json::exception&) {
            throw std::invalid_argument("config key '" + key + "' has the wrong type");
        }
    }
}

void validate_config(const RunConfig& c) {
    if (!(c.tol > 0)) throw std::invalid_argument("tol must be positive");
    if (c.max_iter < 1) throw std::invalid_argument("max_iter must be at least 1");
    if (c.threads < 1) throw std::invalid_argument("threads must be at least 1");
    if (c.trials < 1) throw std::invalid_argument("trials must be at least 1");
    if (c.reach < 1 || c.reach > 4)
        throw std::invalid_argument("reach must lie in [1, 4]");
    method_from_string(c.method);  // throws on unknown method
    if (c.reference != "auto" && c.reference != "exact" && c.reference != "fine")
        throw std::invalid_argument("reference must be one of: auto, exact, fine");
    if (!(c.h > 0)) throw std::invalid_argument("h must be positive");
    if (c.h_list.empty()) throw std::invalid_argument("h_list must not be empty");
    for (size_t i = 0; i < c.h_list.size(); ++i) {
        if (!(c.h_list[i] > 0)) throw std::invalid_argument("h_list entries must be positive");
        if (i && !(c.h_list[i] < c.h_list[i - 1]))
            throw std::invalid_argument("h_list must be strictly decreasing");
    }
    if (c.h_ref < 0) throw std::invalid_argument("h_ref must be nonnegative");
    if (c.output_dir.empty()) throw std::invalid_argument("output_dir must not be empty");
}

std::string now_iso8601() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open output file " + path.string());
    os << text;
    if (!os) throw std::runtime_error("failed writing " + path.string());
}

SolveOptions solve_options(const RunConfig& c) {
    SolveOptions o;
    o.method = method_from_string(c.method);
    o.tol = c.tol;
    o.max_iter = c.max_iter;
    o.threads = c.threads;
    return o;
}

std::string fmt12(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

// ---------------------------------------------------------------- solve

int cmd_solve(const RunConfig& cfg) {
    BellmanProblem p = make_problem(cfg.problem, cfg.params);
    GridPtr grid = make_grid(p.domain, cfg.h, p.dirs);
    auto [v, rep] = solve(p, grid, solve_options(cfg));

    std::filesystem::create_directories(cfg.output_dir);
    const auto dump_path = std::filesystem::path(cfg.output_dir) / "solution.hjbgrid";
    const auto report_path = std::filesystem::path(cfg.output_dir) / "solve_report.json";
    {
        std::ostringstream ss;
        write_solution_dump(ss, p.name, v);
        write_text_file(dump_path, ss.str());
    }
    json out;
    out["schema"] = "hjb-solve-run/1";
    out["config"] = config_to_json(cfg);
    out["problem_params"] = p.params;
    out["report"] = rep.to_json();
    out["volatile"] = {{"generated_at", now_iso8601()}};
    write_text_file(report_path, out.dump(2) + "\n");

    std::cout << "problem " << p.name << "  h " << fmt12(cfg.h) << "  method " << rep.method
              << "\ninterior nodes " << rep.interior_nodes << "  band nodes " << rep.band_nodes
              << "\niterations " << rep.iterations << "  residual " << fmt12(rep.final_residual)
              << "  converged " << (rep.converged ? "yes" : "no") << "\nwrote "
              << dump_path.string() << "\nwrote " << report_path.string() << "\n";
    if (!rep.converged) {
        std::cerr << "solver failed to converge within " << cfg.max_iter
                  << " iterations (residual " << fmt12(rep.final_residual) << ")\n";
        return kExitFailure;
    }
    return kExitOk;
}

// ---------------------------------------------------------------- study

void write_study_artifacts(const RunConfig& cfg, const StudyReport& rep) {
    std::filesystem::create_directories(cfg.output_dir);
    json out;
    out["schema"] = "hjb-study-run/1";
    out["config"] = config_to_json(cfg);
    out["study"] = rep.to_json();
    out["volatile"] = {{"generated_at", now_iso8601()}};
    write_text_file(std::filesystem::path(cfg.output_dir) / "study_report.json",
                    out.dump(2) + "\n");
    {
        std::ostringstream ss;
        write_study_csv(rep, ss);
        write_text_file(std::filesystem::path(cfg.output_dir) / "study.csv", ss.str());
    }
    if (cfg.plot) {
        std::ostringstream ss;
        write_study_svg(rep, ss);
        write_text_file(std::filesystem::path(cfg.output_dir) / "study.svg", ss.str());
    }
}

int cmd_study(const RunConfig& cfg) {
    BellmanProblem p = make_problem(cfg.problem, cfg.params);
    ReferenceSpec ref;
    const bool want_exact =
        cfg.reference == "exact" || (cfg.reference == "auto" && p.exact_solution);
    if (want_exact) {
        ref.kind = ReferenceSpec::Kind::exact;
    } else {
        ref.kind = ReferenceSpec::Kind::fine_grid;
        ref.h_ref = cfg.h_ref > 0 ? cfg.h_ref : cfg.h_list.back() / 2;
    }

    StudyReport rep;
    try {
        rep = run_convergence_study(p, cfg.h_list, ref, solve_options(cfg), cfg.seed);
    } catch (const StudyError& e) {
        write_study_artifacts(cfg, e.partial);  // keep whatever finished
        std::cerr << "study failed: " << e.what() << " (" << e.partial.rows.size()
                  << " completed rows written)\n";
        return kExitFailure;
    }
    write_study_artifacts(cfg, rep);

    std::cout << "problem " << p.name << "  reference "
              << (ref.kind == ReferenceSpec::Kind::exact
                      ? std::string("exact")
                      : "fine grid at h_ref " + fmt12(ref.h_ref))
              << "\n";
    std::printf("%-12s %-14s %-12s %-12s %-12s %-12s\n", "h", "error", "M1", "M2", "M3", "M4");
    for (const StudyRow& r : rep.rows)
        std::printf("%-12.6g %-14.8g %-12.6g %-12.6g %-12.6g %-12.6g\n", r.h, r.error,
                    r.monitors.m1, r.monitors.m2, r.monitors.m3, r.monitors.m4);
    if (!rep.fit.defined) {
        std::cout << "p_hat undefined (fewer than two positive errors); rate floor "
                  << fmt12(cfg.rate_floor) << ": FAIL\n";
        return kExitFailure;
    }
    const bool floor_ok = rep.fit.p_hat >= cfg.rate_floor;
    std::cout << "p_hat " << fmt12(rep.fit.p_hat) << "  intercept "
              << fmt12(rep.fit.intercept) << "  max log residual "
              << fmt12(rep.fit.max_residual) << "\nrate floor " << fmt12(cfg.rate_floor)
              << ": " << (floor_ok ? "PASS" : "FAIL") << "\n";
    return floor_ok ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------- check

struct SuiteOutcome {
    std::string name;
    long passes = 0;
    long total = 0;
    json counterexample;  // null when clean
};

GridFunction random_grid_function(GridPtr grid, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    GridFunction v = GridFunction::undefined(grid);
    for (std::int64_t id : grid->interior) v[id] = u(rng);
    for (std::int64_t id : grid->band) v[id] = u(rng);
    return v;
}

SuiteOutcome suite_comparison(const RunConfig& cfg) {
    SuiteOutcome out{"comparison"};
    int pi = 0;
    for (const ProblemInfo& info : list_problems()) {
        BellmanProblem p = make_problem(info.name, json::object());
        GridPtr grid = make_grid(p.domain, cfg.h, p.dirs);
        SchemeCache cache = build_cache(p, grid, cfg.threads);
        std::mt19937_64 rng(cfg.seed + 1000 * static_cast<std::uint64_t>(pi));
        for (int t = 0; t < cfg.trials; ++t) {
            GridFunction v1 = random_grid_function(grid, rng);
            GridFunction v2 = random_grid_function(grid, rng);
            ComparisonResult res = comparison_check(cache, v1, v2);
            ++out.total;
            if (res.pass) {
                ++out.passes;
            } else if (out.counterexample.is_null()) {
                out.counterexample = {{"suite", out.name},    {"problem", info.name},
                                      {"trial", t},           {"lhs", res.lhs},
                                      {"interior_term", res.interior_term},
                                      {"band_term", res.band_term},
                                      {"rhs", res.rhs},       {"slack", res.slack}};
            }
        }
        ++pi;
    }
    return out;
}

SuiteOutcome suite_apriori(const RunConfig& cfg) {
    SuiteOutcome out{"apriori"};
    for (const ProblemInfo& info : list_problems()) {
        BellmanProblem p = make_problem(info.name, json::object());
        GridPtr grid = make_grid(p.domain, cfg.h, p.dirs);
        SchemeCache cache = build_cache(p, grid, cfg.threads);
        auto [v, rep] = solve_with_cache(p, cache, solve_options(cfg));
        const GridFunction g = GridFunction::from_callable(grid, p.boundary_g);
        AprioriResult res = apriori_bound_check(cache, v, g, cfg.tol);
        ++out.total;
        if (rep.converged && res.pass) {
            ++out.passes;
        } else if (out.counterexample.is_null()) {
            out.counterexample = {{"suite", out.name},
                                  {"problem", info.name},
                                  {"converged", rep.converged},
                                  {"sup_plus", res.sup_plus},
                                  {"bound_plus", res.bound_plus},
                                  {"sup_minus", res.sup_minus},
                                  {"bound_minus", res.bound_minus}};
        }
    }
    return out;
}

SymMatrix random_elliptic_matrix(int dim, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ev(0.2, 5.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double q[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    if (dim == 2) {
        std::uniform_real_distribution<double> angle(0.0, 3.14159265358979323846);
        const double th = angle(rng), c = std::cos(th), s = std::sin(th);
        q[0][0] = c; q[0][1] = -s;
        q[1][0] = s; q[1][1] = c;
    } else {
        // Gram-Schmidt on Gaussian columns
        for (int trial = 0;; ++trial) {
            double a[3][3];
            for (auto& row : a)
                for (double& x : row) x = gauss(rng);
            bool ok = true;
            for (int j = 0; j < 3 && ok; ++j) {
                for (int k = 0; k < j; ++k) {
                    double dot = 0;
                    for (int i = 0; i < 3; ++i) dot += a[i][j] * a[i][k];
                    for (int i = 0; i < 3; ++i) a[i][j] -= dot * a[i][k];
                }
                double norm = 0;
                for (int i = 0; i < 3; ++i) norm += a[i][j] * a[i][j];
                norm = std::sqrt(norm);
                if (norm < 1e-6) { ok = false; break; }
                for (int i = 0; i < 3; ++i) a[i][j] /= norm;
            }
            if (ok) {
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) q[i][j] = a[i][j];
                break;
            }
            (void)trial;
        }
    }
    double lam[3] = {ev(rng), ev(rng), dim == 3 ? ev(rng) : 0.0};
    SymMatrix m;
    m.dim = dim;
    for (int i = 0; i < dim; ++i)
        for (int j = i; j < dim; ++j) {
            double s = 0;
            for (int k = 0; k < dim; ++k) s += q[i][k] * lam[k] * q[j][k];
            m.at(i, j) = m.at(j, i) = s;
        }
    return m;
}

json matrix_to_json(const SymMatrix& m) {
    json rows = json::array();
    for (int i = 0; i < m.dim; ++i) {
        json row = json::array();
        for (int j = 0; j < m.dim; ++j) row.push_back(m.at(i, j));
        rows.push_back(row);
    }
    return rows;
}

SuiteOutcome suite_decomposition(const RunConfig& cfg) {
    SuiteOutcome out{"decomposition"};
    for (int dim = 2; dim <= 3; ++dim) {
        const DirectionSet dirs = extended_directions(dim, 3);
        std::mt19937_64 rng(cfg.seed + 77 * static_cast<std::uint64_t>(dim));
        for (int t = 0; t < cfg.trials; ++t) {
            const SymMatrix m = random_elliptic_matrix(dim, rng);
            ++out.total;
            try {
                Decomposition d = decompose_matrix(m, dirs, 0.0);
                if (d.residual <= 1e-10) {
                    ++out.passes;
                } else if (out.counterexample.is_null()) {
                    out.counterexample = {{"suite", out.name},  {"dim", dim},
                                          {"trial", t},         {"matrix", matrix_to_json(m)},
                                          {"residual", d.residual}};
                }
            } catch (const DecompositionError& e) {
                if (out.counterexample.is_null())
                    out.counterexample = {{"suite", out.name}, {"dim", dim}, {"trial", t},
                                          {"matrix", matrix_to_json(m)},
                                          {"error", e.what()}};
            }
        }
    }
    // 2D diagonally dominant batch must take the closed-form branch
    {
        const DirectionSet dirs = canonical_directions(2);
        std::mt19937_64 rng(cfg.seed + 77 * 5);
        std::uniform_real_distribution<double> off(-1.0, 1.0), pad(0.0, 2.0);
        for (int t = 0; t < cfg.trials; ++t) {
            const double a12 = off(rng);
            const SymMatrix m =
                SymMatrix::from2(std::abs(a12) + pad(rng), a12, std::abs(a12) + pad(rng));
            ++out.total;
            try {
                Decomposition d = decompose_matrix(m, dirs, 0.0);
                bool lam_ok = true;
                for (double l : d.lambda) lam_ok = lam_ok && l >= 0;
                if (d.explicit_path && lam_ok && d.residual <= 1e-12) {
                    ++out.passes;
                } else if (out.counterexample.is_null()) {
                    out.counterexample = {{"suite", out.name},
                                          {"dim", 2},
                                          {"trial", t},
                                          {"matrix", matrix_to_json(m)},
                                          {"explicit_path", d.explicit_path},
                                          {"residual", d.residual}};
                }
            } catch (const DecompositionError& e) {
                if (out.counterexample.is_null())
                    out.counterexample = {{"suite", out.name}, {"dim", 2}, {"trial", t},
                                          {"matrix", matrix_to_json(m)},
                                          {"error", e.what()}};
            }
        }
    }
    return out;
}

SmoothField quadratic_field() {
    // 0.5 x.Qx + p.x with Q = [[2, 0.5], [0.5, 1]], p = (0.3, -0.7)
    static const double Q[2][2] = {{2.0, 0.5}, {0.5, 1.0}};
    static const double P[2] = {0.3, -0.7};
    SmoothField f;
    f.value = [](const double* x) {
        double s = 0;
        for (int i = 0; i < 2; ++i) {
            s += P[i] * x[i];
            for (int j = 0; j < 2; ++j) s += 0.5 * x[i] * Q[i][j] * x[j];
        }
        return s;
    };
    f.first_along = [](const double* x, const Offset& e) {
        double s = 0;
        for (int i = 0; i < 2; ++i) {
            double gi = P[i];
            for (int j = 0; j < 2; ++j) gi += Q[i][j] * x[j];
            s += gi * e[static_cast<size_t>(i)];
        }
        return s;
    };
    auto second = [](const Offset& e) {
        double s = 0;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                s += e[static_cast<size_t>(i)] * Q[i][j] * e[static_cast<size_t>(j)];
        return s;
    };
    f.second_along = [second](const double*, const Offset& e) { return second(e); };
    f.second_sup_along = [second](const double*, const Offset& e, double) {
        return std::abs(second(e));
    };
    f.fourth_sup_along = [](const double*, const Offset&, double) { return 0.0; };
    return f;
}

SuiteOutcome suite_taylor(const RunConfig& cfg) {
    SuiteOutcome out{"taylor"};
    struct Entry {
        const char* name;
        SmoothField field;
        double slack;  // roundoff allowance on gap <= bound + slack
    };
    const Entry fields[] = {{"quadratic", quadratic_field(), 1e-11},
                            {"sin-sin", sinsin_field(), 1e-11}};
    const DirectionSet dirs = canonical_directions(2);
    const double h_choices[] = {0.4, 0.2, 0.1, 0.05};
    std::mt19937_64 rng(cfg.seed + 424242);
    std::uniform_real_distribution<double> ux(-0.8, 0.8);
    std::uniform_int_distribution<int> uh(0, 3), uk(1, dirs.d1());
    for (int t = 0; t < cfg.trials; ++t) {
        const double x[3] = {ux(rng), ux(rng), 0.0};
        const double h = h_choices[uh(rng)];
        const Offset e = dirs.offset(uk(rng));
        for (const Entry& entry : fields) {
            const TaylorCheck tc = taylor_consistency(entry.field, x, e, h);
            ++out.total;
            if (tc.gap <= tc.bound + entry.slack) {
                ++out.passes;
            } else if (out.counterexample.is_null()) {
                out.counterexample = {
                    {"suite", out.name}, {"field", entry.name},
                    {"trial", t},        {"x", {x[0], x[1]}},
                    {"h", h},            {"e", {e[0], e[1]}},
                    {"gap", tc.gap},     {"bound", tc.bound}};
            }
        }
    }
    return out;
}

int cmd_check(const RunConfig& cfg) {
    static const char* known = "comparison, apriori, decomposition, taylor";
    std::vector<SuiteOutcome> results;
    for (const std::string& s : cfg.suites) {
        if (s == "comparison") results.push_back(suite_comparison(cfg));
        else if (s == "apriori") results.push_back(suite_apriori(cfg));
        else if (s == "decomposition") results.push_back(suite_decomposition(cfg));
        else if (s == "taylor") results.push_back(suite_taylor(cfg));
        else
            throw std::invalid_argument("unknown suite '" + s +
                                        "' (available: " + std::string(known) + ")");
    }
    bool all_pass = true;
    for (const SuiteOutcome& r : results) {
        std::printf("%-14s %ld/%ld pass\n", r.name.c_str(), r.passes, r.total);
        all_pass = all_pass && r.passes == r.total;
    }
    for (const SuiteOutcome& r : results) {
        if (!r.counterexample.is_null()) {
            std::cout << "first counterexample:\n" << r.counterexample.dump(2) << "\n";
            break;
        }
    }
    std::cout << (all_pass ? "all suites passed" : "CHECK FAILED") << "\n";
    return all_pass ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------- decompose

int cmd_decompose(const RunConfig& cfg) {
    SymMatrix m;
    if (cfg.matrix.size() == 3) {
        m = SymMatrix::from2(cfg.matrix[0], cfg.matrix[1], cfg.matrix[2]);
    } else if (cfg.matrix.size() == 6) {
        m.dim = 3;
        const double* u = cfg.matrix.data();  // a11 a12 a13 a22 a23 a33
        m.at(0, 0) = u[0];
        m.at(0, 1) = m.at(1, 0) = u[1];
        m.at(0, 2) = m.at(2, 0) = u[2];
        m.at(1, 1) = u[3];
        m.at(1, 2) = m.at(2, 1) = u[4];
        m.at(2, 2) = u[5];
    } else {
        throw std::invalid_argument(
            "matrix needs 3 values (2D upper triangle a11,a12,a22) or 6 values "
            "(3D upper triangle a11,a12,a13,a22,a23,a33)");
    }
    const DirectionSet dirs = extended_directions(m.dim, cfg.reach);
    const Decomposition d = decompose_matrix(m, dirs, 0.0);

    json out;
    out["schema"] = "hjb-decompose/1";
    out["dim"] = m.dim;
    out["matrix"] = matrix_to_json(m);
    out["reach"] = cfg.reach;
    out["explicit_path"] = d.explicit_path;
    out["residual"] = d.residual;
    double trace = 0.0;
    for (int a = 0; a < m.dim; ++a) trace += m.at(a, a);
    const double lambda_floor = 1e-12 * std::max(1.0, trace);
    json terms = json::array();
    for (int k = 1; k <= dirs.d1(); ++k) {
        const double lam = d.lambda[static_cast<size_t>(k - 1)];
        if (lam <= lambda_floor) continue;
        const Offset& e = dirs.offset(k);
        json dir = json::array();
        for (int a = 0; a < m.dim; ++a) dir.push_back(e[static_cast<size_t>(a)]);
        terms.push_back({{"e", dir}, {"lambda", lam}});
    }
    out["terms"] = terms;
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- list

int cmd_list_problems() {
    for (const ProblemInfo& info : list_problems()) {
        std::cout << info.name << "\n    " << info.description << "\n    defaults: "
                  << info.defaults.dump() << "\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------- wiring

struct FlagSet {
    RunConfig v;            // values bound to the flags
    std::string config_path;
    std::string params_str;
    CLI::Option* config = nullptr;
    CLI::Option* problem = nullptr;
    CLI::Option* params = nullptr;
    CLI::Option* h = nullptr;
    CLI::Option* h_list = nullptr;
    CLI::Option* method = nullptr;
    CLI::Option* tol = nullptr;
    CLI::Option* max_iter = nullptr;
    CLI::Option* threads = nullptr;
    CLI::Option* seed = nullptr;
    CLI::Option* reference = nullptr;
    CLI::Option* h_ref = nullptr;
    CLI::Option* rate_floor = nullptr;
    CLI::Option* output_dir = nullptr;
    CLI::Option* plot = nullptr;
    CLI::Option* suites = nullptr;
    CLI::Option* trials = nullptr;
    CLI::Option* matrix = nullptr;
    CLI::Option* reach = nullptr;
};

void attach_flags(CLI::App* sub, FlagSet& f) {
    sub->set_help_flag("--help", "print this help message");  // frees -h for the mesh flag
    f.config = sub->add_option("--config", f.config_path,
                               "JSON config file; flags override file values");
    f.problem = sub->add_option("--problem", f.v.problem, "catalogue problem name");
    f.params = sub->add_option("--params", f.params_str,
                               "problem parameters as a JSON object");
    f.h = sub->add_option("-h,--h", f.v.h, "mesh size");
    f.h_list = sub->add_option("--h-list", f.v.h_list,
                               "strictly decreasing mesh sizes for the study")
                   ->delimiter(',');
    f.method = sub->add_option("--method", f.v.method, "jacobi | gauss-seidel | policy");
    f.tol = sub->add_option("--tol", f.v.tol, "residual tolerance (> 0)");
    f.max_iter = sub->add_option("--max-iter", f.v.max_iter, "iteration cap");
    f.threads = sub->add_option("--threads", f.v.threads,
                                "max simultaneous node-update workers");
    f.seed = sub->add_option("--seed", f.v.seed, "seed for randomized checks and sampling");
    f.reference = sub->add_option("--reference", f.v.reference, "auto | exact | fine");
    f.h_ref = sub->add_option("--h-ref", f.v.h_ref,
                              "fine-reference mesh (0 = half the smallest study h)");
    f.rate_floor = sub->add_option("--rate-floor", f.v.rate_floor,
                                   "fitted-rate threshold the study must reach");
    f.output_dir = sub->add_option("--output-dir", f.v.output_dir, "artifact directory");
    f.plot = sub->add_flag("--plot", f.v.plot, "emit the log-log SVG plot");
    f.suites = sub->add_option("--suites", f.v.suites,
                               "check suites: comparison, apriori, decomposition, taylor")
                   ->delimiter(',');
    f.trials = sub->add_option("--trials", f.v.trials, "randomized trials per suite");
    f.matrix = sub->add_option("--matrix", f.v.matrix,
                               "symmetric matrix upper triangle (3 or 6 values)")
                   ->delimiter(',');
    f.reach = sub->add_option("--reach", f.v.reach, "direction set reach for decompose");
}

RunConfig resolve_config(const FlagSet& f, const std::string& command) {
    RunConfig c;
    if (f.config->count()) {
        std::ifstream is(f.config_path);
        if (!is) throw std::invalid_argument("cannot open config file " + f.config_path);
        json j;
        try {
            j = json::parse(is);
        } catch (const json::parse_error& e) {
            throw std::invalid_argument("config file " + f.config_path + ": " + e.what());
        }
        apply_config_json(c, j);
    }
    c.command = command;
    if (f.problem->count()) c.problem = f.v.problem;
    if (f.params->count()) {
        json j;
        try {
            j = json::parse(f.params_str);
        } catch (const json::parse_error& e) {
            throw std::invalid_argument(std::string("--params: ") + e.what());
        }
        if (!j.is_object()) throw std::invalid_argument("--params must be a JSON object");
        c.params = j;
    }
    if (f.h->count()) c.h = f.v.h;
    if (f.h_list->count()) c.h_list = f.v.h_list;
    if (f.method->count()) c.method = f.v.method;
    if (f.tol->count()) c.tol = f.v.tol;
    if (f.max_iter->count()) c.max_iter = f.v.max_iter;
    if (f.threads->count()) c.threads = f.v.threads;
    if (f.seed->count()) c.seed = f.v.seed;
    if (f.reference->count()) c.reference = f.v.reference;
    if (f.h_ref->count()) c.h_ref = f.v.h_ref;
    if (f.rate_floor->count()) c.rate_floor = f.v.rate_floor;
    if (f.output_dir->count()) c.output_dir = f.v.output_dir;
    if (f.plot->count()) c.plot = f.v.plot;
    if (f.suites->count()) c.suites = f.v.suites;
    if (f.trials->count()) c.trials = f.v.trials;
    if (f.matrix->count()) c.matrix = f.v.matrix;
    if (f.reach->count()) c.reach = f.v.reach;
    validate_config(c);
    return c;
}

int run(int argc, char** argv) {
    CLI::App app{"monotone wide-stencil finite-difference solver for elliptic Bellman equations"};
    app.set_help_flag("--help", "print this help message");
    app.require_subcommand(1);

    CLI::App* s_solve = app.add_subcommand("solve", "solve one problem at a fixed mesh size");
    CLI::App* s_study =
        app.add_subcommand("study", "mesh-refinement study with rate fit and monitors");
    CLI::App* s_check =
        app.add_subcommand("check", "randomized property suites (exit 0 iff all pass)");
    CLI::App* s_decomp =
        app.add_subcommand("decompose", "rank-one direction decomposition of a matrix");
    CLI::App* s_list = app.add_subcommand("list-problems", "print the problem catalogue");

    FlagSet f_solve, f_study, f_check, f_decomp;
    attach_flags(s_solve, f_solve);
    attach_flags(s_study, f_study);
    attach_flags(s_check, f_check);
    attach_flags(s_decomp, f_decomp);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    if (s_list->parsed()) return cmd_list_problems();
    if (s_solve->parsed()) return cmd_solve(resolve_config(f_solve, "solve"));
    if (s_study->parsed()) return cmd_study(resolve_config(f_study, "study"));
    if (s_check->parsed()) return cmd_check(resolve_config(f_check, "check"));
    if (s_decomp->parsed()) return cmd_decompose(resolve_config(f_decomp, "decompose"));
    return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const EmptyInteriorError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}
