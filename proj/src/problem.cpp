#include "hjb/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "hjb/grid.hpp"

namespace hjb {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kUsedTol = 1e-14;   // a_k below this counts as unused
constexpr size_t kMaxIssues = 16;    // reported per validation run

double van_der_corput(std::uint64_t i, std::uint64_t base) {
    double x = 0.0, denom = 1.0;
    while (i) {
        denom *= static_cast<double>(base);
        x += static_cast<double>(i % base) / denom;
        i /= base;
    }
    return x;
}

// min over strictly positive weights; construction-time ellipticity floor
double min_positive(const std::vector<double>& lam) {
    double m = std::numeric_limits<double>::infinity();
    for (double l : lam)
        if (l > kUsedTol) m = std::min(m, l);
    if (!std::isfinite(m)) throw std::invalid_argument("coefficient matrix is zero");
    return m;
}

}  // namespace

std::string ValidationReport::summary() const {
    std::ostringstream os;
    os << (pass ? "pass" : "FAIL") << " (" << sampled_nodes << " nodes x " << controls
       << " controls";
    if (!pass) os << ", " << issue_count << " violations, first: " << issues.front().condition;
    os << ", max admissible h " << max_admissible_h << ")";
    return os.str();
}

ValidationReport validate_problem(const BellmanProblem& p, double h) {
    ValidationReport rep;
    rep.controls = p.n_controls;
    rep.theory_window_h = (p.big_k > 0) ? p.delta / p.big_k : 0.0;

    GridPtr grid;
    try {
        grid = make_grid(p.domain, h, p.dirs);
    } catch (const EmptyInteriorError&) {
        rep.pass = false;
        rep.issue_count = 1;
        rep.issues.push_back({"empty_interior", 0, {0, 0, 0}, 0, h, 0});
        return rep;
    }

    const int d1 = p.dirs.d1();
    std::vector<double> a(static_cast<size_t>(d1)), bp(static_cast<size_t>(d1)), bm(static_cast<size_t>(d1));
    double c = 0, f = 0;

    // cap the audit at ~4096 nodes, evenly strided for determinism
    const std::int64_t n_int = static_cast<std::int64_t>(grid->interior.size());
    const std::int64_t stride = std::max<std::int64_t>(1, n_int / 4096);
    double h_adm = std::numeric_limits<double>::infinity();

    auto record = [&rep](const char* cond, int ctrl, const Point& x, int k, double lhs, double rhs) {
        ++rep.issue_count;
        if (rep.issues.size() < kMaxIssues) rep.issues.push_back({cond, ctrl, x, k, lhs, rhs});
    };

    Point x{0, 0, 0};
    for (std::int64_t s = 0; s < n_int; s += stride) {
        ++rep.sampled_nodes;
        const std::int64_t id = grid->interior[static_cast<size_t>(s)];
        grid->coord(id, x.data());
        for (int ctrl = 0; ctrl < p.n_controls; ++ctrl) {
            p.coeffs(ctrl, x.data(), a.data(), bp.data(), bm.data(), c, f);
            if (c < -1e-12) record("c_nonneg", ctrl, x, 0, c, 0.0);
            for (int k = 1; k <= d1; ++k) {
                const double ak = a[static_cast<size_t>(k - 1)];
                if (ak < -1e-12 || (ak > kUsedTol && ak < p.delta - 1e-9))
                    record("a_floor", ctrl, x, k, ak, p.delta);
                for (int sgn : {+1, -1}) {
                    const double bk = (sgn > 0 ? bp : bm)[static_cast<size_t>(k - 1)];
                    if (std::abs(bk) > 0) {
                        if (h * std::abs(bk) > ak + 1e-12)
                            record("drift_monotone", ctrl, x, sgn * k, h * std::abs(bk), ak);
                        h_adm = std::min(h_adm, ak / std::abs(bk));
                    }
                }
            }
        }
    }

    rep.max_admissible_h =
        std::isfinite(h_adm) ? h_adm : std::numeric_limits<double>::max();
    rep.pass = rep.issue_count == 0;
    return rep;
}

double estimate_big_k(const BellmanProblem& p, int n_samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const Domain& d = p.domain;
    auto sample_point = [&](Point& x) {
        for (int a = 0; a < d.dim; ++a)
            x[static_cast<size_t>(a)] = d.box_lo[static_cast<size_t>(a)] +
                     (d.box_hi[static_cast<size_t>(a)] - d.box_lo[static_cast<size_t>(a)]) * u01(rng);
    };

    const int d1 = p.dirs.d1();
    const int nf = 2 + 3 * d1;  // c, f, a_k, b+-_k per control
    std::vector<double> ax(static_cast<size_t>(d1)), bpx(static_cast<size_t>(d1)), bmx(static_cast<size_t>(d1));
    std::vector<double> ay(static_cast<size_t>(d1)), bpy(static_cast<size_t>(d1)), bmy(static_cast<size_t>(d1));

    double bound = 0.0;
    const int ctrl_cap = std::min(p.n_controls, 8);
    for (int i = 0; i < n_samples; ++i) {
        Point x{0, 0, 0}, y{0, 0, 0};
        sample_point(x);
        sample_point(y);
        double dist = 0;
        for (int a = 0; a < d.dim; ++a) {
            const double t = x[static_cast<size_t>(a)] - y[static_cast<size_t>(a)];
            dist += t * t;
        }
        dist = std::sqrt(dist);
        if (dist < 1e-9) continue;

        const double gx = p.boundary_g(x.data()), gy = p.boundary_g(y.data());
        bound = std::max({bound, std::abs(gx), std::abs(gx - gy) / dist});

        for (int ctrl = 0; ctrl < ctrl_cap; ++ctrl) {
            double cx, fx, cy, fy;
            p.coeffs(ctrl, x.data(), ax.data(), bpx.data(), bmx.data(), cx, fx);
            p.coeffs(ctrl, y.data(), ay.data(), bpy.data(), bmy.data(), cy, fy);
            double vx[2] = {cx, fx}, vy[2] = {cy, fy};
            for (int t = 0; t < 2; ++t)
                bound = std::max({bound, std::abs(vx[t]), std::abs(vx[t] - vy[t]) / dist});
            for (int k = 0; k < d1; ++k) {
                bound = std::max({bound, std::abs(ax[static_cast<size_t>(k)]),
                                  std::abs(ax[static_cast<size_t>(k)] - ay[static_cast<size_t>(k)]) / dist,
                                  std::abs(bpx[static_cast<size_t>(k)]),
                                  std::abs(bpx[static_cast<size_t>(k)] - bpy[static_cast<size_t>(k)]) / dist,
                                  std::abs(bmx[static_cast<size_t>(k)]),
                                  std::abs(bmx[static_cast<size_t>(k)] - bmy[static_cast<size_t>(k)]) / dist});
            }
        }
    }
    (void)nf;
    return bound;
}

SmoothField sinsin_field() {
    SmoothField f;
    f.value = [](const double* x) { return std::sin(kPi * x[0]) * std::sin(kPi * x[1]); };
    f.first_along = [](const double* x, const Offset& e) {
        return kPi * (e[0] * std::cos(kPi * x[0]) * std::sin(kPi * x[1]) +
                      e[1] * std::sin(kPi * x[0]) * std::cos(kPi * x[1]));
    };
    f.second_along = [](const double* x, const Offset& e) {
        const double ss = std::sin(kPi * x[0]) * std::sin(kPi * x[1]);
        const double cc = std::cos(kPi * x[0]) * std::cos(kPi * x[1]);
        return kPi * kPi *
               (-(e[0] * e[0] + e[1] * e[1]) * ss + 2.0 * e[0] * e[1] * cc);
    };
    // |D_e^2| <= pi^2 (|e1|+|e2|)^2 and |D_e^4| <= pi^4 (|e1|+|e2|)^4 hold
    // globally for products of unit-amplitude sines
    f.second_sup_along = [](const double*, const Offset& e, double) {
        const double s = std::abs(e[0]) + std::abs(e[1]);
        return kPi * kPi * s * s;
    };
    f.fourth_sup_along = [](const double*, const Offset& e, double) {
        const double s = std::abs(e[0]) + std::abs(e[1]);
        return kPi * kPi * kPi * kPi * s * s * s * s;
    };
    return f;
}

BellmanProblem builtin_linear_manufactured(const Domain& dom, const SmoothField& exact,
                                           const SymMatrix& a_matrix, double c0) {
    if (dom.dim != a_matrix.dim)
        throw std::invalid_argument("builtin_linear_manufactured: dim mismatch");
    if (c0 < 0) throw std::invalid_argument("builtin_linear_manufactured: c0 must be >= 0");

    BellmanProblem p;
    p.name = "linear-manufactured";
    p.description = "single-control linear problem with a known exact solution";
    p.domain = dom;
    p.dirs = canonical_directions(dom.dim);
    p.n_controls = 1;
    p.has_drift = false;

    const Decomposition dec = decompose_matrix(a_matrix, p.dirs, 0.0);
    const std::vector<double> lam = dec.lambda;
    const int d1 = p.dirs.d1();
    const DirectionSet dirs = p.dirs;

    p.coeffs = [lam, d1, c0, exact, dirs](int, const double* x, double* a, double* b_plus,
                                          double* b_minus, double& c, double& f) {
        double source = c0 * exact.value(x);
        for (int k = 1; k <= d1; ++k) {
            const double l = lam[static_cast<size_t>(k - 1)];
            a[k - 1] = l;
            b_plus[k - 1] = 0.0;
            b_minus[k - 1] = 0.0;
            if (l != 0.0) source -= l * exact.second_along(x, dirs.offset(k));
        }
        c = c0;
        f = source;
    };
    p.boundary_g = exact.value;
    p.exact_solution = exact.value;
    p.delta = min_positive(lam);
    p.min_c = c0;
    p.params = {{"c0", c0}};
    p.big_k = std::max(1.0, 2.0 * estimate_big_k(p, 512, 20240817ull));
    return p;
}

BellmanProblem builtin_two_control(const Domain& dom) {
    if (dom.dim != 2) throw std::invalid_argument("builtin_two_control: 2D only");

    BellmanProblem p;
    p.name = "two-control";
    p.description = "sup over {I, [[2,1],[1,2]]} with crossing sources; genuinely nonlinear";
    p.domain = dom;
    p.dirs = canonical_directions(2);
    p.n_controls = 2;
    p.has_drift = false;

    const std::vector<double> lam0 =
        decompose_matrix(SymMatrix::identity(2), p.dirs, 0.0).lambda;
    const std::vector<double> lam1 =
        decompose_matrix(SymMatrix::from2(2, 1, 2), p.dirs, 0.0).lambda;
    const int d1 = p.dirs.d1();

    p.coeffs = [lam0, lam1, d1](int ctrl, const double* x, double* a, double* b_plus,
                                double* b_minus, double& c, double& f) {
        const std::vector<double>& lam = (ctrl == 0) ? lam0 : lam1;
        for (int k = 0; k < d1; ++k) {
            a[k] = lam[static_cast<size_t>(k)];
            b_plus[k] = 0.0;
            b_minus[k] = 0.0;
        }
        c = 1.0;
        f = (ctrl == 0) ? 1.0 + 2.0 * x[0] : 1.0 - 2.0 * x[0];
    };
    p.boundary_g = [](const double*) { return 0.0; };
    p.delta = 1.0;
    p.min_c = 1.0;
    p.params = nlohmann::json::object();
    p.big_k = std::max(1.0, 2.0 * estimate_big_k(p, 512, 20240817ull));
    return p;
}

BellmanProblem builtin_monge_ampere(const Domain& dom, double gamma, const ScalarField& f_field,
                                    int n_controls, double c0, bool allow_zero_c0) {
    if (dom.dim != 2) throw std::invalid_argument("builtin_monge_ampere: 2D only");
    if (n_controls < 4)
        throw std::invalid_argument("builtin_monge_ampere: n_controls must be >= 4");
    if (gamma < 0) throw std::invalid_argument("builtin_monge_ampere: gamma must be >= 0");
    if (c0 < 0) throw std::invalid_argument("builtin_monge_ampere: c0 must be >= 0");
    if (c0 == 0 && !allow_zero_c0)
        throw std::invalid_argument(
            "builtin_monge_ampere: c0 = 0 leaves the contraction theory; pass "
            "allow_zero_c0 to opt in");

    BellmanProblem p;
    p.name = "monge-ampere";
    p.description = "regularised Monge-Ampere: sup over trace-1 PSD controls";
    p.domain = dom;
    p.dirs = canonical_directions(2);
    p.n_controls = n_controls;
    p.has_drift = false;
    p.outside_theory = (c0 == 0);

    // nested Halton enumeration of (theta, s); prefix property makes control
    // refinement a genuine superset
    const int d1 = p.dirs.d1();
    std::vector<std::vector<double>> lam(static_cast<size_t>(n_controls));
    std::vector<double> det_w(static_cast<size_t>(n_controls));
    nlohmann::json controls = nlohmann::json::array();
    double delta = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_controls; ++i) {
        const double theta = kPi * van_der_corput(static_cast<std::uint64_t>(i), 2);
        const double s = van_der_corput(static_cast<std::uint64_t>(i), 3);
        const double ct = std::cos(theta), st = std::sin(theta);
        SymMatrix a;
        a.dim = 2;
        a.at(0, 0) = s * ct * ct + (1 - s) * st * st + gamma * gamma;
        a.at(1, 1) = s * st * st + (1 - s) * ct * ct + gamma * gamma;
        a.at(0, 1) = a.at(1, 0) = (2 * s - 1) * st * ct;
        try {
            lam[static_cast<size_t>(i)] = decompose_matrix(a, p.dirs, 0.0).lambda;
        } catch (const DecompositionError&) {
            std::ostringstream os;
            os << "builtin_monge_ampere: control (theta=" << theta << ", s=" << s
               << ") is not representable over the canonical directions at gamma=" << gamma
               << "; gamma^2 >= (sqrt(2)-1)/2 (gamma >= 0.456) guarantees representability";
            throw DecompositionError(os.str());
        }
        delta = std::min(delta, min_positive(lam[static_cast<size_t>(i)]));
        det_w[static_cast<size_t>(i)] = 2.0 * std::sqrt(std::max(0.0, s * (1.0 - s)));
        controls.push_back({{"theta", theta}, {"s", s}});
    }

    p.coeffs = [lam, det_w, d1, c0, f_field](int ctrl, const double* x, double* a,
                                             double* b_plus, double* b_minus, double& c,
                                             double& f) {
        const std::vector<double>& l = lam[static_cast<size_t>(ctrl)];
        for (int k = 0; k < d1; ++k) {
            a[k] = l[static_cast<size_t>(k)];
            b_plus[k] = 0.0;
            b_minus[k] = 0.0;
        }
        c = c0;
        f = det_w[static_cast<size_t>(ctrl)] * f_field(x);
    };
    p.boundary_g = [](const double*) { return 0.0; };
    p.delta = delta;
    p.min_c = c0;
    p.params = {{"gamma", gamma}, {"n_controls", n_controls}, {"c0", c0},
                {"controls", controls}};
    p.big_k = std::max(1.0, 2.0 * estimate_big_k(p, 512, 20240817ull));
    return p;
}

namespace {

nlohmann::json merged_params(const nlohmann::json& defaults, const nlohmann::json& params) {
    nlohmann::json out = defaults;
    for (auto it = params.begin(); it != params.end(); ++it) {
        if (!defaults.contains(it.key())) {
            std::ostringstream os;
            os << "unknown parameter '" << it.key() << "'; valid keys:";
            for (auto jt = defaults.begin(); jt != defaults.end(); ++jt)
                os << " " << jt.key();
            throw std::invalid_argument(os.str());
        }
        out[it.key()] = it.value();
    }
    return out;
}

ScalarField default_ma_source() {
    return [](const double* x) {
        return 1.0 + std::exp(-(x[0] * x[0] + x[1] * x[1]));
    };
}

}  // namespace

std::vector<ProblemInfo> list_problems() {
    return {
        {"linear-manufactured-disk",
         "sin(pi x1) sin(pi x2) manufactured on a disk; a = I, exact solution attached",
         {{"radius", 1.0}, {"c0", 1.0}}},
        {"two-control",
         "sup of two linear operators (a = I and [[2,1],[1,2]]) with crossing sources on a disk",
         {{"radius", 1.0}}},
        {"monge-ampere",
         "regularised Monge-Ampere on a disk, Halton control sampling, source 1 + exp(-|x|^2)",
         {{"radius", 1.0}, {"gamma", 0.5}, {"n_controls", 32}, {"c0", 0.1},
          {"allow_zero_c0", false}}},
    };
}

BellmanProblem make_problem(const std::string& name, const nlohmann::json& params) {
    for (const ProblemInfo& info : list_problems()) {
        if (info.name != name) continue;
        const nlohmann::json q = merged_params(info.defaults, params);
        if (name == "linear-manufactured-disk") {
            BellmanProblem p = builtin_linear_manufactured(
                disk_domain(q.at("radius").get<double>()), sinsin_field(),
                SymMatrix::identity(2), q.at("c0").get<double>());
            p.name = name;
            p.params = q;
            return p;
        }
        if (name == "two-control") {
            BellmanProblem p = builtin_two_control(disk_domain(q.at("radius").get<double>()));
            p.params = q;
            return p;
        }
        if (name == "monge-ampere") {
            BellmanProblem p = builtin_monge_ampere(
                disk_domain(q.at("radius").get<double>()), q.at("gamma").get<double>(),
                default_ma_source(), q.at("n_controls").get<int>(), q.at("c0").get<double>(),
                q.at("allow_zero_c0").get<bool>());
            nlohmann::json echo = p.params;
            echo["radius"] = q.at("radius");
            echo["allow_zero_c0"] = q.at("allow_zero_c0");
            p.params = echo;
            return p;
        }
    }
    std::ostringstream os;
    os << "unknown problem '" << name << "'; available:";
    for (const ProblemInfo& info : list_problems()) os << " " << info.name;
    throw std::invalid_argument(os.str());
}

}  // namespace hjb
