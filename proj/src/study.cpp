#include "hjb/study.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "hjb/differences.hpp"

namespace hjb {

FitResult fit_rate(std::span<const double> h, std::span<const double> err) {
    if (h.size() != err.size()) throw std::invalid_argument("fit_rate: length mismatch");
    FitResult out;
    std::vector<double> lx, ly;
    for (size_t i = 0; i < h.size(); ++i) {
        if (!(h[i] > 0)) throw std::invalid_argument("fit_rate: h must be positive");
        if (err[i] > 0) {
            lx.push_back(std::log(h[i]));
            ly.push_back(std::log(err[i]));
        } else {
            out.excluded.push_back(static_cast<int>(i));
        }
    }
    if (lx.size() < 2)
        throw std::invalid_argument(
            "fit_rate: fewer than two positive (h, error) pairs");

    const double n = static_cast<double>(lx.size());
    double mx = 0, my = 0;
    for (size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (!(sxx > 0)) throw std::invalid_argument("fit_rate: degenerate h values");
    out.p_hat = sxy / sxx;
    out.intercept = my - out.p_hat * mx;
    for (size_t i = 0; i < lx.size(); ++i)
        out.max_residual =
            std::max(out.max_residual, std::abs(ly[i] - (out.intercept + out.p_hat * lx[i])));
    out.points_used = static_cast<int>(lx.size());
    out.defined = true;
    return out;
}

MonitorSet estimate_monitor(const BellmanProblem& p, const GridFunction& v,
                            const GridFunction& g, int deep_depth, int pair_samples,
                            std::uint64_t seed) {
    const Grid& grid = *v.grid;
    const int d1 = grid.dirs.d1();
    MonitorSet m;

    double x[3];
    for (std::int64_t id : grid.interior) {
        grid.coord(id, x);
        const double rho = distance_to_complement(p.domain, x);
        if (rho > 0) m.m1 = std::max(m.m1, std::abs(v[id] - g[id]) / rho);
        for (int k = 1; k <= d1; ++k) {
            m.m2 = std::max(m.m2, std::abs(forward_difference(v, id, k)));
            m.m2 = std::max(m.m2, std::abs(forward_difference(v, id, -k)));
        }
    }

    const auto deep = classify_deep_interior(p.domain, grid, deep_depth);
    const double weight_off = 6.0 * grid.h * grid.dirs.stencil_reach();
    for (std::int64_t id : grid.interior) {
        if (!deep[static_cast<size_t>(id)]) continue;
        grid.coord(id, x);
        const double w = distance_to_complement(p.domain, x) - weight_off;
        if (w <= 0) continue;
        for (int i = -d1; i <= d1; ++i) {
            if (i == 0) continue;
            for (int j = -d1; j <= d1; ++j) {
                if (j == 0) continue;
                m.m3 = std::max(m.m3, w * std::abs(cross_difference(v, id, i, j)));
            }
        }
    }

    // sampled difference quotients |v(x) - v(y)| / (|x - y| + h)
    std::vector<std::int64_t> valued;
    valued.reserve(grid.interior.size() + grid.band.size());
    valued.insert(valued.end(), grid.interior.begin(), grid.interior.end());
    valued.insert(valued.end(), grid.band.begin(), grid.band.end());
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, valued.size() - 1);
    double y[3];
    for (int s = 0; s < pair_samples; ++s) {
        const std::int64_t a = valued[pick(rng)];
        const std::int64_t b = valued[pick(rng)];
        if (a == b) continue;
        grid.coord(a, x);
        grid.coord(b, y);
        double dist = 0;
        for (int ax = 0; ax < grid.dim; ++ax) dist += (x[ax] - y[ax]) * (x[ax] - y[ax]);
        dist = std::sqrt(dist);
        m.m4 = std::max(m.m4, std::abs(v[a] - v[b]) / (dist + grid.h));
    }
    return m;
}

GridFunction restrict_to_coarse(const GridFunction& fine, GridPtr coarse) {
    const Grid& gf = *fine.grid;
    const Grid& gc = *coarse;
    if (gf.dim != gc.dim) throw std::invalid_argument("restrict_to_coarse: dim mismatch");
    const double ratio = gc.h / gf.h;
    const long m = std::lround(ratio);
    if (m < 1 || std::abs(gc.h - static_cast<double>(m) * gf.h) > 1e-9 * gc.h)
        throw std::invalid_argument(
            "restrict_to_coarse: grids are not nested (h ratio is not an integer)");

    GridFunction out = GridFunction::undefined(coarse);
    auto fine_value = [&](std::int64_t cid, double& val) {
        Offset idx = gc.unflat(cid);
        for (int a = 0; a < gc.dim; ++a) idx[static_cast<size_t>(a)] *= static_cast<int>(m);
        if (!gf.in_box(idx)) return false;
        val = fine[gf.flat(idx)];
        return std::isfinite(val);
    };
    for (std::int64_t id : gc.interior) {
        double val;
        if (!fine_value(id, val))
            throw std::runtime_error(
                "restrict_to_coarse: coarse interior node has no valued fine twin");
        out.v[static_cast<size_t>(id)] = val;
    }
    for (std::int64_t id : gc.band) {
        double val;
        if (fine_value(id, val)) out.v[static_cast<size_t>(id)] = val;
    }
    return out;
}

StudyReport run_convergence_study(const BellmanProblem& p, const std::vector<double>& h_list,
                                  const ReferenceSpec& ref, const SolveOptions& opts,
                                  std::uint64_t seed) {
    if (h_list.empty()) throw std::invalid_argument("study: empty h list");
    for (size_t i = 0; i < h_list.size(); ++i) {
        if (!(h_list[i] > 0)) throw std::invalid_argument("study: h must be positive");
        if (i && !(h_list[i] < h_list[i - 1]))
            throw std::invalid_argument("study: h list must be strictly decreasing");
    }
    if (ref.kind == ReferenceSpec::Kind::exact && !p.exact_solution)
        throw std::invalid_argument("study: problem has no exact solution attached");
    if (ref.kind == ReferenceSpec::Kind::fine_grid) {
        if (!(ref.h_ref > 0) || !(ref.h_ref <= h_list.back()))
            throw std::invalid_argument("study: h_ref must be positive and <= min h");
        for (double h : h_list) {
            const long m = std::lround(h / ref.h_ref);
            if (m < 1 || std::abs(h - static_cast<double>(m) * ref.h_ref) > 1e-9 * h)
                throw std::invalid_argument(
                    "study: reference grid is not nested under every study h");
        }
    }

    StudyReport rep;
    rep.problem = p.name;
    rep.reference = ref;
    rep.seed = seed;
    rep.method = method_name(opts.method);
    rep.tol = opts.tol;

    GridFunction vref;  // fine-grid reference when requested
    if (ref.kind == ReferenceSpec::Kind::fine_grid) {
        GridPtr fine = make_grid(p.domain, ref.h_ref, p.dirs);
        auto [vf, rf] = solve(p, fine, opts);
        if (!rf.converged)
            throw StudyError("study: reference solve did not converge at h_ref",
                             std::move(rep));
        vref = std::move(vf);
    }

    for (double h : h_list) {
        GridPtr grid = make_grid(p.domain, h, p.dirs);
        auto [v, srep] = solve(p, grid, opts);
        if (!srep.converged)
            throw StudyError("study: solve did not converge at h = " + std::to_string(h),
                             std::move(rep));

        StudyRow row;
        row.h = h;
        row.interior_nodes = srep.interior_nodes;

        double err = 0.0;
        if (ref.kind == ReferenceSpec::Kind::exact) {
            double x[3];
            for (std::int64_t id : grid->interior) {
                grid->coord(id, x);
                err = std::max(err, std::abs(v[id] - p.exact_solution(x)));
            }
        } else {
            const GridFunction vr = restrict_to_coarse(vref, grid);
            for (std::int64_t id : grid->interior)
                err = std::max(err, std::abs(v[id] - vr[id]));
        }
        row.error = err;

        const GridFunction g = GridFunction::from_callable(grid, p.boundary_g);
        row.monitors =
            estimate_monitor(p, v, g, kDeepInteriorDepth, kMonitorPairSamples, seed);
        row.solve_report = std::move(srep);
        rep.rows.push_back(std::move(row));
    }

    std::vector<double> hs, es;
    for (const StudyRow& r : rep.rows) {
        hs.push_back(r.h);
        es.push_back(r.error);
    }
    try {
        rep.fit = fit_rate(hs, es);
    } catch (const std::invalid_argument&) {
        rep.fit = FitResult{};  // undefined; errors vanished or too few points
    }
    return rep;
}

namespace {

std::string fmt(double x, int sig = 12) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", sig, x);
    return buf;
}

}  // namespace

nlohmann::json StudyReport::to_json() const {
    nlohmann::json j;
    j["schema"] = "hjb-study/1";
    j["problem"] = problem;
    j["reference"] = {{"kind", reference.kind == ReferenceSpec::Kind::exact ? "exact"
                                                                            : "fine_grid"},
                      {"h_ref", reference.h_ref}};
    j["method"] = method;
    j["tol"] = tol;
    j["seed"] = seed;
    j["rows"] = nlohmann::json::array();
    for (const StudyRow& r : rows) {
        j["rows"].push_back({{"h", r.h},
                             {"error", r.error},
                             {"M1", r.monitors.m1},
                             {"M2", r.monitors.m2},
                             {"M3", r.monitors.m3},
                             {"M4", r.monitors.m4},
                             {"interior_nodes", r.interior_nodes},
                             {"solve", r.solve_report.to_json()}});
    }
    j["fit"] = {{"defined", fit.defined},   {"p_hat", fit.p_hat},
                {"intercept", fit.intercept}, {"max_residual", fit.max_residual},
                {"points_used", fit.points_used}, {"excluded", fit.excluded}};
    return j;
}

void write_study_csv(const StudyReport& rep, std::ostream& os) {
    os << "h,error,M1,M2,M3,M4\n";
    for (const StudyRow& r : rep.rows)
        os << fmt(r.h) << ',' << fmt(r.error) << ',' << fmt(r.monitors.m1) << ','
           << fmt(r.monitors.m2) << ',' << fmt(r.monitors.m3) << ',' << fmt(r.monitors.m4)
           << '\n';
}

void write_study_svg(const StudyReport& rep, std::ostream& os) {
    // log-log scatter of (h, error) with the fitted power law
    const double W = 640, H = 480, L = 70, R = 20, T = 40, B = 50;
    std::vector<std::pair<double, double>> pts;
    for (const StudyRow& r : rep.rows)
        if (r.h > 0 && r.error > 0) pts.push_back({std::log10(r.h), std::log10(r.error)});
    if (pts.size() < 2) {
        os << "<svg xmlns='http://www.w3.org/2000/svg' width='640' height='480'>"
           << "<text x='20' y='40'>insufficient positive data for a log-log plot</text></svg>\n";
        return;
    }
    double xmin = pts[0].first, xmax = xmin, ymin = pts[0].second, ymax = ymin;
    for (auto& q : pts) {
        xmin = std::min(xmin, q.first);
        xmax = std::max(xmax, q.first);
        ymin = std::min(ymin, q.second);
        ymax = std::max(ymax, q.second);
    }
    const double padx = 0.05 * std::max(1e-12, xmax - xmin),
                 pady = 0.05 * std::max(1e-12, ymax - ymin);
    xmin -= padx; xmax += padx; ymin -= pady; ymax += pady;
    auto X = [&](double lx) { return L + (lx - xmin) / (xmax - xmin) * (W - L - R); };
    auto Y = [&](double ly) { return H - B - (ly - ymin) / (ymax - ymin) * (H - T - B); };

    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H
       << "' font-family='monospace' font-size='12'>\n";
    os << "<rect x='0' y='0' width='" << W << "' height='" << H << "' fill='white'/>\n";
    os << "<rect x='" << L << "' y='" << T << "' width='" << (W - L - R) << "' height='"
       << (H - T - B) << "' fill='none' stroke='black'/>\n";
    // decade gridlines
    for (int d = static_cast<int>(std::ceil(xmin)); d <= std::floor(xmax); ++d)
        os << "<line x1='" << X(d) << "' y1='" << T << "' x2='" << X(d) << "' y2='" << (H - B)
           << "' stroke='#cccccc'/><text x='" << X(d) - 14 << "' y='" << (H - B + 16)
           << "'>1e" << d << "</text>\n";
    for (int d = static_cast<int>(std::ceil(ymin)); d <= std::floor(ymax); ++d)
        os << "<line x1='" << L << "' y1='" << Y(d) << "' x2='" << (W - R) << "' y2='" << Y(d)
           << "' stroke='#cccccc'/><text x='8' y='" << Y(d) + 4 << "'>1e" << d << "</text>\n";
    if (rep.fit.defined) {
        const double lx0 = xmin + padx, lx1 = xmax - padx;
        const double k = 1.0 / std::log(10.0);
        auto fit_ly = [&](double lx) {
            return (rep.fit.intercept + rep.fit.p_hat * lx / k) * k;
        };
        os << "<line x1='" << X(lx0) << "' y1='" << Y(fit_ly(lx0)) << "' x2='" << X(lx1)
           << "' y2='" << Y(fit_ly(lx1)) << "' stroke='#d62728' stroke-width='1.5'/>\n";
    }
    for (auto& q : pts)
        os << "<circle cx='" << X(q.first) << "' cy='" << Y(q.second)
           << "' r='4' fill='#1f77b4'/>\n";
    os << "<text x='" << L << "' y='" << (T - 12) << "'>" << rep.problem
       << "  sup-error vs h";
    if (rep.fit.defined) os << "  (fitted rate " << fmt(rep.fit.p_hat, 4) << ")";
    os << "</text>\n";
    os << "<text x='" << (W / 2 - 10) << "' y='" << (H - 14) << "'>h</text>\n";
    os << "</svg>\n";
}

}  // namespace hjb
