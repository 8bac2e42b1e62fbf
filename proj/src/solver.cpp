#include "hjb/solver.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <thread>

namespace hjb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void parallel_for(std::int64_t n, int threads, const std::function<void(std::int64_t, std::int64_t)>& fn) {
    if (threads <= 1 || n < 4096) {
        fn(0, n);
        return;
    }
    const int t = std::min<std::int64_t>(threads, std::max<std::int64_t>(1, n / 1024));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(t));
    const std::int64_t chunk = (n + t - 1) / t;
    for (int i = 0; i < t; ++i) {
        const std::int64_t lo = i * chunk, hi = std::min<std::int64_t>(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    for (auto& th : pool) th.join();
}

// h^2-scaled bracket of one control: sum_k a_k (vp + vm - 2 v0)
// [+ h sum_k (b+ (vp - v0) + b- (vm - v0))] + h^2 (f - c v0)
inline double bracket_h2(const SchemeCache& K, const double* v, std::int64_t node,
                         std::int64_t slot, int ctrl, double h, double h2) {
    const Grid& g = *K.grid;
    const double* e = K.entry(slot, ctrl);
    const double v0 = v[node];
    double acc = 0.0;
    if (K.has_drift) {
        const double* bp = e + K.d1;
        const double* bm = e + 2 * K.d1;
        for (int k = 0; k < K.d1; ++k) {
            const std::int64_t s = g.dir_step[static_cast<size_t>(k)];
            const double vp = v[node + s], vm = v[node - s];
            acc += e[k] * (vp + vm - 2.0 * v0) + h * (bp[k] * (vp - v0) + bm[k] * (vm - v0));
        }
    } else {
        for (int k = 0; k < K.d1; ++k) {
            const std::int64_t s = g.dir_step[static_cast<size_t>(k)];
            acc += e[k] * (v[node + s] + v[node - s] - 2.0 * v0);
        }
    }
    const double c = e[K.block - 2], f = e[K.block - 1];
    return acc + h2 * (f - c * v0);
}

// max over controls of the h^2-scaled bracket
inline double apply_h2(const SchemeCache& K, const double* v, std::int64_t node,
                       std::int64_t slot, double h, double h2) {
    double best = -kInf;
    for (int ctrl = 0; ctrl < K.n_controls; ++ctrl)
        best = std::max(best, bracket_h2(K, v, node, slot, ctrl, h, h2));
    return best;
}

void check_monotone(const SchemeCache& K) {
    const double h = K.grid->h;
    for (std::int64_t slot = 0; slot < static_cast<std::int64_t>(K.grid->interior.size());
         ++slot)
        for (int ctrl = 0; ctrl < K.n_controls; ++ctrl) {
            const double* e = K.entry(slot, ctrl);
            for (int k = 0; k < K.d1; ++k) {
                if (e[k] < -1e-12)
                    throw SolverError("solve: negative second-difference weight in cache");
                if (K.has_drift) {
                    const double bp = e[K.d1 + k], bm = e[2 * K.d1 + k];
                    if (h * std::abs(bp) > e[k] + 1e-12 || h * std::abs(bm) > e[k] + 1e-12)
                        throw SolverError(
                            "solve: drift breaks monotonicity at this h (h |b_k| > a_k)");
                }
            }
            if (e[K.block - 2] < -1e-12)
                throw SolverError("solve: negative zeroth-order coefficient in cache");
        }
}

long capped_push(std::vector<double>& hist, long cap, double x) {
    // cap = 0 keeps everything; otherwise recording stops once the cap is hit
    if (cap > 0 && static_cast<long>(hist.size()) >= cap) return 0;
    hist.push_back(x);
    return 1;
}

}  // namespace

Method method_from_string(const std::string& s) {
    if (s == "jacobi") return Method::jacobi;
    if (s == "gauss_seidel" || s == "gauss-seidel") return Method::gauss_seidel;
    if (s == "policy") return Method::policy;
    throw std::invalid_argument("unknown method '" + s +
                                "'; expected jacobi, gauss_seidel or policy");
}

std::string method_name(Method m) {
    switch (m) {
        case Method::jacobi: return "jacobi";
        case Method::gauss_seidel: return "gauss_seidel";
        case Method::policy: return "policy";
    }
    return "?";
}

SchemeCache build_cache(const BellmanProblem& p, GridPtr grid, int threads) {
    SchemeCache K;
    K.grid = std::move(grid);
    K.n_controls = p.n_controls;
    K.has_drift = p.has_drift;
    K.d1 = p.dirs.d1();
    K.block = (p.has_drift ? 3 * K.d1 : K.d1) + 2;
    const std::int64_t slots = static_cast<std::int64_t>(K.grid->interior.size());
    K.data.assign(static_cast<size_t>(slots * K.n_controls * K.block), 0.0);

    const double h = K.grid->h, h2 = h * h;
    std::vector<double> mins(1, kInf), maxs(1, 0.0), n0s(1, 0.0);
    const int nthreads = std::max(1, threads);
    mins.assign(static_cast<size_t>(nthreads), kInf);
    maxs.assign(static_cast<size_t>(nthreads), 0.0);
    n0s.assign(static_cast<size_t>(nthreads), 0.0);

    std::atomic<int> tix{0};
    auto body = [&](std::int64_t lo, std::int64_t hi) {
        const int me = tix.fetch_add(1);
        std::vector<double> scratch_bp, scratch_bm;
        if (!K.has_drift) {
            scratch_bp.assign(static_cast<size_t>(K.d1), 0.0);
            scratch_bm.assign(static_cast<size_t>(K.d1), 0.0);
        }
        double x[3];
        for (std::int64_t slot = lo; slot < hi; ++slot) {
            const std::int64_t id = K.grid->interior[static_cast<size_t>(slot)];
            K.grid->coord(id, x);
            for (int ctrl = 0; ctrl < K.n_controls; ++ctrl) {
                double* e = K.data.data() + (slot * K.n_controls + ctrl) * K.block;
                double* a = e;
                double* bp = K.has_drift ? e + K.d1 : scratch_bp.data();
                double* bm = K.has_drift ? e + 2 * K.d1 : scratch_bm.data();
                double c = 0, f = 0;
                p.coeffs(ctrl, x, a, bp, bm, c, f);
                e[K.block - 2] = c;
                e[K.block - 1] = f;
                double asum = 0, babs = 0;
                for (int k = 0; k < K.d1; ++k) {
                    asum += a[k];
                    babs += std::abs(bp[k]) + std::abs(bm[k]);
                }
                n0s[static_cast<size_t>(me)] =
                    std::max(n0s[static_cast<size_t>(me)], 2.0 * asum + h * babs + c * h2);
                mins[static_cast<size_t>(me)] = std::min(mins[static_cast<size_t>(me)], c);
                maxs[static_cast<size_t>(me)] = std::max(maxs[static_cast<size_t>(me)], c);
            }
        }
    };
    parallel_for(slots, nthreads, body);

    K.n0 = *std::max_element(n0s.begin(), n0s.end());
    K.min_c = *std::min_element(mins.begin(), mins.end());
    K.max_c = *std::max_element(maxs.begin(), maxs.end());
    if (!(K.n0 > 0)) throw SolverError("build_cache: damping constant is zero (empty scheme)");
    return K;
}

double contraction_bound(double n0, double min_c, double h) {
    return 1.0 - min_c * h * h / n0;
}

DampingInfo compute_damping(const SchemeCache& cache) {
    return {cache.n0, contraction_bound(cache.n0, cache.min_c, cache.grid->h)};
}

double bellman_apply(const SchemeCache& cache, const GridFunction& v, std::int64_t node) {
    const auto& interior = cache.grid->interior;
    const auto it = std::lower_bound(interior.begin(), interior.end(), node);
    if (it == interior.end() || *it != node)
        throw std::invalid_argument("bellman_apply: node is not an interior node");
    const std::int64_t slot = it - interior.begin();
    const double h = cache.grid->h, h2 = h * h;
    return apply_h2(cache, v.v.data(), node, slot, h, h2) / h2;
}

double bellman_residual(const SchemeCache& cache, const GridFunction& v, int threads) {
    const double h = cache.grid->h, h2 = h * h;
    const std::int64_t slots = static_cast<std::int64_t>(cache.grid->interior.size());
    const int nthreads = std::max(1, threads);
    std::vector<double> worst(static_cast<size_t>(nthreads), 0.0);
    std::atomic<int> tix{0};
    parallel_for(slots, nthreads, [&](std::int64_t lo, std::int64_t hi) {
        const int me = tix.fetch_add(1);
        double w = 0.0;
        const double* vd = v.v.data();
        for (std::int64_t slot = lo; slot < hi; ++slot) {
            const std::int64_t id = cache.grid->interior[static_cast<size_t>(slot)];
            w = std::max(w, std::abs(apply_h2(cache, vd, id, slot, h, h2)));
        }
        worst[static_cast<size_t>(me)] = w;
    });
    return *std::max_element(worst.begin(), worst.end()) / h2;
}

GridFunction jacobi_step(const SchemeCache& cache, const GridFunction& v,
                         const GridFunction& g, double n0, double* sup_change,
                         int threads) {
    const Grid& grid = *cache.grid;
    GridFunction next = GridFunction::undefined(v.grid);
    const double h = grid.h, h2 = h * h;

    double band_change = 0.0;
    for (std::int64_t id : grid.band) {
        next.v[static_cast<size_t>(id)] = g[id];
        band_change = std::max(band_change, std::abs(g[id] - v[id]));
    }

    const std::int64_t slots = static_cast<std::int64_t>(grid.interior.size());
    const int nthreads = std::max(1, threads);
    std::vector<double> worst(static_cast<size_t>(nthreads), 0.0);
    std::atomic<int> tix{0};
    parallel_for(slots, nthreads, [&](std::int64_t lo, std::int64_t hi) {
        const int me = tix.fetch_add(1);
        double w = 0.0;
        const double* vd = v.v.data();
        for (std::int64_t slot = lo; slot < hi; ++slot) {
            const std::int64_t id = grid.interior[static_cast<size_t>(slot)];
            const double upd = apply_h2(cache, vd, id, slot, h, h2) / n0;
            next.v[static_cast<size_t>(id)] = vd[id] + upd;
            w = std::max(w, std::abs(upd));
        }
        worst[static_cast<size_t>(me)] = w;
    });
    if (sup_change)
        *sup_change = std::max(band_change, *std::max_element(worst.begin(), worst.end()));
    return next;
}

PolicyStepResult policy_iteration_step(const SchemeCache& cache, GridFunction& v,
                                       double inner_change_tol, long sweep_cap) {
    const Grid& grid = *cache.grid;
    const double h = grid.h, h2 = h * h;
    const std::int64_t slots = static_cast<std::int64_t>(grid.interior.size());

    PolicyStepResult res;
    res.policy.assign(static_cast<size_t>(slots), 0);
    const double* vd = v.v.data();
    for (std::int64_t slot = 0; slot < slots; ++slot) {
        const std::int64_t id = grid.interior[static_cast<size_t>(slot)];
        double best = -kInf;
        int arg = 0;
        for (int ctrl = 0; ctrl < cache.n_controls; ++ctrl) {
            const double val = bracket_h2(cache, vd, id, slot, ctrl, h, h2);
            if (val > best) {  // strict: ties keep the lowest control index
                best = val;
                arg = ctrl;
            }
        }
        res.policy[static_cast<size_t>(slot)] = arg;
    }

    // Gauss-Seidel on the frozen linear system, lexicographic order
    while (res.sweeps < sweep_cap) {
        double change = 0.0;
        double* w = v.v.data();
        for (std::int64_t slot = 0; slot < slots; ++slot) {
            const std::int64_t id = grid.interior[static_cast<size_t>(slot)];
            const double* e = cache.entry(slot, res.policy[static_cast<size_t>(slot)]);
            double num = h2 * e[cache.block - 1];
            double den = h2 * e[cache.block - 2];
            if (cache.has_drift) {
                const double* bp = e + cache.d1;
                const double* bm = e + 2 * cache.d1;
                for (int k = 0; k < cache.d1; ++k) {
                    const std::int64_t s = grid.dir_step[static_cast<size_t>(k)];
                    num += e[k] * (w[id + s] + w[id - s]) +
                           h * (bp[k] * w[id + s] + bm[k] * w[id - s]);
                    den += 2.0 * e[k] + h * (bp[k] + bm[k]);
                }
            } else {
                for (int k = 0; k < cache.d1; ++k) {
                    const std::int64_t s = grid.dir_step[static_cast<size_t>(k)];
                    num += e[k] * (w[id + s] + w[id - s]);
                    den += 2.0 * e[k];
                }
            }
            const double nv = num / den;
            change = std::max(change, std::abs(nv - w[id]));
            w[id] = nv;
        }
        ++res.sweeps;
        if (change <= inner_change_tol) return res;
    }
    res.stagnated = true;
    return res;
}

namespace {

std::pair<GridFunction, SolveReport> run_solve(const BellmanProblem& p, const SchemeCache& cache,
                                               const SolveOptions& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    const GridPtr grid = cache.grid;
    const double h = grid->h, h2 = h * h;

    check_monotone(cache);

    SolveReport rep;
    rep.method = method_name(opts.method);
    rep.n0 = cache.n0;
    rep.min_c = cache.min_c;
    rep.contraction_bound = contraction_bound(cache.n0, cache.min_c, h);
    rep.interior_nodes = static_cast<long>(grid->interior.size());
    rep.band_nodes = static_cast<long>(grid->band.size());
    rep.h = h;

    GridFunction g = GridFunction::undefined(grid);
    {
        double x[3];
        for (std::int64_t id : grid->band) {
            grid->coord(id, x);
            g.v[static_cast<size_t>(id)] = p.boundary_g(x);
        }
    }
    GridFunction v = GridFunction::zeros(grid);
    for (std::int64_t id : grid->band) v.v[static_cast<size_t>(id)] = g[id];

    const std::int64_t slots = static_cast<std::int64_t>(grid->interior.size());

    if (opts.method == Method::jacobi) {
        while (rep.iterations < opts.max_iter) {
            // one pass yields both the residual of v and the next iterate
            GridFunction next = GridFunction::undefined(grid);
            for (std::int64_t id : grid->band) next.v[static_cast<size_t>(id)] = g[id];
            const int nthreads = std::max(1, opts.threads);
            std::vector<double> wres(static_cast<size_t>(nthreads), 0.0),
                wchg(static_cast<size_t>(nthreads), 0.0);
            std::atomic<int> tix{0};
            parallel_for(slots, nthreads, [&](std::int64_t lo, std::int64_t hi) {
                const int me = tix.fetch_add(1);
                double wr = 0, wc = 0;
                const double* vd = v.v.data();
                for (std::int64_t slot = lo; slot < hi; ++slot) {
                    const std::int64_t id = grid->interior[static_cast<size_t>(slot)];
                    const double acc = apply_h2(cache, vd, id, slot, h, h2);
                    wr = std::max(wr, std::abs(acc));
                    const double upd = acc / cache.n0;
                    next.v[static_cast<size_t>(id)] = vd[id] + upd;
                    wc = std::max(wc, std::abs(upd));
                }
                wres[static_cast<size_t>(me)] = wr;
                wchg[static_cast<size_t>(me)] = wc;
            });
            const double residual = *std::max_element(wres.begin(), wres.end()) / h2;
            rep.final_residual = residual;
            capped_push(rep.residual_history, opts.history_cap, residual);
            if (residual <= opts.tol) {
                rep.converged = true;
                break;
            }
            double band_change = 0.0;
            for (std::int64_t id : grid->band)
                band_change = std::max(band_change, std::abs(g[id] - v[id]));
            const double change =
                std::max(band_change, *std::max_element(wchg.begin(), wchg.end()));
            capped_push(rep.sup_change_history, opts.history_cap, change);
            v = std::move(next);
            ++rep.iterations;
        }
    } else if (opts.method == Method::gauss_seidel) {
        // damped update applied in place, lexicographic sweeps
        while (rep.iterations < opts.max_iter) {
            const double residual = bellman_residual(cache, v, opts.threads);
            rep.final_residual = residual;
            capped_push(rep.residual_history, opts.history_cap, residual);
            if (residual <= opts.tol) {
                rep.converged = true;
                break;
            }
            double change = 0.0;
            double* w = v.v.data();
            for (std::int64_t slot = 0; slot < slots; ++slot) {
                const std::int64_t id = grid->interior[static_cast<size_t>(slot)];
                const double upd = apply_h2(cache, w, id, slot, h, h2) / cache.n0;
                w[id] += upd;
                change = std::max(change, std::abs(upd));
            }
            capped_push(rep.sup_change_history, opts.history_cap, change);
            ++rep.iterations;
        }
    } else {
        // policy iteration; inner tolerance in sweep-change units matching
        // residual tol/10 through the damping relation residual ~ n0 change/h^2
        const double inner_change_tol = 0.1 * opts.tol * h2 / cache.n0;
        const long outer_cap = 200;
        while (rep.policy_steps < outer_cap && rep.iterations < opts.max_iter) {
            const double residual = bellman_residual(cache, v, opts.threads);
            rep.final_residual = residual;
            capped_push(rep.residual_history, opts.history_cap, residual);
            if (residual <= opts.tol) {
                rep.converged = true;
                break;
            }
            const long sweep_cap =
                std::max<long>(1, std::min<long>(opts.max_iter - rep.iterations, 500000));
            PolicyStepResult step = policy_iteration_step(cache, v, inner_change_tol, sweep_cap);
            rep.iterations += step.sweeps;
            rep.linear_stagnation = rep.linear_stagnation || step.stagnated;
            ++rep.policy_steps;
            capped_push(rep.sup_change_history, opts.history_cap, 0.0);
        }
    }

    rep.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(v), std::move(rep)};
}

}  // namespace

std::pair<GridFunction, SolveReport> solve(const BellmanProblem& p, GridPtr grid,
                                           const SolveOptions& opts) {
    if (!(opts.tol > 0)) throw std::invalid_argument("solve: tol must be positive");
    const SchemeCache cache = build_cache(p, grid, opts.threads);
    return run_solve(p, cache, opts);
}

std::pair<GridFunction, SolveReport> solve_with_cache(const BellmanProblem& p,
                                                      const SchemeCache& cache,
                                                      const SolveOptions& opts) {
    if (!(opts.tol > 0)) throw std::invalid_argument("solve: tol must be positive");
    return run_solve(p, cache, opts);
}

ComparisonResult comparison_check(const SchemeCache& cache, const GridFunction& v1,
                                  const GridFunction& v2) {
    const Grid& grid = *cache.grid;
    const double h = grid.h, h2 = h * h;
    ComparisonResult r;
    for (std::int64_t id : grid.interior)
        r.lhs = std::max(r.lhs, v1[id] - v2[id]);
    for (std::int64_t id : grid.band) {
        r.lhs = std::max(r.lhs, v1[id] - v2[id]);
        r.band_term = std::max(r.band_term, v1[id] - v2[id]);
    }
    r.lhs = std::max(0.0, r.lhs);
    r.band_term = std::max(0.0, r.band_term);
    for (std::int64_t slot = 0; slot < static_cast<std::int64_t>(grid.interior.size());
         ++slot) {
        const std::int64_t id = grid.interior[static_cast<size_t>(slot)];
        const double d = apply_h2(cache, v2.v.data(), id, slot, h, h2) -
                         apply_h2(cache, v1.v.data(), id, slot, h, h2);
        r.interior_term = std::max(r.interior_term, d);
    }
    r.interior_term = std::max(0.0, r.interior_term) / h2;
    if (cache.min_c > 0)
        r.rhs = r.interior_term / cache.min_c + r.band_term;
    else
        r.rhs = (r.interior_term <= 0) ? r.band_term : kInf;
    r.slack = r.rhs - r.lhs;
    r.pass = r.slack >= -1e-12 * std::max(1.0, std::abs(r.rhs));
    return r;
}

AprioriResult apriori_bound_check(const SchemeCache& cache, const GridFunction& v,
                                  const GridFunction& g, double tol) {
    const Grid& grid = *cache.grid;
    const double h = grid.h, h2 = h * h;
    GridFunction zero = GridFunction::zeros(cache.grid);

    double h0_plus = 0.0, h0_minus = 0.0;
    for (std::int64_t slot = 0; slot < static_cast<std::int64_t>(grid.interior.size());
         ++slot) {
        const std::int64_t id = grid.interior[static_cast<size_t>(slot)];
        const double h0 = apply_h2(cache, zero.v.data(), id, slot, h, h2) / h2;
        h0_plus = std::max(h0_plus, h0);
        h0_minus = std::max(h0_minus, -h0);
    }
    double g_plus = 0.0, g_minus = 0.0;
    for (std::int64_t id : grid.band) {
        g_plus = std::max(g_plus, g[id]);
        g_minus = std::max(g_minus, -g[id]);
    }

    AprioriResult r;
    for (std::int64_t id : grid.interior) {
        r.sup_plus = std::max(r.sup_plus, v[id]);
        r.sup_minus = std::max(r.sup_minus, -v[id]);
    }
    for (std::int64_t id : grid.band) {
        r.sup_plus = std::max(r.sup_plus, v[id]);
        r.sup_minus = std::max(r.sup_minus, -v[id]);
    }
    r.sup_plus = std::max(0.0, r.sup_plus);
    r.sup_minus = std::max(0.0, r.sup_minus);

    if (cache.min_c > 0) {
        r.bound_plus = h0_plus / cache.min_c + g_plus;
        r.bound_minus = h0_minus / cache.min_c + g_minus;
    } else {
        r.bound_plus = (h0_plus <= 0) ? g_plus : kInf;
        r.bound_minus = (h0_minus <= 0) ? g_minus : kInf;
    }
    r.pass = r.sup_plus <= r.bound_plus + 10 * tol && r.sup_minus <= r.bound_minus + 10 * tol;
    return r;
}

nlohmann::json SolveReport::to_json() const {
    nlohmann::json j;
    j["schema"] = "hjb-solve/1";
    j["method"] = method;
    j["converged"] = converged;
    j["iterations"] = iterations;
    j["policy_steps"] = policy_steps;
    j["final_residual"] = final_residual;
    j["n0"] = n0;
    j["contraction_bound"] = contraction_bound;
    j["min_c"] = min_c;
    j["linear_stagnation"] = linear_stagnation;
    j["interior_nodes"] = interior_nodes;
    j["band_nodes"] = band_nodes;
    j["h"] = h;
    j["sup_change_history"] = sup_change_history;
    j["residual_history"] = residual_history;
    j["wall_time_sec"] = wall_time_sec;  // volatile field, excluded from byte comparisons
    return j;
}

}  // namespace hjb
