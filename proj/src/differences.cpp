#include "hjb/differences.hpp"

#include <cmath>
#include <stdexcept>

namespace hjb {

namespace {

double valued(const GridFunction& f, std::int64_t id, const char* who) {
    const double x = f[id];
    if (!std::isfinite(x))
        throw std::runtime_error(std::string(who) + ": neighbour carries no value");
    return x;
}

}  // namespace

double forward_difference(const GridFunction& v, std::int64_t node, int signed_k) {
    const Grid& g = *v.grid;
    const double v0 = valued(v, node, "forward_difference");
    const double v1 = valued(v, node + g.step(signed_k), "forward_difference");
    return (v1 - v0) / g.h;
}

double second_difference(const GridFunction& v, std::int64_t node, int unsigned_k) {
    const Grid& g = *v.grid;
    const std::int64_t s = g.step(unsigned_k);
    const double v0 = valued(v, node, "second_difference");
    const double vp = valued(v, node + s, "second_difference");
    const double vm = valued(v, node - s, "second_difference");
    return (vp - 2.0 * v0 + vm) / (g.h * g.h);
}

double cross_difference(const GridFunction& v, std::int64_t node, int signed_i, int signed_j) {
    const Grid& g = *v.grid;
    const std::int64_t si = g.step(signed_i), sj = g.step(signed_j);
    const double v00 = valued(v, node, "cross_difference");
    const double v10 = valued(v, node + si, "cross_difference");
    const double v01 = valued(v, node + sj, "cross_difference");
    const double v11 = valued(v, node + si + sj, "cross_difference");
    return (v11 - v10 - v01 + v00) / (g.h * g.h);
}

TaylorCheck taylor_consistency(const SmoothField& phi, const double* x, const Offset& e,
                               double h) {
    double xp[3], xm[3];
    for (int a = 0; a < 3; ++a) {
        xp[a] = x[a] + h * e[static_cast<size_t>(a)];
        xm[a] = x[a] - h * e[static_cast<size_t>(a)];
    }
    const double quot = (phi.value(xp) - 2.0 * phi.value(x) + phi.value(xm)) / (h * h);
    TaylorCheck out;
    out.gap = std::abs(phi.second_along(x, e) - quot);
    out.bound = h * h * phi.fourth_sup_along(x, e, h);
    return out;
}

TaylorCheck taylor_consistency_first(const SmoothField& phi, const double* x, const Offset& e,
                                     double h) {
    double xp[3];
    for (int a = 0; a < 3; ++a) xp[a] = x[a] + h * e[static_cast<size_t>(a)];
    const double quot = (phi.value(xp) - phi.value(x)) / h;
    TaylorCheck out;
    out.gap = std::abs(phi.first_along(x, e) - quot);
    out.bound = h * phi.second_sup_along(x, e, h);
    return out;
}

}  // namespace hjb
