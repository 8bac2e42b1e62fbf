#include "hjb/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hjb {

double estimate_gradient_bound(const ScalarField& psi, int dim, const Point& lo,
                               const Point& hi) {
    // fixed 33 samples per axis, central differences with a small step
    constexpr int kSamples = 33;
    double best = 0.0;
    const int nz = (dim == 3) ? kSamples : 1;
    for (int i = 0; i < kSamples; ++i)
        for (int j = 0; j < kSamples; ++j)
            for (int k = 0; k < nz; ++k) {
                Point x{lo[0] + (hi[0] - lo[0]) * i / (kSamples - 1),
                        lo[1] + (hi[1] - lo[1]) * j / (kSamples - 1), 0.0};
                if (dim == 3) x[2] = lo[2] + (hi[2] - lo[2]) * k / (kSamples - 1);
                double g2 = 0.0;
                for (int ax = 0; ax < dim; ++ax) {
                    const double step = 1e-5 * std::max(1.0, hi[ax] - lo[ax]);
                    Point xp = x, xm = x;
                    xp[static_cast<size_t>(ax)] += step;
                    xm[static_cast<size_t>(ax)] -= step;
                    const double d = (psi(xp.data()) - psi(xm.data())) / (2 * step);
                    g2 += d * d;
                }
                best = std::max(best, std::sqrt(g2));
            }
    return best;
}

double distance_to_complement(const Domain& dom, const double* x) {
    if (dom.exact_distance) return std::max(0.0, dom.exact_distance(x));
    if (!(dom.grad_bound > 0.0))
        throw std::runtime_error(
            "distance_to_complement: domain '" + dom.name +
            "' has neither exact_distance nor a positive grad_bound");
    return std::max(0.0, dom.psi(x)) / dom.grad_bound;
}

Domain disk_domain(double radius) {
    if (!(radius > 0)) throw std::invalid_argument("disk_domain: radius must be positive");
    Domain d;
    d.name = "disk";
    d.dim = 2;
    const double r = radius;
    d.psi = [r](const double* x) { return r * r - (x[0] * x[0] + x[1] * x[1]); };
    d.box_lo = {-r, -r, 0};
    d.box_hi = {r, r, 0};
    d.exact_distance = [r](const double* x) {
        return r - std::sqrt(x[0] * x[0] + x[1] * x[1]);
    };
    d.grad_bound = 2 * r;  // |grad psi| = 2|x| <= 2r on the box corners' inscribed ball
    return d;
}

Domain ball_domain(double radius) {
    if (!(radius > 0)) throw std::invalid_argument("ball_domain: radius must be positive");
    Domain d;
    d.name = "ball";
    d.dim = 3;
    const double r = radius;
    d.psi = [r](const double* x) {
        return r * r - (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    };
    d.box_lo = {-r, -r, -r};
    d.box_hi = {r, r, r};
    d.exact_distance = [r](const double* x) {
        return r - std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    };
    d.grad_bound = 2 * r;
    return d;
}

Domain ellipse_domain(double ax, double ay) {
    if (!(ax > 0) || !(ay > 0))
        throw std::invalid_argument("ellipse_domain: semi-axes must be positive");
    Domain d;
    d.name = "ellipse";
    d.dim = 2;
    d.psi = [ax, ay](const double* x) {
        return 1.0 - (x[0] * x[0]) / (ax * ax) - (x[1] * x[1]) / (ay * ay);
    };
    d.box_lo = {-ax, -ay, 0};
    d.box_hi = {ax, ay, 0};
    d.grad_bound = estimate_gradient_bound(d.psi, 2, d.box_lo, d.box_hi);
    return d;
}

}  // namespace hjb
