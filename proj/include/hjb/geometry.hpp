#pragma once

#include <array>
#include <functional>
#include <string>

namespace hjb {

using Point = std::array<double, 3>;
using ScalarField = std::function<double(const double*)>;

/**
 * Bounded smooth domain given as the level set {psi > 0}.
 *
 * bounding box must contain the region; exact_distance (distance to the
 * complement) is optional. When absent, distance_to_complement falls back to
 * the conservative estimate max(0, psi(x)) / sup|grad psi|, with the gradient
 * bound sampled once over the box (grad_bound). The fallback never exceeds
 * the true distance for Lipschitz psi.
 */
struct Domain {
    std::string name;
    int dim = 2;
    ScalarField psi;
    Point box_lo{0, 0, 0};
    Point box_hi{0, 0, 0};
    ScalarField exact_distance;  // empty when unavailable
    double grad_bound = 0.0;     // sampled sup |grad psi|; > 0 enables the fallback
};

// sup |grad psi| estimated by central differences on a fixed sampling lattice
double estimate_gradient_bound(const ScalarField& psi, int dim, const Point& lo,
                               const Point& hi);

// exact distance when available, otherwise the psi / grad_bound fallback
double distance_to_complement(const Domain& dom, const double* x);

// unit-style built-ins
Domain disk_domain(double radius = 1.0);            // 2D, exact distance
Domain ball_domain(double radius = 1.0);            // 3D, exact distance
Domain ellipse_domain(double ax, double ay);        // 2D, fallback distance only

}  // namespace hjb
