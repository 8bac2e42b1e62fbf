#pragma once

#include <functional>

#include "hjb/grid.hpp"

namespace hjb {

// (v(x + h e_k) - v(x)) / h for signed k. Throws std::runtime_error when the
// neighbour carries no value (unused node).
double forward_difference(const GridFunction& v, std::int64_t node, int signed_k);

// (v(x + h e_k) - 2 v(x) + v(x - h e_k)) / h^2 for unsigned k in [1, d1].
double second_difference(const GridFunction& v, std::int64_t node, int unsigned_k);

// composition delta_i delta_j for signed i, j:
// (v(x+he_i+he_j) - v(x+he_i) - v(x+he_j) + v(x)) / h^2
double cross_difference(const GridFunction& v, std::int64_t node, int signed_i, int signed_j);

/**
 * Analytic scalar field with directional-derivative data, for consistency
 * checks and manufactured sources. Directions are raw integer offsets
 * (derivatives are along the unnormalised vector e).
 */
struct SmoothField {
    ScalarField value;
    // D_e value(x)
    std::function<double(const double*, const Offset&)> first_along;
    // D_e^2 value(x)
    std::function<double(const double*, const Offset&)> second_along;
    // sup over |t| <= 1 of |D_e^2 value(x + t h e)|
    std::function<double(const double*, const Offset&, double)> second_sup_along;
    // sup over |t| <= 1 of |D_e^4 value(x + t h e)|
    std::function<double(const double*, const Offset&, double)> fourth_sup_along;
};

struct TaylorCheck {
    double gap;    // measured |analytic derivative - difference quotient|
    double bound;  // certified Taylor remainder bound
};

// second differences: gap = |D_e^2 phi(x) - Delta_{h,e} phi(x)|,
// bound = h^2 * sup_{|t|<=1} |D_e^4 phi(x + t h e)|
TaylorCheck taylor_consistency(const SmoothField& phi, const double* x, const Offset& e,
                               double h);

// forward differences: gap = |D_e phi(x) - delta_{h,e} phi(x)|,
// bound = h * sup_{|t|<=1} |D_e^2 phi(x + t h e)|
TaylorCheck taylor_consistency_first(const SmoothField& phi, const double* x, const Offset& e,
                                     double h);

}  // namespace hjb
