#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "hjb/directions.hpp"

namespace hjb {

struct SymMatrix {
    int dim = 2;
    std::array<std::array<double, 3>, 3> m{{{0, 0, 0}, {0, 0, 0}, {0, 0, 0}}};

    double at(int i, int j) const { return m[static_cast<size_t>(i)][static_cast<size_t>(j)]; }
    double& at(int i, int j) { return m[static_cast<size_t>(i)][static_cast<size_t>(j)]; }

    static SymMatrix identity(int dim, double scale = 1.0);
    static SymMatrix from2(double a11, double a12, double a22);
};

struct DecompositionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Decomposition {
    std::vector<double> lambda;  // one weight per unsigned direction
    bool explicit_path = false;  // closed-form 2D branch taken
    double residual = 0.0;       // max-norm reconstruction defect
};

// sum_k lambda_k e_k e_k^T over the unsigned directions
SymMatrix reconstruct(const DirectionSet& dirs, std::span<const double> lambda);

/**
 * Write a as sum_k lambda_k e_k e_k^T with lambda_k >= floor_value.
 *
 * Canonical 2D set with a diagonally dominant matrix takes the closed form
 *   lambda_{e1+e2} = max(a12, 0), lambda_{e1-e2} = max(-a12, 0),
 *   lambda_{e1} = a11 - |a12|,    lambda_{e2} = a22 - |a12|
 * (when that already respects the floor). Everything else goes through a
 * small equality-constrained linear program minimising sum lambda_k.
 * Throws DecompositionError when no such representation exists; the message
 * carries the infeasibility defect.
 */
Decomposition decompose_matrix(const SymMatrix& a, const DirectionSet& dirs,
                               double floor_value = 0.0);

}  // namespace hjb
