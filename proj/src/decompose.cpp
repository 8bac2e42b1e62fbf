#include "hjb/decompose.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hjb {

SymMatrix SymMatrix::identity(int dim, double scale) {
    SymMatrix s;
    s.dim = dim;
    for (int i = 0; i < dim; ++i) s.at(i, i) = scale;
    return s;
}

SymMatrix SymMatrix::from2(double a11, double a12, double a22) {
    SymMatrix s;
    s.dim = 2;
    s.at(0, 0) = a11;
    s.at(0, 1) = s.at(1, 0) = a12;
    s.at(1, 1) = a22;
    return s;
}

SymMatrix reconstruct(const DirectionSet& dirs, std::span<const double> lambda) {
    SymMatrix s;
    s.dim = dirs.dim();
    for (int k = 1; k <= dirs.d1(); ++k) {
        const Offset& e = dirs.offset(k);
        const double l = lambda[static_cast<size_t>(k - 1)];
        for (int i = 0; i < s.dim; ++i)
            for (int j = 0; j < s.dim; ++j)
                s.at(i, j) += l * e[static_cast<size_t>(i)] * e[static_cast<size_t>(j)];
    }
    return s;
}

namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kCostTol = 1e-11;

// Dense two-phase simplex, Bland's rule, for
//   min sum(x)  s.t.  A x = b, x >= 0,   A is m x n.
// Returns true + x on feasibility, false when phase 1 cannot zero out.
bool simplex_min_sum(int m, int n, std::vector<double> A, std::vector<double> b,
                     std::vector<double>& x, double feas_tol) {
    // flip rows so b >= 0
    for (int r = 0; r < m; ++r)
        if (b[static_cast<size_t>(r)] < 0) {
            b[static_cast<size_t>(r)] = -b[static_cast<size_t>(r)];
            for (int c = 0; c < n; ++c) A[static_cast<size_t>(r * n + c)] = -A[static_cast<size_t>(r * n + c)];
        }

    // tableau: columns = n structural + m artificial + rhs
    const int cols = n + m + 1;
    std::vector<double> T(static_cast<size_t>(m * cols), 0.0);
    std::vector<int> basis(static_cast<size_t>(m));
    for (int r = 0; r < m; ++r) {
        for (int c = 0; c < n; ++c) T[static_cast<size_t>(r * cols + c)] = A[static_cast<size_t>(r * n + c)];
        T[static_cast<size_t>(r * cols + n + r)] = 1.0;
        T[static_cast<size_t>(r * cols + cols - 1)] = b[static_cast<size_t>(r)];
        basis[static_cast<size_t>(r)] = n + r;
    }

    auto pivot = [&](int pr, int pc) {
        const double pv = T[static_cast<size_t>(pr * cols + pc)];
        for (int c = 0; c < cols; ++c) T[static_cast<size_t>(pr * cols + c)] /= pv;
        for (int r = 0; r < m; ++r) {
            if (r == pr) continue;
            const double f = T[static_cast<size_t>(r * cols + pc)];
            if (f == 0.0) continue;
            for (int c = 0; c < cols; ++c)
                T[static_cast<size_t>(r * cols + c)] -= f * T[static_cast<size_t>(pr * cols + c)];
        }
        basis[static_cast<size_t>(pr)] = pc;
    };

    // run one phase: minimise sum of columns in [lo, hi) that are basic-costed 1
    auto run_phase = [&](int cost_lo, int cost_hi, int usable_cols) {
        while (true) {
            // reduced costs: cost_j - sum over rows of (basic cost)*(tableau)
            int enter = -1;
            for (int c = 0; c < usable_cols && enter < 0; ++c) {
                double rc = (c >= cost_lo && c < cost_hi) ? 1.0 : 0.0;
                for (int r = 0; r < m; ++r) {
                    const int bv = basis[static_cast<size_t>(r)];
                    const double bc = (bv >= cost_lo && bv < cost_hi) ? 1.0 : 0.0;
                    if (bc != 0.0) rc -= bc * T[static_cast<size_t>(r * cols + c)];
                }
                if (rc < -kCostTol) enter = c;  // Bland: lowest index
            }
            if (enter < 0) return;
            int leave = -1;
            double best = 0.0;
            for (int r = 0; r < m; ++r) {
                const double a = T[static_cast<size_t>(r * cols + enter)];
                if (a > kPivotTol) {
                    const double ratio = T[static_cast<size_t>(r * cols + cols - 1)] / a;
                    if (leave < 0 || ratio < best - 1e-15 ||
                        (std::abs(ratio - best) <= 1e-15 &&
                         basis[static_cast<size_t>(r)] < basis[static_cast<size_t>(leave)])) {
                        leave = r;
                        best = ratio;
                    }
                }
            }
            if (leave < 0) return;  // unbounded; cannot happen with >= 0 costs
            pivot(leave, enter);
        }
    };

    // phase 1: drive artificials (columns n .. n+m) to zero
    run_phase(n, n + m, n + m);
    double art = 0.0;
    for (int r = 0; r < m; ++r)
        if (basis[static_cast<size_t>(r)] >= n) art += T[static_cast<size_t>(r * cols + cols - 1)];
    if (art > feas_tol) return false;

    // pivot leftover degenerate artificials out where a structural column allows
    for (int r = 0; r < m; ++r) {
        if (basis[static_cast<size_t>(r)] < n) continue;
        for (int c = 0; c < n; ++c)
            if (std::abs(T[static_cast<size_t>(r * cols + c)]) > kPivotTol) {
                pivot(r, c);
                break;
            }
    }

    // phase 2: minimise the sum of structural variables
    run_phase(0, n, n);

    x.assign(static_cast<size_t>(n), 0.0);
    for (int r = 0; r < m; ++r)
        if (basis[static_cast<size_t>(r)] < n)
            x[static_cast<size_t>(basis[static_cast<size_t>(r)])] =
                std::max(0.0, T[static_cast<size_t>(r * cols + cols - 1)]);
    return true;
}

bool is_canonical2(const DirectionSet& dirs) {
    static const std::vector<Offset> kCanon{{1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {1, -1, 0}};
    return dirs.dim() == 2 && dirs.offsets() == kCanon;
}

}  // namespace

Decomposition decompose_matrix(const SymMatrix& a, const DirectionSet& dirs,
                               double floor_value) {
    if (a.dim != dirs.dim())
        throw std::invalid_argument("decompose_matrix: matrix / direction set dim mismatch");
    if (floor_value < 0)
        throw std::invalid_argument("decompose_matrix: floor must be nonnegative");
    for (int i = 0; i < a.dim; ++i)
        for (int j = i + 1; j < a.dim; ++j)
            if (a.at(i, j) != a.at(j, i))
                throw std::invalid_argument("decompose_matrix: matrix not symmetric");

    double scale = 1.0;
    for (int i = 0; i < a.dim; ++i)
        for (int j = 0; j < a.dim; ++j) scale = std::max(scale, std::abs(a.at(i, j)));

    Decomposition out;

    if (is_canonical2(dirs)) {
        const double a11 = a.at(0, 0), a12 = a.at(0, 1), a22 = a.at(1, 1);
        if (a11 >= std::abs(a12) && a22 >= std::abs(a12)) {
            std::vector<double> lam{a11 - std::abs(a12), a22 - std::abs(a12),
                                    std::max(a12, 0.0), std::max(-a12, 0.0)};
            if (*std::min_element(lam.begin(), lam.end()) >= floor_value) {
                out.lambda = std::move(lam);
                out.explicit_path = true;
                const SymMatrix r = reconstruct(dirs, out.lambda);
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j)
                        out.residual = std::max(out.residual, std::abs(r.at(i, j) - a.at(i, j)));
                return out;
            }
        }
    }

    // equality-constrained LP on mu = lambda - floor >= 0
    const int d = a.dim;
    const int m = d * (d + 1) / 2;
    const int n = dirs.d1();
    std::vector<double> A(static_cast<size_t>(m * n)), b(static_cast<size_t>(m));
    int row = 0;
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j, ++row) {
            double shift = 0.0;
            for (int k = 1; k <= n; ++k) {
                const Offset& e = dirs.offset(k);
                const double mij = static_cast<double>(e[static_cast<size_t>(i)]) * e[static_cast<size_t>(j)];
                A[static_cast<size_t>(row * n + (k - 1))] = mij;
                shift += mij;
            }
            b[static_cast<size_t>(row)] = a.at(i, j) - floor_value * shift;
        }

    std::vector<double> mu;
    if (!simplex_min_sum(m, n, A, b, mu, 1e-9 * scale)) {
        std::ostringstream os;
        os << "decompose_matrix: no nonnegative representation over " << dirs.describe();
        if (floor_value > 0) os << " with floor " << floor_value;
        throw DecompositionError(os.str());
    }

    out.lambda.resize(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k) out.lambda[static_cast<size_t>(k)] = mu[static_cast<size_t>(k)] + floor_value;
    const SymMatrix r = reconstruct(dirs, out.lambda);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            out.residual = std::max(out.residual, std::abs(r.at(i, j) - a.at(i, j)));
    if (out.residual > 1e-9 * scale) {
        std::ostringstream os;
        os << "decompose_matrix: representation defect " << out.residual
           << " exceeds tolerance over " << dirs.describe();
        throw DecompositionError(os.str());
    }
    return out;
}

}  // namespace hjb
