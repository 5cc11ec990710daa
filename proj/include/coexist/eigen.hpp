#pragma once

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "coexist/grid.hpp"
#include "coexist/operators.hpp"
#include "coexist/quadrature.hpp"

namespace coexist {

using ScalarMap = std::function<double(double)>;

struct EigenOptions {
    double tol = 1e-10;
    int max_iter = 10'000;
};

/// Principal eigenpair of L phi = sigma C phi. The eigenfunction is positive with sup-norm 1.
struct EigenResult {
    double sigma1 = 0.0;
    GridFunction eigenfunction;
    int iterations = 0;
    double residual = 0.0;   ///< ||L phi - sigma1 C phi||_inf
    double shift = 0.0;      ///< shift used by the inverse iteration
};

namespace detail {

/// Lower Gershgorin bound of C^{-1} L for a diagonal C.
inline double gershgorin_lower_bound(const SparseMatrix& L, const Vector& c) {
    Vector center = Vector::Zero(L.rows());
    Vector radius = Vector::Zero(L.rows());
    for (Eigen::Index col = 0; col < L.outerSize(); ++col) {
        for (SparseMatrix::InnerIterator it(L, col); it; ++it) {
            if (it.row() == it.col()) center[it.row()] += it.value();
            else radius[it.row()] += std::abs(it.value());
        }
    }
    return ((center - radius).array() / c.array()).minCoeff();
}

} // namespace detail

/// Shift-invert inverse iteration for the eigenvalue of L phi = sigma C phi with a positive
/// eigenfunction. The shift sits strictly below the Gershgorin bound of C^{-1} L, so
/// L - sC is a nonsingular M-matrix whenever L is a Z-matrix and the iteration is a
/// power method on a positive operator.
inline EigenResult principal_eigenpair(const Grid& grid, const SparseOperator& L, const SparseOperator& C,
                                       const EigenOptions& opts = {}) {
    const auto n = static_cast<Eigen::Index>(L.dimension());
    require(L.dimension() == grid.n_interior() && C.dimension() == L.dimension(), ErrorKind::DimensionMismatch,
            "eigenproblem operators do not match the grid");
    const Vector c = C.diagonal();
    require(SparseMatrix(C.matrix()).nonZeros() <= n, ErrorKind::InvalidArgument, "weight operator must be diagonal");
    require(c.minCoeff() > 0.0, ErrorKind::InvalidArgument, "weight must be strictly positive");

    const double bound = detail::gershgorin_lower_bound(L.matrix(), c);
    const double shift = bound - std::max(1.0, 1e-3 * std::abs(bound));

    SparseMatrix shifted = L.matrix() - shift * C.matrix();
    shifted.makeCompressed();
    Eigen::SparseLU<SparseMatrix> lu;
    lu.compute(shifted);
    require(lu.info() == Eigen::Success, ErrorKind::NonConvergence, "shifted operator factorization failed");

    Vector phi = Vector::Ones(n);
    double sigma = std::numeric_limits<double>::infinity();
    EigenResult result;
    result.shift = shift;
    for (int it = 1; it <= opts.max_iter; ++it) {
        Vector y = lu.solve(c.cwiseProduct(phi));
        Eigen::Index imax = 0;
        y.cwiseAbs().maxCoeff(&imax);
        const double peak = y[imax];
        require(std::isfinite(peak) && peak != 0.0, ErrorKind::NonConvergence, "inverse iteration broke down");
        phi = y / peak;
        const double next = shift + 1.0 / peak;
        const bool settled = std::abs(next - sigma) < opts.tol * std::max(1.0, std::abs(next));
        sigma = next;
        if (settled) {
            result.sigma1 = sigma;
            result.iterations = it;
            result.residual = (L.matrix() * phi - sigma * c.cwiseProduct(phi)).cwiseAbs().maxCoeff();
            if (phi.minCoeff() <= 0.0) {
                std::ostringstream msg;
                msg << "converged eigenfunction changes sign (sigma = " << sigma << ", min = " << phi.minCoeff() << ")";
                fail(ErrorKind::SignFailure, msg.str());
            }
            result.eigenfunction = GridFunction(grid, std::move(phi));
            return result;
        }
    }
    fail(ErrorKind::NonConvergence, "inverse iteration exceeded max_iter = " + std::to_string(opts.max_iter));
}

/// sigma_1[-(A u')' + B; C] with A given at all nodes and B, C at interior nodes.
inline EigenResult sigma1_divergence(const Grid& grid, const NodeField& A, const GridFunction& B,
                                     const GridFunction& C, const EigenOptions& opts = {}) {
    const SparseOperator L = assemble_diffusion(grid, A) + assemble_weight(grid, B);
    return principal_eigenpair(grid, L, assemble_weight(grid, C), opts);
}

/// Operator u -> -(M1(v) u v' + M2(v) u')' with both coefficients evaluated at the half-node
/// averages of v. This is the exact linearization used by the coupled-system Jacobian.
inline SparseOperator assemble_drift_diffusion(const Grid& grid, const ScalarMap& M1, const ScalarMap& M2,
                                              const GridFunction& v) {
    const auto n = static_cast<Eigen::Index>(grid.n_interior());
    const double h = grid.spacing();
    HalfNodeField diff{grid, Vector(n + 1)};
    HalfNodeField flux{grid, Vector(n + 1)};
    for (Eigen::Index k = 0; k <= n; ++k) {
        const double vw = v.at_full(static_cast<std::size_t>(k));
        const double ve = v.at_full(static_cast<std::size_t>(k + 1));
        const double mid = 0.5 * (vw + ve);
        diff.values[k] = M2(mid);
        flux.values[k] = M1(mid) * (ve - vw) / h;
    }
    return assemble_diffusion(diff) + assemble_drift(flux);
}

/// sigma_1[-div(M1(v) . grad v + M2(v) grad) + B; C].
inline EigenResult sigma1_drift(const Grid& grid, const ScalarMap& M1, const ScalarMap& M2, const GridFunction& v,
                                const GridFunction& B, const GridFunction& C, const EigenOptions& opts = {}) {
    const SparseOperator L = assemble_drift_diffusion(grid, M1, M2, v) + assemble_weight(grid, B);
    return principal_eigenpair(grid, L, assemble_weight(grid, C), opts);
}

/// e^{-h(v)} at every node (boundary included), h(z) = int_0^z M1/M2.
inline NodeField gauge_transform(const ScalarMap& M1, const ScalarMap& M2, const GridFunction& v,
                                 double abs_tol = 1e-10) {
    const ScalarMap ratio = [&](double s) { return M1(s) / M2(s); };
    return NodeField::map(v, [&](double z) { return std::exp(-integrate(ratio, 0.0, z, abs_tol)); });
}

struct TransformGap {
    double sigma_drift = 0.0;
    double sigma_transformed = 0.0;
    double gap = 0.0;
};

/// Evaluates both sides of the gauge identity
///   sigma_1[-div(M1(v) . grad v + M2(v) grad) + B; C]
///     = sigma_1[-div(M2(v) e^{-h(v)} grad) + B e^{-h(v)}; C e^{-h(v)}]
/// on the same grid.
inline TransformGap transform_identity_check(const Grid& grid, const ScalarMap& M1, const ScalarMap& M2,
                                             const GridFunction& v, const GridFunction& B, const GridFunction& C,
                                             const EigenOptions& opts = {}) {
    TransformGap out;
    out.sigma_drift = sigma1_drift(grid, M1, M2, v, B, C, opts).sigma1;

    const NodeField gauge = gauge_transform(M1, M2, v);
    Vector a(static_cast<Eigen::Index>(grid.n_interior() + 2));
    for (std::size_t k = 0; k < grid.n_interior() + 2; ++k)
        a[static_cast<Eigen::Index>(k)] = M2(v.at_full(k)) * gauge[k];
    const Vector g = gauge.values().segment(1, static_cast<Eigen::Index>(grid.n_interior()));
    out.sigma_transformed = sigma1_divergence(grid, NodeField(grid, a), GridFunction(grid, B.values().cwiseProduct(g)),
                                              GridFunction(grid, C.values().cwiseProduct(g)), opts)
                                .sigma1;
    out.gap = std::abs(out.sigma_drift - out.sigma_transformed);
    return out;
}

} // namespace coexist
