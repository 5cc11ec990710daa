#pragma once

#include <Eigen/Sparse>

#include <vector>

#include "coexist/grid.hpp"

namespace coexist {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Square sparse operator acting on interior nodal values.
class SparseOperator {
public:
    SparseOperator() = default;
    SparseOperator(SparseMatrix matrix, bool symmetric) : matrix_(std::move(matrix)), symmetric_(symmetric) {
        require(matrix_.rows() == matrix_.cols(), ErrorKind::DimensionMismatch, "operator must be square");
        matrix_.makeCompressed();
    }

    [[nodiscard]] std::size_t dimension() const noexcept { return static_cast<std::size_t>(matrix_.rows()); }
    [[nodiscard]] bool symmetric() const noexcept { return symmetric_; }
    [[nodiscard]] const SparseMatrix& matrix() const noexcept { return matrix_; }

    [[nodiscard]] Vector apply(const Vector& x) const {
        require(x.size() == matrix_.cols(), ErrorKind::DimensionMismatch, "operator/vector size mismatch");
        return matrix_ * x;
    }

    [[nodiscard]] GridFunction apply(const GridFunction& g) const { return GridFunction(g.grid(), apply(g.values())); }

    [[nodiscard]] double coeff(Eigen::Index r, Eigen::Index c) const { return matrix_.coeff(r, c); }

    /// Diagonal entries; meaningful mostly for weight operators.
    [[nodiscard]] Vector diagonal() const { return matrix_.diagonal(); }

    friend SparseOperator operator+(const SparseOperator& a, const SparseOperator& b) {
        require(a.dimension() == b.dimension(), ErrorKind::DimensionMismatch, "operator sum size mismatch");
        return {SparseMatrix(a.matrix_ + b.matrix_), a.symmetric_ && b.symmetric_};
    }

    friend SparseOperator operator*(double s, const SparseOperator& a) {
        return {SparseMatrix(s * a.matrix_), a.symmetric_};
    }

private:
    SparseMatrix matrix_;
    bool symmetric_ = false;
};

namespace detail {

inline SparseMatrix from_tridiagonal(const Vector& lower, const Vector& diag, const Vector& upper) {
    const auto n = diag.size();
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(3 * n));
    for (Eigen::Index i = 0; i < n; ++i) {
        t.emplace_back(i, i, diag[i]);
        if (i > 0 && lower[i] != 0.0) t.emplace_back(i, i - 1, lower[i]);
        if (i + 1 < n && upper[i] != 0.0) t.emplace_back(i, i + 1, upper[i]);
    }
    SparseMatrix m(n, n);
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

} // namespace detail

/// Discretizes u -> -(A u')' from the diffusion coefficient at the half-nodes.
inline SparseOperator assemble_diffusion(const HalfNodeField& coeff) {
    const auto n = static_cast<Eigen::Index>(coeff.grid.n_interior());
    require(coeff.values.size() == n + 1, ErrorKind::DimensionMismatch, "half-node field needs n + 1 values");
    require(coeff.values.minCoeff() > 0.0, ErrorKind::InvalidArgument, "diffusion coefficient must be positive");
    const double ih2 = 1.0 / (coeff.grid.spacing() * coeff.grid.spacing());
    Vector lo(n), di(n), up(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double west = coeff.values[i];
        const double east = coeff.values[i + 1];
        lo[i] = -west * ih2;
        di[i] = (west + east) * ih2;
        up[i] = -east * ih2;
    }
    return {detail::from_tridiagonal(lo, di, up), true};
}

/// Row i is [-A_{i-1/2}, A_{i-1/2} + A_{i+1/2}, -A_{i+1/2}] / h^2 with A_{i+1/2} the mean of
/// the adjacent nodal coefficients.
inline SparseOperator assemble_diffusion(const Grid& grid, const NodeField& coeff) {
    require(coeff.grid() == grid, ErrorKind::DimensionMismatch, "coefficient lives on a different grid");
    require(coeff.values().minCoeff() > 0.0, ErrorKind::InvalidArgument, "diffusion coefficient must be positive");
    return assemble_diffusion(HalfNodeField::average(coeff));
}

/// Discretizes u -> -(B u)' from the flux coefficient at half-nodes, with u_{k+1/2} taken as
/// the mean of its neighbours (zero at the boundary).
inline SparseOperator assemble_drift(const HalfNodeField& flux) {
    const auto n = static_cast<Eigen::Index>(flux.grid.n_interior());
    require(flux.values.size() == n + 1, ErrorKind::DimensionMismatch, "half-node field needs n + 1 values");
    const double i2h = 0.5 / flux.grid.spacing();
    Vector lo(n), di(n), up(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double west = flux.values[i];
        const double east = flux.values[i + 1];
        lo[i] = west * i2h;
        di[i] = (west - east) * i2h;
        up[i] = -east * i2h;
    }
    return {detail::from_tridiagonal(lo, di, up), false};
}

inline SparseOperator assemble_drift(const Grid& grid, const NodeField& flux_coeff) {
    require(flux_coeff.grid() == grid, ErrorKind::DimensionMismatch, "coefficient lives on a different grid");
    return assemble_drift(HalfNodeField::average(flux_coeff));
}

inline SparseOperator assemble_weight(const Grid& grid, const Vector& weight) {
    const auto n = static_cast<Eigen::Index>(grid.n_interior());
    require(weight.size() == n, ErrorKind::DimensionMismatch, "weight length does not match grid");
    require(weight.allFinite(), ErrorKind::InvalidArgument, "weight must be finite");
    SparseMatrix m(n, n);
    std::vector<Triplet> t;
    for (Eigen::Index i = 0; i < n; ++i) t.emplace_back(i, i, weight[i]);
    m.setFromTriplets(t.begin(), t.end());
    return {std::move(m), true};
}

inline SparseOperator assemble_weight(const Grid& grid, const GridFunction& weight) {
    return assemble_weight(grid, weight.values());
}

/// Constant-coefficient Dirichlet Laplacian -u''.
inline SparseOperator laplacian(const Grid& grid) {
    return assemble_diffusion(grid, NodeField::constant(grid, 1.0));
}

} // namespace coexist
