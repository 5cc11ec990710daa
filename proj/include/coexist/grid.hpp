#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>

#include "coexist/errors.hpp"

namespace coexist {

using Vector = Eigen::VectorXd;

/// Uniform mesh of (0, length) with homogeneous Dirichlet data at both ends.
/// Only the interior nodes x_i = i*spacing, i = 1..n_interior, carry unknowns.
class Grid {
public:
    Grid() = default;

    [[nodiscard]] std::size_t n_interior() const noexcept { return n_; }
    [[nodiscard]] double length() const noexcept { return length_; }
    [[nodiscard]] double spacing() const noexcept { return spacing_; }

    /// Interior node i in [0, n_interior).
    [[nodiscard]] double node(std::size_t i) const noexcept {
        return static_cast<double>(i + 1) * spacing_;
    }

    /// Node k in [0, n_interior + 1], boundary points included.
    [[nodiscard]] double full_node(std::size_t k) const noexcept {
        return static_cast<double>(k) * spacing_;
    }

    [[nodiscard]] Vector nodes() const {
        Vector x(static_cast<Eigen::Index>(n_));
        for (std::size_t i = 0; i < n_; ++i) x[static_cast<Eigen::Index>(i)] = node(i);
        return x;
    }

    friend bool operator==(const Grid& a, const Grid& b) noexcept {
        return a.n_ == b.n_ && a.length_ == b.length_;
    }

    friend Grid make_grid(std::size_t n_interior, double length);

private:
    Grid(std::size_t n, double length)
        : n_(n), length_(length), spacing_(length / static_cast<double>(n + 1)) {}

    std::size_t n_ = 0;
    double length_ = 0.0;
    double spacing_ = 0.0;
};

inline Grid make_grid(std::size_t n_interior, double length) {
    require(n_interior >= 3, ErrorKind::InvalidArgument,
            "grid needs at least 3 interior nodes, got " + std::to_string(n_interior));
    require(length > 0.0 && std::isfinite(length), ErrorKind::InvalidArgument,
            "domain length must be positive and finite");
    return Grid(n_interior, length);
}

/// Nodal values of a field that vanishes on the boundary.
class GridFunction {
public:
    GridFunction() = default;

    explicit GridFunction(const Grid& grid)
        : grid_(grid), values_(Vector::Zero(static_cast<Eigen::Index>(grid.n_interior()))) {}

    GridFunction(const Grid& grid, Vector values) : grid_(grid), values_(std::move(values)) {
        require(static_cast<std::size_t>(values_.size()) == grid.n_interior(),
                ErrorKind::DimensionMismatch, "grid function length does not match grid");
    }

    static GridFunction sample(const Grid& grid, const std::function<double(double)>& fn) {
        GridFunction g(grid);
        for (std::size_t i = 0; i < grid.n_interior(); ++i)
            g.values_[static_cast<Eigen::Index>(i)] = fn(grid.node(i));
        return g;
    }

    static GridFunction constant(const Grid& grid, double value) {
        return GridFunction(grid, Vector::Constant(static_cast<Eigen::Index>(grid.n_interior()), value));
    }

    [[nodiscard]] const Grid& grid() const noexcept { return grid_; }
    [[nodiscard]] const Vector& values() const noexcept { return values_; }
    [[nodiscard]] Vector& values() noexcept { return values_; }
    [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }

    double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }
    double& operator[](std::size_t i) { return values_[static_cast<Eigen::Index>(i)]; }

    /// Value at full node k in [0, n+1]; zero at the two boundary points.
    [[nodiscard]] double at_full(std::size_t k) const {
        if (k == 0 || k == size() + 1) return 0.0;
        return values_[static_cast<Eigen::Index>(k - 1)];
    }

    [[nodiscard]] double sup_norm() const { return values_.size() ? values_.cwiseAbs().maxCoeff() : 0.0; }
    [[nodiscard]] double l2_norm() const { return std::sqrt(grid_.spacing()) * values_.norm(); }
    [[nodiscard]] double min() const { return values_.minCoeff(); }
    [[nodiscard]] double max() const { return values_.maxCoeff(); }
    [[nodiscard]] bool positive() const { return values_.size() > 0 && values_.minCoeff() > 0.0; }

private:
    Grid grid_;
    Vector values_;
};

/// Coefficient values at all n_interior + 2 nodes, boundary points included.
class NodeField {
public:
    NodeField() = default;

    NodeField(const Grid& grid, Vector values) : grid_(grid), values_(std::move(values)) {
        require(static_cast<std::size_t>(values_.size()) == grid.n_interior() + 2,
                ErrorKind::DimensionMismatch, "node field needs n_interior + 2 values");
    }

    static NodeField sample(const Grid& grid, const std::function<double(double)>& fn) {
        Vector v(static_cast<Eigen::Index>(grid.n_interior() + 2));
        for (std::size_t k = 0; k < grid.n_interior() + 2; ++k)
            v[static_cast<Eigen::Index>(k)] = fn(grid.full_node(k));
        return NodeField(grid, std::move(v));
    }

    static NodeField constant(const Grid& grid, double value) {
        return NodeField(grid, Vector::Constant(static_cast<Eigen::Index>(grid.n_interior() + 2), value));
    }

    /// Applies `fn` to a grid function padded with its zero boundary values.
    static NodeField map(const GridFunction& g, const std::function<double(double)>& fn) {
        Vector v(static_cast<Eigen::Index>(g.size() + 2));
        for (std::size_t k = 0; k < g.size() + 2; ++k) v[static_cast<Eigen::Index>(k)] = fn(g.at_full(k));
        return NodeField(g.grid(), std::move(v));
    }

    [[nodiscard]] const Grid& grid() const noexcept { return grid_; }
    [[nodiscard]] const Vector& values() const noexcept { return values_; }
    double operator[](std::size_t k) const { return values_[static_cast<Eigen::Index>(k)]; }

    [[nodiscard]] GridFunction interior() const {
        return GridFunction(grid_, values_.segment(1, static_cast<Eigen::Index>(grid_.n_interior())));
    }

private:
    Grid grid_;
    Vector values_;
};

/// Values on the n_interior + 1 half-nodes x_{k+1/2}, k = 0..n_interior.
struct HalfNodeField {
    Grid grid;
    Vector values;

    /// Arithmetic mean of adjacent nodal values.
    static HalfNodeField average(const NodeField& f) {
        const auto n = static_cast<Eigen::Index>(f.grid().n_interior());
        HalfNodeField h{f.grid(), Vector(n + 1)};
        for (Eigen::Index k = 0; k <= n; ++k) h.values[k] = 0.5 * (f.values()[k] + f.values()[k + 1]);
        return h;
    }
};

} // namespace coexist
