#pragma once

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "coexist/eigen.hpp"
#include "coexist/grid.hpp"
#include "coexist/operators.hpp"
#include "coexist/quadrature.hpp"

namespace coexist {

/// A scalar function of one variable together with its first derivative.
struct ScalarFunction {
    ScalarMap value;
    ScalarMap derivative;

    double operator()(double s) const { return value(s); }
};

/// A reaction term r(x, w) with its w-derivative.
struct SiteFunction {
    std::function<double(double, double)> value;
    std::function<double(double, double)> dw;

    double operator()(double x, double w) const { return value(x, w); }
};

/// -(d(w) w')' = gamma * weight(x) * w + h(x, w) * w on (0, L), w = 0 at both ends.
struct ScalarProblem {
    ScalarFunction diffusion;
    SiteFunction reaction;
    double gamma = 0.0;
    std::function<double(double)> weight = [](double) { return 1.0; };
    /// Optional closed form of the Kirchhoff transform; quadrature is used when empty.
    ScalarMap kirchhoff;
};

/// Logistic problem -(d w')' = gamma w - w^2 with constant diffusion d.
inline ScalarProblem logistic_problem(double gamma, double d = 1.0) {
    ScalarProblem p;
    p.diffusion = {[d](double) { return d; }, [](double) { return 0.0; }};
    p.reaction = {[](double, double w) { return -w; }, [](double, double) { return -1.0; }};
    p.gamma = gamma;
    p.kirchhoff = [d](double s) { return d * s; };
    return p;
}

/// I(s) = int_0^s d(t) dt.
inline double kirchhoff(const ScalarMap& d, double s, double abs_tol = 1e-12) {
    return integrate(d, 0.0, s, abs_tol);
}

struct ScalarSolveOptions {
    double tol = 1e-8;           ///< residual sup-norm, relative to max(1, ||I(w)||_inf)
    int max_iter = 100;
    int max_halvings = 8;
    double zero_threshold = 1e-8;
    double step_tol = 1e-9;      ///< last Newton step, relative to max(||w||_inf, zero_threshold)
};

enum class ScalarStatus { Positive, NoPositiveSolution };

struct ScalarSolveResult {
    ScalarStatus status = ScalarStatus::NoPositiveSolution;
    GridFunction solution;   ///< last Newton iterate (the positive solution when status == Positive)
    double residual = 0.0;
    int iterations = 0;

    [[nodiscard]] bool found() const noexcept { return status == ScalarStatus::Positive; }
};

namespace detail {

inline Vector kirchhoff_values(const ScalarProblem& p, const Vector& w) {
    Vector out(w.size());
    for (Eigen::Index i = 0; i < w.size(); ++i)
        out[i] = p.kirchhoff ? p.kirchhoff(w[i]) : kirchhoff(p.diffusion.value, w[i]);
    return out;
}

inline Vector sample_weight(const Grid& grid, const std::function<double(double)>& weight) {
    return GridFunction::sample(grid, weight).values();
}

struct ScalarSystem {
    const ScalarProblem& p;
    const Grid& grid;
    SparseMatrix lap;
    Vector weight;
    Vector x;

    ScalarSystem(const ScalarProblem& problem, const Grid& g)
        : p(problem), grid(g), lap(laplacian(g).matrix()), weight(sample_weight(g, problem.weight)), x(g.nodes()) {}

    Vector residual(const Vector& w) const {
        Vector r = lap * kirchhoff_values(p, w);
        for (Eigen::Index i = 0; i < w.size(); ++i) r[i] -= (p.gamma * weight[i] + p.reaction(x[i], w[i])) * w[i];
        return r;
    }

    /// L_Delta diag(d(w)) - diag(gamma*weight + h(w) + w h'(w)).
    SparseMatrix jacobian(const Vector& w) const {
        Vector d(w.size()), q(w.size());
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            d[i] = p.diffusion(w[i]);
            q[i] = p.gamma * weight[i] + p.reaction(x[i], w[i]) + w[i] * p.reaction.dw(x[i], w[i]);
        }
        SparseMatrix j = lap * d.asDiagonal();
        for (Eigen::Index i = 0; i < w.size(); ++i) j.coeffRef(i, i) -= q[i];
        j.makeCompressed();
        return j;
    }

    double scale(const Vector& w) const {
        return std::max(1.0, kirchhoff_values(p, w).cwiseAbs().maxCoeff());
    }
};

} // namespace detail

/// Scaled discrete residual ||L_Delta I(w) - gamma weight w - h(w) w||_inf / max(1, ||I(w)||_inf).
inline double scalar_residual(const ScalarProblem& problem, const GridFunction& w) {
    detail::ScalarSystem sys(problem, w.grid());
    return sys.residual(w.values()).cwiseAbs().maxCoeff() / sys.scale(w.values());
}

/// Damped Newton on the Kirchhoff form -Delta[I(w)] = gamma w + h(w) w.
inline ScalarSolveResult solve_scalar(const ScalarProblem& problem, const Grid& grid, const GridFunction& guess,
                                      const ScalarSolveOptions& opts = {}) {
    require(guess.grid() == grid, ErrorKind::DimensionMismatch, "guess lives on a different grid");
    require(guess.min() >= 0.0, ErrorKind::InvalidArgument, "initial guess must be nonnegative");
    detail::ScalarSystem sys(problem, grid);

    ScalarSolveResult out;
    Vector w = guess.values();
    Vector r = sys.residual(w);
    double rnorm = r.cwiseAbs().maxCoeff();
    Eigen::SparseLU<SparseMatrix> lu;

    auto finish = [&](int iterations) {
        out.iterations = iterations;
        out.residual = rnorm / sys.scale(w);
        out.solution = GridFunction(grid, w);
        const bool trivial = w.cwiseAbs().maxCoeff() < opts.zero_threshold;
        out.status = (!trivial && w.minCoeff() > 0.0) ? ScalarStatus::Positive : ScalarStatus::NoPositiveSolution;
        return out;
    };

    for (int it = 0; it <= opts.max_iter; ++it) {
        if (!std::isfinite(rnorm)) {
            out.status = ScalarStatus::NoPositiveSolution;
            out.iterations = it;
            out.residual = rnorm;
            out.solution = GridFunction(grid, Vector::Zero(w.size()));
            return out;
        }
        lu.compute(sys.jacobian(w));
        if (lu.info() != Eigen::Success) break;
        const Vector step = lu.solve(-r);
        const double wnorm = w.cwiseAbs().maxCoeff();
        // Small residual alone is not enough near w = 0, where F(w) = O(||w||).
        if (rnorm <= opts.tol * sys.scale(w) &&
            step.cwiseAbs().maxCoeff() <= opts.step_tol * std::max(wnorm, opts.zero_threshold))
            return finish(it);
        if (it == opts.max_iter) break;

        double t = 1.0;
        Vector trial = w + step;
        Vector rtrial = sys.residual(trial);
        double tnorm = rtrial.cwiseAbs().maxCoeff();
        for (int k = 0; k < opts.max_halvings && !(tnorm < rnorm); ++k) {
            t *= 0.5;
            trial = w + t * step;
            rtrial = sys.residual(trial);
            tnorm = rtrial.cwiseAbs().maxCoeff();
        }
        // An exhausted halving sequence still takes the shortest step; stagnation is caught by max_iter.
        w = std::move(trial);
        r = std::move(rtrial);
        rnorm = tnorm;
    }
    if (!std::isfinite(rnorm) || w.cwiseAbs().maxCoeff() > 1e12) {
        out.status = ScalarStatus::NoPositiveSolution;
        out.iterations = opts.max_iter;
        out.residual = rnorm;
        out.solution = GridFunction(grid, Vector::Zero(w.size()));
        return out;
    }
    fail(ErrorKind::NewtonDivergence, "scalar Newton did not converge in " + std::to_string(opts.max_iter) +
                                          " iterations (residual " + std::to_string(rnorm) + ")");
}

/// sigma_1[-d(0) Delta; weight], the existence threshold for positive solutions.
inline double scalar_threshold(const ScalarProblem& problem, const Grid& grid, const EigenOptions& eig = {}) {
    const SparseOperator L = problem.diffusion(0.0) * laplacian(grid);
    return principal_eigenpair(grid, L, assemble_weight(grid, detail::sample_weight(grid, problem.weight)), eig).sigma1;
}

/// Positive multiple of the principal eigenfunction of -d(0) Delta, scaled by the distance of
/// gamma from the existence threshold. The amplitude overestimates the bifurcating solution near
/// the threshold, which keeps Newton out of the basin of w = 0.
inline GridFunction default_scalar_guess(const ScalarProblem& problem, const Grid& grid) {
    const SparseOperator L = problem.diffusion(0.0) * laplacian(grid);
    const EigenResult e =
        principal_eigenpair(grid, L, assemble_weight(grid, detail::sample_weight(grid, problem.weight)));
    const double amplitude = 2.0 * std::max(std::abs(problem.gamma - e.sigma1), 1e-6) / problem.diffusion(0.0);
    return GridFunction(grid, amplitude * e.eigenfunction.values());
}

/// Smallest |eigenvalue| of a symmetric tridiagonal operator.
inline double smallest_abs_eigenvalue(const SparseOperator& op) {
    require(op.symmetric(), ErrorKind::InvalidArgument, "operator must be symmetric");
    const auto n = static_cast<Eigen::Index>(op.dimension());
    Vector diag(n), sub(n > 1 ? n - 1 : 0);
    for (Eigen::Index i = 0; i < n; ++i) {
        diag[i] = op.coeff(i, i);
        if (i + 1 < n) sub[i] = op.coeff(i + 1, i);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    require(es.info() == Eigen::Success, ErrorKind::NonConvergence, "tridiagonal eigensolver failed");
    return es.eigenvalues().cwiseAbs().minCoeff();
}

/// Linearization -Delta[d(w) xi] = (gamma + h(w) + w h'(w)) xi rewritten for psi = d(w) xi:
/// returns the smallest |eigenvalue| of -Delta - (gamma + h + w h') / d(w).
inline double nondegeneracy_margin(const ScalarProblem& problem, const Grid& grid, const GridFunction& w) {
    const Vector weight = detail::sample_weight(grid, problem.weight);
    Vector potential(static_cast<Eigen::Index>(grid.n_interior()));
    for (std::size_t i = 0; i < grid.n_interior(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        const double x = grid.node(i);
        const double q = problem.gamma * weight[k] + problem.reaction(x, w[i]) + w[i] * problem.reaction.dw(x, w[i]);
        potential[k] = -q / problem.diffusion(w[i]);
    }
    return smallest_abs_eigenvalue(laplacian(grid) + assemble_weight(grid, potential));
}

struct SemitrivialBranch {
    std::vector<double> gammas;
    std::vector<std::optional<GridFunction>> solutions;
    std::vector<double> nondegeneracy_margins;   ///< NaN where no positive solution exists
    double threshold = 0.0;                       ///< sigma_1[-d(0) Delta; weight]
};

/// Sweeps gamma upward; each positive solution seeds the next solve.
inline SemitrivialBranch branch_sweep(const ScalarProblem& family, const std::vector<double>& gammas,
                                      const Grid& grid, const ScalarSolveOptions& opts = {}) {
    for (std::size_t k = 1; k < gammas.size(); ++k)
        require(gammas[k] > gammas[k - 1], ErrorKind::InvalidArgument, "gamma grid must be increasing");

    SemitrivialBranch out;
    out.gammas = gammas;
    out.threshold = scalar_threshold(family, grid);
    std::optional<GridFunction> previous;
    for (double gamma : gammas) {
        ScalarProblem p = family;
        p.gamma = gamma;
        ScalarSolveResult r = solve_scalar(p, grid, previous ? *previous : default_scalar_guess(p, grid), opts);
        // A small solution near the threshold is a poor start further out; Newton can fall to zero.
        if (!r.found() && previous) r = solve_scalar(p, grid, default_scalar_guess(p, grid), opts);
        if (r.found()) {
            out.nondegeneracy_margins.push_back(nondegeneracy_margin(p, grid, r.solution));
            previous = r.solution;
            out.solutions.emplace_back(std::move(r.solution));
        } else {
            out.nondegeneracy_margins.push_back(std::numeric_limits<double>::quiet_NaN());
            out.solutions.emplace_back(std::nullopt);
        }
    }
    return out;
}

} // namespace coexist
