#pragma once

#include <Eigen/SVD>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "coexist/eigen.hpp"
#include "coexist/errors.hpp"
#include "coexist/grid.hpp"
#include "coexist/models.hpp"
#include "coexist/operators.hpp"
#include "coexist/semitrivial.hpp"

namespace coexist {

struct CoupledState {
    GridFunction u;
    GridFunction v;

    CoupledState() = default;
    CoupledState(GridFunction u_, GridFunction v_) : u(std::move(u_)), v(std::move(v_)) {
        require(u.grid() == v.grid(), ErrorKind::DimensionMismatch, "state components live on different grids");
    }

    static CoupledState zero(const Grid& grid) { return {GridFunction(grid), GridFunction(grid)}; }

    /// Stacked [u; v].
    static CoupledState unpack(const Grid& grid, const Vector& x) {
        const auto n = static_cast<Eigen::Index>(grid.n_interior());
        require(x.size() >= 2 * n, ErrorKind::DimensionMismatch, "stacked vector too short");
        return {GridFunction(grid, x.head(n)), GridFunction(grid, x.segment(n, n))};
    }

    [[nodiscard]] const Grid& grid() const noexcept { return u.grid(); }

    [[nodiscard]] Vector pack() const {
        Vector x(u.values().size() + v.values().size());
        x << u.values(), v.values();
        return x;
    }

    [[nodiscard]] bool coexistence() const { return u.positive() && v.positive(); }
};

/// Which semitrivial state a construction is anchored at.
///   OnU: (theta_lambda, 0), lambda frozen, mu free, v is the vanishing component.
///   OnV: (0, theta_mu), mu frozen, lambda free, u is the vanishing component.
enum class Side { OnU, OnV };

inline std::string to_string(Side s) { return s == Side::OnU ? "u-semitrivial" : "v-semitrivial"; }

namespace detail {

struct HalfNode {
    double ub, vb;     ///< half-node averages
    double du, dv;     ///< differences east - west
};

inline HalfNode half_node(const CoupledState& s, std::size_t k) {
    const double uw = s.u.at_full(k), ue = s.u.at_full(k + 1);
    const double vw = s.v.at_full(k), ve = s.v.at_full(k + 1);
    return {0.5 * (uw + ue), 0.5 * (vw + ve), ue - uw, ve - vw};
}

} // namespace detail

/// Discrete residual, stacked [u-equation; v-equation].
inline Vector residual(const Model& m, double lambda, double mu, const CoupledState& s) {
    const Grid& grid = s.grid();
    const std::size_t n = grid.n_interior();
    const double h = grid.spacing();
    Vector r = Vector::Zero(static_cast<Eigen::Index>(2 * n));
    const auto N = static_cast<Eigen::Index>(n);

    for (std::size_t k = 0; k <= n; ++k) {
        const auto hn = detail::half_node(s, k);
        const double f1 = (m.diff_uu(hn.ub, hn.vb) * hn.du + m.diff_uv(hn.ub, hn.vb) * hn.dv) / h;
        const double f2 = (m.diff_vu(hn.ub, hn.vb) * hn.du + m.diff_vv(hn.ub, hn.vb) * hn.dv) / h;
        // residual_i = (flux_west - flux_east)/h with flux k west of interior k, east of interior k-1.
        if (k < n) {
            r[static_cast<Eigen::Index>(k)] += f1 / h;
            r[N + static_cast<Eigen::Index>(k)] += f2 / h;
        }
        if (k > 0) {
            r[static_cast<Eigen::Index>(k - 1)] -= f1 / h;
            r[N + static_cast<Eigen::Index>(k - 1)] -= f2 / h;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double x = grid.node(i), u = s.u[i], v = s.v[i];
        const auto I = static_cast<Eigen::Index>(i);
        r[I] -= lambda * m.weight_u(x) * u + m.self_u(x, u) * u + m.inter_u(x, u, v) * u * v;
        r[N + I] -= mu * m.weight_v(x) * v + m.self_v(x, v) * v + m.inter_v(x, u, v) * u * v;
    }
    return r;
}

/// Magnitude against which residuals are judged: the largest flux-potential value
/// |P u|, |S v|, |Q u|, |R v| over half-nodes, floored at 1.
inline double state_scale(const Model& m, const CoupledState& s) {
    double scale = 1.0;
    for (std::size_t k = 0; k <= s.grid().n_interior(); ++k) {
        const auto hn = detail::half_node(s, k);
        const double au = std::abs(hn.ub), av = std::abs(hn.vb);
        scale = std::max({scale, std::abs(m.diff_uu(hn.ub, hn.vb)) * au, std::abs(m.diff_uv(hn.ub, hn.vb)) * av,
                          std::abs(m.diff_vu(hn.ub, hn.vb)) * au, std::abs(m.diff_vv(hn.ub, hn.vb)) * av});
    }
    return scale;
}

inline double scaled_residual(const Model& m, double lambda, double mu, const CoupledState& s) {
    return residual(m, lambda, mu, s).cwiseAbs().maxCoeff() / state_scale(m, s);
}

/// Analytic Jacobian of `residual` with respect to the stacked nodal unknowns.
inline SparseOperator jacobian(const Model& m, double lambda, double mu, const CoupledState& s) {
    const Grid& grid = s.grid();
    const std::size_t n = grid.n_interior();
    const double h = grid.spacing();
    const auto N = static_cast<Eigen::Index>(n);
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(12 * n + 4);

    for (std::size_t k = 0; k <= n; ++k) {
        const auto hn = detail::half_node(s, k);
        const double P = m.diff_uu(hn.ub, hn.vb), S = m.diff_uv(hn.ub, hn.vb);
        const double Q = m.diff_vu(hn.ub, hn.vb), R = m.diff_vv(hn.ub, hn.vb);
        // Shared part from differentiating the coefficients (each node carries half the average).
        const double f1_u = 0.5 * (m.diff_uu.du(hn.ub, hn.vb) * hn.du + m.diff_uv.du(hn.ub, hn.vb) * hn.dv) / h;
        const double f1_v = 0.5 * (m.diff_uu.dv(hn.ub, hn.vb) * hn.du + m.diff_uv.dv(hn.ub, hn.vb) * hn.dv) / h;
        const double f2_u = 0.5 * (m.diff_vu.du(hn.ub, hn.vb) * hn.du + m.diff_vv.du(hn.ub, hn.vb) * hn.dv) / h;
        const double f2_v = 0.5 * (m.diff_vu.dv(hn.ub, hn.vb) * hn.du + m.diff_vv.dv(hn.ub, hn.vb) * hn.dv) / h;

        // d flux / d (west, east) for each unknown family.
        const double d1u[2] = {f1_u - P / h, f1_u + P / h};
        const double d1v[2] = {f1_v - S / h, f1_v + S / h};
        const double d2u[2] = {f2_u - Q / h, f2_u + Q / h};
        const double d2v[2] = {f2_v - R / h, f2_v + R / h};

        for (int side = 0; side < 2; ++side) {
            const std::size_t full = k + static_cast<std::size_t>(side);
            if (full == 0 || full == n + 1) continue;
            const auto col = static_cast<Eigen::Index>(full - 1);
            // Row k gets +flux/h, row k-1 gets -flux/h.
            for (int sign = 0; sign < 2; ++sign) {
                if (sign == 0 && k >= n) continue;
                if (sign == 1 && k == 0) continue;
                const auto row = static_cast<Eigen::Index>(sign == 0 ? k : k - 1);
                const double c = (sign == 0 ? 1.0 : -1.0) / h;
                t.emplace_back(row, col, c * d1u[side]);
                t.emplace_back(row, N + col, c * d1v[side]);
                t.emplace_back(N + row, col, c * d2u[side]);
                t.emplace_back(N + row, N + col, c * d2v[side]);
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double x = grid.node(i), u = s.u[i], v = s.v[i];
        const auto I = static_cast<Eigen::Index>(i);
        const double F = m.inter_u(x, u, v), G = m.inter_v(x, u, v);
        t.emplace_back(I, I,
                       -(lambda * m.weight_u(x) + m.self_u(x, u) + m.self_u.dw(x, u) * u + F * v +
                         m.inter_u.du(x, u, v) * u * v));
        t.emplace_back(I, N + I, -(F * u + m.inter_u.dv(x, u, v) * u * v));
        t.emplace_back(N + I, I, -(G * v + m.inter_v.du(x, u, v) * u * v));
        t.emplace_back(N + I, N + I,
                       -(mu * m.weight_v(x) + m.self_v(x, v) + m.self_v.dw(x, v) * v + G * u +
                         m.inter_v.dv(x, u, v) * u * v));
    }
    SparseMatrix J(2 * N, 2 * N);
    J.setFromTriplets(t.begin(), t.end());
    J.makeCompressed();
    return SparseOperator(std::move(J), false);
}

/// d residual / d lambda (free = Side::OnV) or d residual / d mu (free = Side::OnU).
inline Vector parameter_derivative(const Model& m, Side base_side, const CoupledState& s) {
    const Grid& grid = s.grid();
    const auto N = static_cast<Eigen::Index>(grid.n_interior());
    Vector d = Vector::Zero(2 * N);
    for (Eigen::Index i = 0; i < N; ++i) {
        const double x = grid.node(static_cast<std::size_t>(i));
        if (base_side == Side::OnV) d[i] = -m.weight_u(x) * s.u.values()[i];
        else d[N + i] = -m.weight_v(x) * s.v.values()[i];
    }
    return d;
}

// ---------------------------------------------------------------------------------------------
// Newton for coexistence states.

struct NewtonOptions {
    double tol = 1e-8;              ///< residual sup-norm relative to state_scale
    int max_iter = 60;
    int max_halvings = 12;
    double positivity_tol = 1e-6;   ///< a component with sup-norm below this counts as zero
    double blowup = 1e8;            ///< iterates beyond this sup-norm are abandoned
};

enum class NewtonStatus { Converged, ConvergedToBoundary, NotCoexistence, Diverged };

inline std::string to_string(NewtonStatus s) {
    switch (s) {
    case NewtonStatus::Converged: return "Converged";
    case NewtonStatus::ConvergedToBoundary: return "ConvergedToBoundary";
    case NewtonStatus::NotCoexistence: return "NotCoexistence";
    case NewtonStatus::Diverged: return "Diverged";
    }
    return "?";
}

struct NewtonResult {
    NewtonStatus status = NewtonStatus::Diverged;
    CoupledState state;
    double residual = 0.0;   ///< scaled residual of the final iterate
    int iterations = 0;

    [[nodiscard]] bool found() const noexcept { return status == NewtonStatus::Converged; }
};

namespace detail {

/// Damped Newton; status Diverged when it stalls or blows up. Never throws on divergence.
inline NewtonResult newton_raw(const Model& m, double lambda, double mu, const CoupledState& guess,
                               const NewtonOptions& opts) {
    const Grid& grid = guess.grid();
    NewtonResult out;
    Vector x = guess.pack();
    CoupledState s = guess;
    Vector r = residual(m, lambda, mu, s);
    double rnorm = r.cwiseAbs().maxCoeff();
    Eigen::SparseLU<SparseMatrix> lu;

    for (int it = 0; it <= opts.max_iter; ++it) {
        out.iterations = it;
        if (!std::isfinite(rnorm) || x.cwiseAbs().maxCoeff() > opts.blowup) break;
        const double scale = state_scale(m, s);
        if (rnorm <= opts.tol * scale) {
            out.state = s;
            out.residual = rnorm / scale;
            const bool vanished =
                s.u.sup_norm() < opts.positivity_tol || s.v.sup_norm() < opts.positivity_tol;
            out.status = vanished ? NewtonStatus::ConvergedToBoundary
                                  : (s.coexistence() ? NewtonStatus::Converged : NewtonStatus::NotCoexistence);
            return out;
        }
        if (it == opts.max_iter) break;
        lu.compute(jacobian(m, lambda, mu, s).matrix());
        if (lu.info() != Eigen::Success) break;
        const Vector step = lu.solve(-r);
        if (!step.allFinite()) break;

        double t = 1.0;
        Vector trial = x + step;
        CoupledState ts = CoupledState::unpack(grid, trial);
        Vector rt = residual(m, lambda, mu, ts);
        double tn = rt.cwiseAbs().maxCoeff();
        for (int k = 0; k < opts.max_halvings && !(tn < rnorm); ++k) {
            t *= 0.5;
            trial = x + t * step;
            ts = CoupledState::unpack(grid, trial);
            rt = residual(m, lambda, mu, ts);
            tn = rt.cwiseAbs().maxCoeff();
        }
        x = std::move(trial);
        s = std::move(ts);
        r = std::move(rt);
        rnorm = tn;
    }
    out.status = NewtonStatus::Diverged;
    out.state = s;
    out.residual = std::isfinite(rnorm) ? rnorm / state_scale(m, s) : rnorm;
    return out;
}

} // namespace detail

/// Damped Newton for a coexistence state. A converged iterate that is not strictly positive in
/// both components comes back as ConvergedToBoundary or NotCoexistence; divergence throws.
inline NewtonResult newton_coexistence(const Model& m, double lambda, double mu, const CoupledState& guess,
                                       const NewtonOptions& opts = {}) {
    require(guess.u.min() >= 0.0 && guess.v.min() >= 0.0, ErrorKind::InvalidArgument,
            "Newton guess must be nonnegative");
    NewtonResult r = detail::newton_raw(m, lambda, mu, guess, opts);
    if (r.status == NewtonStatus::Diverged)
        fail(ErrorKind::NewtonDivergence, "coupled Newton failed at (lambda, mu) = (" + std::to_string(lambda) + ", " +
                                              std::to_string(mu) + "), residual " + std::to_string(r.residual));
    return r;
}

// ---------------------------------------------------------------------------------------------
// Semitrivial bases and bifurcation data.

struct SemitrivialBase {
    Side side = Side::OnU;
    double parameter = 0.0;          ///< lambda (OnU) or mu (OnV)
    bool exists = false;
    GridFunction theta;              ///< positive semitrivial component (zero when !exists)
    double margin = 0.0;             ///< nondegeneracy margin of theta
    double existence_threshold = 0.0;
    /// Drift-form principal eigenpair at theta: mu_lambda (OnU) or lambda_mu (OnV).
    std::optional<EigenResult> eigen;
    double refine_residual = 0.0;

    [[nodiscard]] CoupledState state() const {
        const GridFunction zero(theta.grid());
        return side == Side::OnU ? CoupledState(theta, zero) : CoupledState(zero, theta);
    }
};

namespace detail {

/// Polishes theta with Newton on the system equation of the non-vanishing component, so that
/// (theta, 0) solves the coupled discretization and not just the Kirchhoff one.
inline GridFunction refine_semitrivial(const Model& m, Side side, double param, const GridFunction& theta,
                                       double& final_residual) {
    const Grid& grid = theta.grid();
    const auto N = static_cast<Eigen::Index>(grid.n_interior());
    const Eigen::Index off = side == Side::OnU ? 0 : N;
    const double lambda = side == Side::OnU ? param : 0.0;
    const double mu = side == Side::OnU ? 0.0 : param;
    auto make = [&](const Vector& w) {
        const GridFunction g(grid, w), z(grid);
        return side == Side::OnU ? CoupledState(g, z) : CoupledState(z, g);
    };
    Vector w = theta.values();
    Eigen::SparseLU<SparseMatrix> lu;
    for (int it = 0; it < 20; ++it) {
        const CoupledState s = make(w);
        const Vector r = residual(m, lambda, mu, s).segment(off, N);
        final_residual = r.cwiseAbs().maxCoeff() / state_scale(m, s);
        if (final_residual < 1e-13) break;
        const SparseMatrix block = jacobian(m, lambda, mu, s).matrix().block(off, off, N, N);
        lu.compute(block);
        if (lu.info() != Eigen::Success) break;
        const Vector step = lu.solve(-r);
        w += step;
        if (step.cwiseAbs().maxCoeff() <= 1e-14 * std::max(1.0, w.cwiseAbs().maxCoeff())) {
            final_residual = residual(m, lambda, mu, make(w)).segment(off, N).cwiseAbs().maxCoeff() /
                             state_scale(m, make(w));
            break;
        }
    }
    return GridFunction(grid, w);
}

} // namespace detail

/// Coefficients of the drift-form eigenproblem at a semitrivial base theta:
///   OnU: M1 = Q_v(s,0), M2 = R(s,0), B = -g(x,0) - G(x,theta,0) theta, C = b
///   OnV: M1 = S_u(0,s), M2 = P(0,s), B = -f(x,0) - F(x,0,theta) theta, C = a
struct DriftForm {
    ScalarMap M1, M2;
    GridFunction B, C;
};

inline DriftForm drift_form(const Model& m, Side side, const GridFunction& theta) {
    const Grid& grid = theta.grid();
    Vector B(theta.values().size()), C(theta.values().size());
    for (std::size_t i = 0; i < grid.n_interior(); ++i) {
        const double x = grid.node(i);
        const auto I = static_cast<Eigen::Index>(i);
        if (side == Side::OnU) {
            B[I] = -(m.self_v(x, 0.0) + m.inter_v(x, theta[i], 0.0) * theta[i]);
            C[I] = m.weight_v(x);
        } else {
            B[I] = -(m.self_u(x, 0.0) + m.inter_u(x, 0.0, theta[i]) * theta[i]);
            C[I] = m.weight_u(x);
        }
    }
    DriftForm out{{}, {}, GridFunction(grid, B), GridFunction(grid, C)};
    if (side == Side::OnU) {
        out.M1 = [q = m.diff_vu](double s) { return q.dv(s, 0.0); };
        out.M2 = [r = m.diff_vv](double s) { return r(s, 0.0); };
    } else {
        out.M1 = [sv = m.diff_uv](double s) { return sv.du(0.0, s); };
        out.M2 = [p = m.diff_uu](double s) { return p(0.0, s); };
    }
    return out;
}

/// theta (semitrivial module) and the drift-form eigenvalue threshold at that base:
///   OnU: mu_lambda = sigma_1[-div(Q_v(theta,0) . grad theta + R(theta,0) grad) - g(x,0) - G(x,theta,0) theta; b]
///   OnV: lambda_mu = sigma_1[-div(S_u(0,theta) . grad theta + P(0,theta) grad) - f(x,0) - F(x,0,theta) theta; a]
/// `eigen` is empty when no positive theta exists.
inline SemitrivialBase semitrivial_base(const Model& m, Side side, double param, const Grid& grid,
                                        const std::optional<GridFunction>& warm = std::nullopt,
                                        const EigenOptions& eig = {}) {
    SemitrivialBase out;
    out.side = side;
    out.parameter = param;
    const ScalarProblem problem = side == Side::OnU ? semitrivial_u_problem(m, param) : semitrivial_v_problem(m, param);
    out.existence_threshold = scalar_threshold(problem, grid, eig);
    out.theta = GridFunction(grid);
    if (param <= out.existence_threshold) return out;

    ScalarSolveResult sol;
    if (warm && warm->positive()) {
        try {
            sol = solve_scalar(problem, grid, *warm);
        } catch (const Error&) {
            sol = ScalarSolveResult{};
        }
    }
    if (!sol.found()) sol = solve_scalar(problem, grid, default_scalar_guess(problem, grid));
    if (!sol.found()) return out;

    out.theta = detail::refine_semitrivial(m, side, param, sol.solution, out.refine_residual);
    require(out.theta.positive(), ErrorKind::SignFailure, "refined semitrivial solution lost positivity");
    out.exists = true;
    out.margin = nondegeneracy_margin(problem, grid, out.theta);

    const DriftForm form = drift_form(m, side, out.theta);
    out.eigen = sigma1_drift(grid, form.M1, form.M2, out.theta, form.B, form.C, eig);
    return out;
}

struct TangentOptions {
    double margin_tol = 1e-6;      ///< DegenerateBase when the theta margin is not above this
    double kernel_rel_tol = 1e-6;  ///< singular values below kernel_rel_tol * sigma_max count as kernel
    bool svd_check = true;
};

struct BifurcationTangent {
    Side side = Side::OnU;
    double fixed_parameter = 0.0;   ///< lambda (OnU) or mu (OnV)
    double threshold = 0.0;         ///< mu_lambda (OnU) or lambda_mu (OnV)
    GridFunction theta;
    GridFunction coupled;           ///< xi (OnU: u-direction) or eta (OnV: v-direction)
    GridFunction principal;         ///< phi2 (OnU) or phi1 (OnV), positive, sup-norm 1
    // Cross-check against the dense SVD of the full Jacobian.
    std::vector<double> smallest_singular_values;   ///< two smallest, ascending
    double largest_singular_value = 0.0;
    double kernel_tol = 0.0;
    double angle = 0.0;             ///< between (coupled, principal) stacked and the SVD null vector
    bool kernel_sign_definite = false;

    [[nodiscard]] CoupledState direction() const {
        return side == Side::OnU ? CoupledState(coupled, principal) : CoupledState(principal, coupled);
    }
    [[nodiscard]] CoupledState base() const {
        const GridFunction z(theta.grid());
        return side == Side::OnU ? CoupledState(theta, z) : CoupledState(z, theta);
    }
    [[nodiscard]] double lambda() const { return side == Side::OnU ? fixed_parameter : threshold; }
    [[nodiscard]] double mu() const { return side == Side::OnU ? threshold : fixed_parameter; }
};

/// Kernel of the coupled Jacobian at the bifurcation point (threshold, theta, 0) (or the OnV mirror).
/// The vanishing-component direction is the principal eigenfunction of the drift operator; the
/// other direction solves the nonsingular linearized equation of theta with the coupling as data.
inline BifurcationTangent bifurcation_tangent(const Model& m, const SemitrivialBase& base,
                                              const TangentOptions& opts = {}) {
    require(base.exists && base.eigen.has_value(), ErrorKind::InvalidArgument,
            "bifurcation tangent needs a positive semitrivial solution");
    if (!(base.margin > opts.margin_tol))
        fail(ErrorKind::DegenerateBase, "semitrivial solution is degenerate (margin " + std::to_string(base.margin) + ")");

    const Grid& grid = base.theta.grid();
    const auto N = static_cast<Eigen::Index>(grid.n_interior());
    BifurcationTangent out;
    out.side = base.side;
    out.fixed_parameter = base.parameter;
    out.threshold = base.eigen->sigma1;
    out.theta = base.theta;

    const double lambda = out.lambda(), mu = out.mu();
    const SparseMatrix J = jacobian(m, lambda, mu, base.state()).matrix();
    const bool on_u = base.side == Side::OnU;
    const Eigen::Index keep = on_u ? 0 : N;      // block of the nonvanishing component
    const Eigen::Index vanish = on_u ? N : 0;    // block of the vanishing component

    // Sharpen the eigenvector with two inverse-iteration steps shifted just below the eigenvalue.
    const SparseMatrix Jvv = J.block(vanish, vanish, N, N);
    Vector weight(N);
    for (Eigen::Index i = 0; i < N; ++i) {
        const double x = grid.node(static_cast<std::size_t>(i));
        weight[i] = on_u ? m.weight_v(x) : m.weight_u(x);
    }
    const double delta = 1e-7 * std::max(1.0, std::abs(out.threshold));
    SparseMatrix shifted = Jvv;
    for (Eigen::Index i = 0; i < N; ++i) shifted.coeffRef(i, i) += delta * weight[i];
    Eigen::SparseLU<SparseMatrix> lu;
    lu.compute(shifted);
    require(lu.info() == Eigen::Success, ErrorKind::NonConvergence, "shifted kernel block factorization failed");
    Vector phi = base.eigen->eigenfunction.values();
    for (int k = 0; k < 2; ++k) {
        phi = lu.solve(weight.cwiseProduct(phi));
        phi /= phi.cwiseAbs().maxCoeff();
    }
    if (phi.sum() < 0.0) phi = -phi;
    require(phi.minCoeff() > 0.0, ErrorKind::SignFailure, "kernel eigenfunction is not positive");

    const SparseMatrix Jkk = J.block(keep, keep, N, N);
    const SparseMatrix Jkv = J.block(keep, vanish, N, N);
    lu.compute(Jkk);
    require(lu.info() == Eigen::Success, ErrorKind::DegenerateBase, "linearization at theta is singular");
    const Vector coupled = lu.solve(-(Jkv * phi));
    out.coupled = GridFunction(grid, coupled);
    out.principal = GridFunction(grid, phi);

    if (opts.svd_check) {
        const Eigen::MatrixXd dense(J);
        Eigen::BDCSVD<Eigen::MatrixXd> svd(dense, Eigen::ComputeFullV);
        const Vector sv = svd.singularValues();   // descending
        const Eigen::Index last = sv.size() - 1;
        out.largest_singular_value = sv[0];
        out.kernel_tol = opts.kernel_rel_tol * sv[0];
        out.smallest_singular_values = {sv[last], sv[last - 1]};
        if (sv[last - 1] < out.kernel_tol)
            fail(ErrorKind::KernelDimensionError,
                 "second singular value " + std::to_string(sv[last - 1]) + " is below the kernel tolerance");
        const Vector null = svd.matrixV().col(last);
        const Vector assembled = out.direction().pack();
        const double c = std::abs(null.dot(assembled)) / (null.norm() * assembled.norm());
        out.angle = std::acos(std::min(1.0, c));
        const Vector vpart = null.segment(vanish, N);
        out.kernel_sign_definite = vpart.minCoeff() > 0.0 || vpart.maxCoeff() < 0.0;
    }
    return out;
}

} // namespace coexist
