#pragma once

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "coexist/system.hpp"

namespace coexist {

enum class Termination { UnboundedWindow, HitsOtherSemitrivial_v, HitsOtherSemitrivial_u, HitsTrivial, StepFailure };

inline std::string to_string(Termination t) {
    switch (t) {
    case Termination::UnboundedWindow: return "UnboundedWindow";
    case Termination::HitsOtherSemitrivial_v: return "HitsOtherSemitrivial_v";
    case Termination::HitsOtherSemitrivial_u: return "HitsOtherSemitrivial_u";
    case Termination::HitsTrivial: return "HitsTrivial";
    case Termination::StepFailure: return "StepFailure";
    }
    return "?";
}

struct ContinuationOptions {
    double ds = 0.05;
    double ds_min = 1e-4;
    double ds_max = 0.5;
    double grow = 1.3;
    int fast_iterations = 3;      ///< grow ds when the corrector needs at most this many iterations
    int max_corrector = 12;
    int max_steps = 2000;
    std::optional<double> window_lo;   ///< default: threshold - 30
    std::optional<double> window_hi;   ///< default: threshold + 30
    double norm_cap = 1e3;
    double boundary_tol = 1e-6;
    double matching_tol = 1e-2;
    double tol = 1e-8;            ///< corrector residual, relative to state_scale
};

struct BranchPoint {
    double parameter = 0.0;   ///< value of the free parameter
    CoupledState state;
    double arclength = 0.0;
};

struct TerminationData {
    double parameter = 0.0;            ///< free parameter at the final point
    double expected = 0.0;             ///< independently computed threshold the endpoint must match
    double mismatch = 0.0;
    double matching_tol = 0.0;
    bool matched = false;
    std::string detail;
};

struct Branch {
    Side side = Side::OnU;             ///< base the branch emanates from
    double fixed_parameter = 0.0;      ///< lambda (OnU) or mu (OnV)
    std::vector<BranchPoint> points;   ///< points.front() is the bifurcation point
    Termination termination = Termination::StepFailure;
    TerminationData termination_data;
    double window_lo = 0.0;
    double window_hi = 0.0;

    [[nodiscard]] std::string fixed_name() const { return side == Side::OnU ? "lambda" : "mu"; }
    [[nodiscard]] std::string free_name() const { return side == Side::OnU ? "mu" : "lambda"; }
    [[nodiscard]] double lambda_at(const BranchPoint& p) const {
        return side == Side::OnU ? fixed_parameter : p.parameter;
    }
    [[nodiscard]] double mu_at(const BranchPoint& p) const {
        return side == Side::OnU ? p.parameter : fixed_parameter;
    }
};

namespace detail {

/// Stacked continuation unknown X = [u; v; p] with the inner product h*sum(u u' + v v') + p p'.
struct Continuer {
    const Model& m;
    const Grid& grid;
    Side side;
    double fixed;
    ContinuationOptions opts;
    Eigen::Index N;
    double h;

    Continuer(const Model& model, const Grid& g, Side s, double fixed_value, const ContinuationOptions& o)
        : m(model), grid(g), side(s), fixed(fixed_value), opts(o), N(static_cast<Eigen::Index>(g.n_interior())),
          h(g.spacing()) {}

    [[nodiscard]] double lambda(const Vector& X) const { return side == Side::OnU ? fixed : X[2 * N]; }
    [[nodiscard]] double mu(const Vector& X) const { return side == Side::OnU ? X[2 * N] : fixed; }
    [[nodiscard]] CoupledState state(const Vector& X) const { return CoupledState::unpack(grid, X.head(2 * N)); }

    [[nodiscard]] double dot(const Vector& a, const Vector& b) const {
        return h * a.head(2 * N).dot(b.head(2 * N)) + a[2 * N] * b[2 * N];
    }
    [[nodiscard]] double norm(const Vector& a) const { return std::sqrt(dot(a, a)); }

    /// Vanishing component as seen from the base: v (OnU) or u (OnV).
    [[nodiscard]] Eigen::Index vanishing_offset() const { return side == Side::OnU ? N : 0; }

    struct Corrected {
        bool ok = false;
        Vector X;
        int iterations = 0;
        double residual = 0.0;
    };

    /// Newton on [F(X); <t, X - Xp>] = 0.
    [[nodiscard]] Corrected correct(const Vector& Xp, const Vector& t) const {
        Corrected out;
        Vector X = Xp;
        Eigen::SparseLU<SparseMatrix> lu;
        for (int it = 0; it <= opts.max_corrector; ++it) {
            const CoupledState s = state(X);
            const Vector F = residual(m, lambda(X), mu(X), s);
            const double scale = state_scale(m, s);
            const double c = dot(t, X - Xp);
            out.residual = F.cwiseAbs().maxCoeff() / scale;
            if (!std::isfinite(out.residual)) return out;
            if (out.residual <= opts.tol && std::abs(c) <= 1e-10 * std::max(1.0, norm(X))) {
                out.ok = true;
                out.X = std::move(X);
                out.iterations = it;
                return out;
            }
            if (it == opts.max_corrector) break;
            const SparseMatrix J = jacobian(m, lambda(X), mu(X), s).matrix();
            const Vector Fp = parameter_derivative(m, side, s);
            std::vector<Eigen::Triplet<double>> trip;
            trip.reserve(static_cast<std::size_t>(J.nonZeros() + 4 * N + 1));
            for (Eigen::Index col = 0; col < J.outerSize(); ++col)
                for (SparseMatrix::InnerIterator e(J, col); e; ++e) trip.emplace_back(e.row(), e.col(), e.value());
            for (Eigen::Index i = 0; i < 2 * N; ++i) {
                if (Fp[i] != 0.0) trip.emplace_back(i, 2 * N, Fp[i]);
                if (t[i] != 0.0) trip.emplace_back(2 * N, i, h * t[i]);
            }
            trip.emplace_back(2 * N, 2 * N, t[2 * N]);
            SparseMatrix A(2 * N + 1, 2 * N + 1);
            A.setFromTriplets(trip.begin(), trip.end());
            lu.compute(A);
            if (lu.info() != Eigen::Success) return out;
            Vector rhs(2 * N + 1);
            rhs << -F, -c;
            const Vector dX = lu.solve(rhs);
            if (!dX.allFinite()) return out;
            X += dX;
            if (X.head(2 * N).cwiseAbs().maxCoeff() > 10.0 * opts.norm_cap) return out;
        }
        return out;
    }
};

} // namespace detail

/// Pseudo-arclength continuation of coexistence states from a bifurcation point on a semitrivial
/// branch. The free parameter is mu for an OnU start and lambda for an OnV start.
inline Branch continue_branch(const Model& m, const BifurcationTangent& start, const ContinuationOptions& opts = {}) {
    const Grid& grid = start.theta.grid();
    detail::Continuer K(m, grid, start.side, start.fixed_parameter, opts);
    const Eigen::Index N = K.N;
    const Eigen::Index van = K.vanishing_offset();
    const Eigen::Index other = van == 0 ? N : 0;

    Branch br;
    br.side = start.side;
    br.fixed_parameter = start.fixed_parameter;
    br.window_lo = opts.window_lo.value_or(start.threshold - 30.0);
    br.window_hi = opts.window_hi.value_or(start.threshold + 30.0);
    require(br.window_lo < start.threshold && start.threshold < br.window_hi, ErrorKind::InvalidArgument,
            "continuation window must contain the bifurcation point");

    Vector X0(2 * N + 1);
    X0 << start.base().pack(), start.threshold;
    br.points.push_back({start.threshold, start.base(), 0.0});

    Vector t(2 * N + 1);
    t << start.direction().pack(), 0.0;
    t /= K.norm(t);

    auto finish = [&](Termination verdict, const std::string& detail) {
        br.termination = verdict;
        br.termination_data.parameter = br.points.back().parameter;
        br.termination_data.matching_tol = opts.matching_tol;
        if (!detail.empty()) br.termination_data.detail = detail;
        return br;
    };

    auto sup_of = [&](const Vector& X, Eigen::Index off) { return X.segment(off, N).cwiseAbs().maxCoeff(); };
    auto min_of = [&](const Vector& X, Eigen::Index off) { return X.segment(off, N).minCoeff(); };
    auto mass_of = [&](const Vector& X, Eigen::Index off) { return K.h * X.segment(off, N).sum(); };
    auto vanished = [&](const Vector& X, Eigen::Index off) {
        return min_of(X, off) <= 0.0 || sup_of(X, off) < opts.boundary_tol;
    };

    Vector X = X0;
    double s_total = 0.0;
    double ds = std::clamp(opts.ds, opts.ds_min, opts.ds_max);
    bool first = true;

    for (int step = 0; step < opts.max_steps; ++step) {
        if (ds < opts.ds_min) return finish(Termination::StepFailure, "step size underflow");

        const auto corr = K.correct(X + ds * t, t);
        if (!corr.ok) {
            ds *= 0.5;
            continue;
        }
        const Vector& Y = corr.X;

        const bool lost_van = vanished(Y, van);
        const bool lost_other = vanished(Y, other);
        if (first && (lost_van || lost_other)) {
            // The first step must land in the positive cone.
            ds *= 0.5;
            continue;
        }

        if (lost_van || lost_other) {
            // A component reached zero between X and Y. Locate the crossing on the step length by
            // regula falsi (Illinois) on the signed mass of the vanishing component.
            const Eigen::Index off = lost_van && (!lost_other || mass_of(Y, van) <= mass_of(Y, other)) ? van : other;
            double a = 0.0, b = ds;
            double ga = mass_of(X, off), gb = mass_of(Y, off);
            if (!(gb <= 0.0 || sup_of(Y, off) < opts.boundary_tol)) {
                // Only a boundary node dipped; not yet a crossing.
                ds *= 0.5;
                continue;
            }
            Vector best = Y;
            bool located = sup_of(Y, off) < opts.boundary_tol;
            int side_count = 0;
            for (int it = 0; it < 100 && !located; ++it) {
                const double c = (gb == ga) ? 0.5 * (a + b) : b - gb * (b - a) / (gb - ga);
                const double sc = std::clamp(c, a + 1e-3 * (b - a), b - 1e-3 * (b - a));
                const auto cc = K.correct(X + sc * t, t);
                if (!cc.ok) break;
                const double gc = mass_of(cc.X, off);
                best = cc.X;
                if (sup_of(cc.X, off) < opts.boundary_tol) {
                    located = true;
                    break;
                }
                if (gc > 0.0) {
                    a = sc;
                    ga = gc;
                    if (side_count == -1) gb *= 0.5;
                    side_count = -1;
                } else {
                    b = sc;
                    gb = gc;
                    if (side_count == 1) ga *= 0.5;
                    side_count = 1;
                }
                if (b - a < 1e-14 * ds) break;
            }
            if (!located) {
                ds *= 0.5;
                continue;
            }

            s_total += K.norm(best - X);
            br.points.push_back({best[2 * N], K.state(best), s_total});
            const double lam = K.lambda(best), mu = K.mu(best);
            TerminationData& td = br.termination_data;

            if (sup_of(best, van) < opts.boundary_tol && sup_of(best, other) < opts.boundary_tol) {
                // Trivial state: the free parameter must sit at sigma_1[-div(P(0,0) grad); a] or
                // sigma_1[-div(R(0,0) grad); b].
                const bool free_lambda = start.side == Side::OnV;
                const ScalarProblem p =
                    free_lambda ? semitrivial_u_problem(m, lam) : semitrivial_v_problem(m, mu);
                td.expected = scalar_threshold(p, grid);
                td.mismatch = std::abs((free_lambda ? lam : mu) - td.expected);
                td.matched = td.mismatch < opts.matching_tol;
                return finish(Termination::HitsTrivial, "");
            }
            const bool v_gone = sup_of(best, N) < opts.boundary_tol;
            if (v_gone) {
                // Reached (theta_lambda*, 0): mu must equal mu_{lambda*}.
                const GridFunction warm(grid, best.head(N));
                const auto base = semitrivial_base(m, Side::OnU, lam, grid, warm);
                if (base.eigen) {
                    td.expected = base.eigen->sigma1;
                    td.mismatch = std::abs(mu - td.expected);
                    td.matched = td.mismatch < opts.matching_tol;
                } else {
                    td.detail = "no positive u-semitrivial solution at the endpoint";
                }
                return finish(Termination::HitsOtherSemitrivial_u, "");
            }
            // Reached (0, theta_mu*): lambda must equal lambda_{mu*}.
            const GridFunction warm(grid, best.segment(N, N));
            const auto base = semitrivial_base(m, Side::OnV, mu, grid, warm);
            if (base.eigen) {
                td.expected = base.eigen->sigma1;
                td.mismatch = std::abs(lam - td.expected);
                td.matched = td.mismatch < opts.matching_tol;
            } else {
                td.detail = "no positive v-semitrivial solution at the endpoint";
            }
            return finish(Termination::HitsOtherSemitrivial_v, "");
        }

        s_total += K.norm(Y - X);
        br.points.push_back({Y[2 * N], K.state(Y), s_total});
        const Vector secant = Y - X;
        X = Y;
        t = secant / K.norm(secant);
        first = false;

        const double p = Y[2 * N];
        if (p < br.window_lo || p > br.window_hi)
            return finish(Termination::UnboundedWindow, "free parameter left the window");
        if (Y.head(2 * N).cwiseAbs().maxCoeff() > opts.norm_cap)
            return finish(Termination::UnboundedWindow, "state norm exceeded norm_cap");

        if (corr.iterations <= opts.fast_iterations) ds = std::min(ds * opts.grow, opts.ds_max);
    }
    return finish(Termination::StepFailure, "max_steps reached");
}

} // namespace coexist
