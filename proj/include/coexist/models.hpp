#pragma once

#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "coexist/errors.hpp"
#include "coexist/quadrature.hpp"
#include "coexist/semitrivial.hpp"

namespace coexist {

/// A smooth function of one variable with first and second derivatives.
struct SmoothFunction {
    ScalarMap value;
    ScalarMap d1;
    ScalarMap d2;

    double operator()(double s) const { return value(s); }
};

/// c(u, v) with both first partials.
struct Bivariate {
    std::function<double(double, double)> value;
    std::function<double(double, double)> du;
    std::function<double(double, double)> dv;

    double operator()(double u, double v) const { return value(u, v); }
};

/// r(x, u, v) with partials in u and v.
struct Interaction {
    std::function<double(double, double, double)> value;
    std::function<double(double, double, double)> du;
    std::function<double(double, double, double)> dv;

    double operator()(double x, double u, double v) const { return value(x, u, v); }
};

/// Prey-predator family with prey flux A(v) grad(G(u) H(v)):
///   -div(A G'(u) H grad u + A G(u) H'(v) grad v) = u (lambda - u - b v)
///   -Delta v = v (mu - v + c u)
struct PreyPredatorFamily {
    double b = 1.0;
    double c = 1.0;
    SmoothFunction A, G, H;
    double A_floor = 1.0;   ///< A >= A_floor
    double G0 = 1.0;        ///< G' >= G0
    double H0 = 1.0;        ///< H0 <= H <= H1
    double H1 = 1.0;
};

/// Chemotaxis-competition family:
///   -Delta u + div(chi f(v) u grad v) = u (lambda - u + b v)
///   -Delta v = v (mu - v - c u)
struct ChemotaxisFamily {
    double chi = 0.0;
    double b = 0.0;
    double c = 1.0;
    SmoothFunction sensitivity;              ///< f
    ScalarMap sensitivity_integral;          ///< F(z) = int_0^z f; quadrature when empty

    [[nodiscard]] double F(double z) const {
        return sensitivity_integral ? sensitivity_integral(z) : integrate(sensitivity.value, 0.0, z, 1e-12);
    }
};

/// Coefficient bundle of the system
///   -div(P grad u + S grad v) = lambda a(x) u + f(x,u) u + F(x,u,v) u v
///   -div(Q grad u + R grad v) = mu b(x) v + g(x,v) v + G(x,u,v) u v
/// with u = v = 0 on the boundary. Members are named by role; the comment gives the symbol.
struct Model {
    std::string label;

    Bivariate diff_uu;   ///< P: u-flux coefficient of grad u
    Bivariate diff_uv;   ///< S: u-flux coefficient of grad v
    Bivariate diff_vu;   ///< Q: v-flux coefficient of grad u
    Bivariate diff_vv;   ///< R: v-flux coefficient of grad v

    SiteFunction self_u;     ///< f(x, u)
    SiteFunction self_v;     ///< g(x, v)
    Interaction inter_u;     ///< F(x, u, v)
    Interaction inter_v;     ///< G(x, u, v)

    std::function<double(double)> weight_u = [](double) { return 1.0; };   ///< a(x)
    std::function<double(double)> weight_v = [](double) { return 1.0; };   ///< b(x)

    double delta0 = 1.0;   ///< |PR - QS| >= delta0
    double P0 = 1.0;       ///< P >= P0
    double R0 = 1.0;       ///< R >= R0

    std::variant<std::monostate, PreyPredatorFamily, ChemotaxisFamily> family;

    [[nodiscard]] const PreyPredatorFamily* prey_predator() const { return std::get_if<PreyPredatorFamily>(&family); }
    [[nodiscard]] const ChemotaxisFamily* chemotaxis() const { return std::get_if<ChemotaxisFamily>(&family); }
};

// ---------------------------------------------------------------------------------------------
// Constructors for the two application families.

inline Model model_ap1(double b, double c, SmoothFunction A, SmoothFunction G, SmoothFunction H, double A_floor,
                       double G0, double H0, double H1) {
    require(b > 0.0 && c > 0.0, ErrorKind::InvalidArgument, "prey-predator constants b, c must be positive");
    require(A_floor > 0.0 && G0 > 0.0 && H0 > 0.0 && H1 >= H0, ErrorKind::InvalidArgument,
            "prey-predator floors must satisfy A_floor, G0, H0 > 0 and H1 >= H0");
    PreyPredatorFamily fam{b, c, A, G, H, A_floor, G0, H0, H1};

    Model m;
    m.label = "ap1";
    m.diff_uu = {[A, G, H](double u, double v) { return A(v) * G.d1(u) * H(v); },
                 [A, G, H](double u, double v) { return A(v) * G.d2(u) * H(v); },
                 [A, G, H](double u, double v) {
                     return A.d1(v) * G.d1(u) * H(v) + A(v) * G.d1(u) * H.d1(v);
                 }};
    m.diff_uv = {[A, G, H](double u, double v) { return A(v) * G(u) * H.d1(v); },
                 [A, G, H](double u, double v) { return A(v) * G.d1(u) * H.d1(v); },
                 [A, G, H](double u, double v) {
                     return A.d1(v) * G(u) * H.d1(v) + A(v) * G(u) * H.d2(v);
                 }};
    m.diff_vu = {[](double, double) { return 0.0; }, [](double, double) { return 0.0; },
                 [](double, double) { return 0.0; }};
    m.diff_vv = {[](double, double) { return 1.0; }, [](double, double) { return 0.0; },
                 [](double, double) { return 0.0; }};
    m.self_u = {[](double, double w) { return -w; }, [](double, double) { return -1.0; }};
    m.self_v = {[](double, double w) { return -w; }, [](double, double) { return -1.0; }};
    m.inter_u = {[b](double, double, double) { return -b; }, [](double, double, double) { return 0.0; },
                 [](double, double, double) { return 0.0; }};
    m.inter_v = {[c](double, double, double) { return c; }, [](double, double, double) { return 0.0; },
                 [](double, double, double) { return 0.0; }};
    m.P0 = A_floor * G0 * H0;
    m.R0 = 1.0;
    m.delta0 = m.P0;
    m.family = std::move(fam);
    return m;
}

/// A(v) = v + 1, G(u) = u^2 + u, H(v) = (v + 2)/(v + 1): A_floor = 1, G0 = 1, H0 = 1, H1 = 2.
inline Model model_ap1_sample(double b = 1.0, double c = 1.0) {
    SmoothFunction A{[](double v) { return v + 1.0; }, [](double) { return 1.0; }, [](double) { return 0.0; }};
    SmoothFunction G{[](double u) { return u * u + u; }, [](double u) { return 2.0 * u + 1.0; },
                     [](double) { return 2.0; }};
    SmoothFunction H{[](double v) { return (v + 2.0) / (v + 1.0); },
                     [](double v) { return -1.0 / ((v + 1.0) * (v + 1.0)); },
                     [](double v) { return 2.0 / ((v + 1.0) * (v + 1.0) * (v + 1.0)); }};
    Model m = model_ap1(b, c, A, G, H, 1.0, 1.0, 1.0, 2.0);
    m.label = "ap1-sample";
    return m;
}

inline Model model_ap2(double chi, double b, double c, SmoothFunction sensitivity,
                       ScalarMap sensitivity_integral = {}) {
    require(chi >= 0.0 && c > 0.0, ErrorKind::InvalidArgument, "chemotaxis constants need chi >= 0, c > 0");
    ChemotaxisFamily fam{chi, b, c, sensitivity, std::move(sensitivity_integral)};
    const SmoothFunction f = sensitivity;

    Model m;
    m.label = "ap2";
    m.diff_uu = {[](double, double) { return 1.0; }, [](double, double) { return 0.0; },
                 [](double, double) { return 0.0; }};
    m.diff_uv = {[chi, f](double u, double v) { return -chi * f(v) * u; },
                 [chi, f](double, double v) { return -chi * f(v); },
                 [chi, f](double u, double v) { return -chi * f.d1(v) * u; }};
    m.diff_vu = {[](double, double) { return 0.0; }, [](double, double) { return 0.0; },
                 [](double, double) { return 0.0; }};
    m.diff_vv = m.diff_uu;
    m.self_u = {[](double, double w) { return -w; }, [](double, double) { return -1.0; }};
    m.self_v = m.self_u;
    m.inter_u = {[b](double, double, double) { return b; }, [](double, double, double) { return 0.0; },
                 [](double, double, double) { return 0.0; }};
    m.inter_v = {[c](double, double, double) { return -c; }, [](double, double, double) { return 0.0; },
                 [](double, double, double) { return 0.0; }};
    m.P0 = m.R0 = m.delta0 = 1.0;
    m.family = std::move(fam);
    return m;
}

inline SmoothFunction constant_sensitivity(double value = 1.0) {
    return {[value](double) { return value; }, [](double) { return 0.0; }, [](double) { return 0.0; }};
}

/// f(s) = 1/(1+s), F(z) = ln(1+z).
inline SmoothFunction saturating_sensitivity() {
    return {[](double s) { return 1.0 / (1.0 + s); }, [](double s) { return -1.0 / ((1.0 + s) * (1.0 + s)); },
            [](double s) { return 2.0 / ((1.0 + s) * (1.0 + s) * (1.0 + s)); }};
}

// ---------------------------------------------------------------------------------------------
// Semitrivial problems and gauges.

/// -div(P(u,0) grad u) = lambda a u + f(x,u) u.
inline ScalarProblem semitrivial_u_problem(const Model& m, double lambda) {
    ScalarProblem p;
    p.diffusion = {[m](double s) { return m.diff_uu(s, 0.0); }, [m](double s) { return m.diff_uu.du(s, 0.0); }};
    p.reaction = m.self_u;
    p.gamma = lambda;
    p.weight = m.weight_u;
    if (const auto* fam = m.prey_predator()) {
        // P(s, 0) = A(0) H(0) G'(s), so I(s) = A(0) H(0) G(s).
        const double k = fam->A(0.0) * fam->H(0.0);
        const SmoothFunction G = fam->G;
        p.kirchhoff = [k, G](double s) { return k * G(s); };
    } else if (m.chemotaxis()) {
        p.kirchhoff = [](double s) { return s; };
    }
    return p;
}

/// -div(R(0,v) grad v) = mu b v + g(x,v) v.
inline ScalarProblem semitrivial_v_problem(const Model& m, double mu) {
    ScalarProblem p;
    p.diffusion = {[m](double s) { return m.diff_vv(0.0, s); }, [m](double s) { return m.diff_vv.dv(0.0, s); }};
    p.reaction = m.self_v;
    p.gamma = mu;
    p.weight = m.weight_v;
    if (m.prey_predator() || m.chemotaxis()) p.kirchhoff = [](double s) { return s; };
    return p;
}

/// h1(z) = int_0^z Q_v(s,0) / R(s,0) ds.
inline double gauge_h1(const Model& m, double z, double abs_tol = 1e-10) {
    require(z >= 0.0, ErrorKind::InvalidArgument, "gauge argument must be nonnegative");
    return integrate([&m](double s) { return m.diff_vu.dv(s, 0.0) / m.diff_vv(s, 0.0); }, 0.0, z, abs_tol);
}

/// h2(z) = int_0^z S_u(0,s) / P(0,s) ds.
inline double gauge_h2(const Model& m, double z, double abs_tol = 1e-10) {
    require(z >= 0.0, ErrorKind::InvalidArgument, "gauge argument must be nonnegative");
    return integrate([&m](double s) { return m.diff_uv.du(0.0, s) / m.diff_uu(0.0, s); }, 0.0, z, abs_tol);
}

// ---------------------------------------------------------------------------------------------
// Hypothesis sampling.

struct Violation {
    std::string hypothesis;   ///< "PQRS", "fg", "FG" or "ab"
    std::string condition;
    double u = 0.0;
    double v = 0.0;
    double x = 0.0;
    double value = 0.0;       ///< worst offending value of the checked quantity
};

/// Samples the structural hypotheses on [0,u_max] x [0,v_max] (and x in [0, length]).
/// Returns one entry per violated inequality, at its worst offending sample; empty means pass.
inline std::vector<Violation> hypothesis_check(const Model& m, double u_max, double v_max, int samples,
                                               double length = 1.0) {
    require(u_max > 0.0 && v_max > 0.0 && samples >= 2, ErrorKind::InvalidArgument,
            "hypothesis check needs positive rectangle and samples >= 2");
    constexpr double eq_tol = 1e-12;
    std::vector<Violation> out;

    struct Worst {
        bool hit = false;
        Violation v;
        double score = 0.0;
    };
    auto track = [](Worst& w, double score, Violation cand) {
        if (score > 0.0 && (!w.hit || score > w.score)) {
            w.hit = true;
            w.score = score;
            w.v = std::move(cand);
        }
    };

    Worst q_axis, s_axis, det, p_floor, r_floor, f_zero, g_zero, finite, a_sign, b_sign;
    const double du = u_max / (samples - 1);
    const double dv = v_max / (samples - 1);
    for (int i = 0; i < samples; ++i) {
        const double u = i * du;
        const double qv = m.diff_vu(u, 0.0);
        track(q_axis, std::abs(qv) - eq_tol, {"PQRS", "Q(u,0) = 0", u, 0.0, 0.0, qv});
        const double v = i * dv;
        const double su = m.diff_uv(0.0, v);
        track(s_axis, std::abs(su) - eq_tol, {"PQRS", "S(0,v) = 0", 0.0, v, 0.0, su});
        for (int j = 0; j < samples; ++j) {
            const double vv = j * dv;
            const double P = m.diff_uu(u, vv), Q = m.diff_vu(u, vv), R = m.diff_vv(u, vv), S = m.diff_uv(u, vv);
            const double D = std::abs(P * R - Q * S);
            track(det, m.delta0 - D, {"PQRS", "|PR - QS| >= delta0", u, vv, 0.0, D});
            track(p_floor, m.P0 - P, {"PQRS", "P >= P0", u, vv, 0.0, P});
            track(r_floor, m.R0 - R, {"PQRS", "R >= R0", u, vv, 0.0, R});
            const bool ok = std::isfinite(P) && std::isfinite(Q) && std::isfinite(R) && std::isfinite(S);
            track(finite, ok ? 0.0 : 1.0, {"PQRS", "coefficients finite", u, vv, 0.0, P});
            const double x = length * static_cast<double>(j) / (samples - 1);
            const double F = m.inter_u(x, u, vv), G = m.inter_v(x, u, vv);
            track(finite, (std::isfinite(F) && std::isfinite(G)) ? 0.0 : 1.0, {"FG", "F, G finite", u, vv, x, F});
        }
    }
    double a_max = 0.0, b_max = 0.0;
    for (int j = 0; j < samples; ++j) {
        const double x = length * static_cast<double>(j) / (samples - 1);
        const double f0 = m.self_u(x, 0.0), g0 = m.self_v(x, 0.0);
        track(f_zero, std::abs(f0) - eq_tol, {"fg", "f(x,0) = 0", 0.0, 0.0, x, f0});
        track(g_zero, std::abs(g0) - eq_tol, {"fg", "g(x,0) = 0", 0.0, 0.0, x, g0});
        const double a = m.weight_u(x), b = m.weight_v(x);
        track(a_sign, -a, {"ab", "a >= 0", 0.0, 0.0, x, a});
        track(b_sign, -b, {"ab", "b >= 0", 0.0, 0.0, x, b});
        a_max = std::max(a_max, a);
        b_max = std::max(b_max, b);
    }
    for (Worst* w : {&q_axis, &s_axis, &det, &p_floor, &r_floor, &finite, &f_zero, &g_zero, &a_sign, &b_sign})
        if (w->hit) out.push_back(w->v);
    if (a_max <= 0.0) out.push_back({"ab", "a nontrivial", 0.0, 0.0, 0.0, a_max});
    if (b_max <= 0.0) out.push_back({"ab", "b nontrivial", 0.0, 0.0, 0.0, b_max});
    return out;
}

// ---------------------------------------------------------------------------------------------
// A-priori bounds and nonexistence.

struct BoundReport {
    double u_bound = 0.0;
    double v_bound = 0.0;
    bool valid = false;
};

namespace detail {

/// Inverse of an increasing G with G(0) = 0 on [0, inf).
inline double invert_increasing(const ScalarMap& G, double target) {
    if (target <= 0.0) return 0.0;
    double hi = 1.0;
    while (G(hi) < target) {
        hi *= 2.0;
        require(hi < 1e300, ErrorKind::InvalidArgument, "G does not reach the requested value");
    }
    std::uintmax_t iters = 200;
    const auto bracket = boost::math::tools::toms748_solve([&](double s) { return G(s) - target; }, 0.0, hi,
                                                           boost::math::tools::eps_tolerance<double>(50), iters);
    return 0.5 * (bracket.first + bracket.second);
}

} // namespace detail

/// Prey-predator: ||u|| <= G^{-1}(G(lambda) H1/H0), ||v|| <= mu + c ||u||.
/// Chemotaxis: ||v|| <= mu and ||u|| <= (lambda + |b| mu) e^{chi F(mu)} from the maximum
/// principle applied to w = u e^{-chi F(v)}.
inline BoundReport apriori_bounds(const Model& m, double lambda, double mu) {
    BoundReport r;
    if (const auto* fam = m.prey_predator()) {
        if (lambda > 0.0) {
            r.u_bound = detail::invert_increasing(fam->G.value, fam->G(lambda) * fam->H1 / fam->H0);
            r.valid = true;
        }
        r.v_bound = std::max(0.0, mu + fam->c * r.u_bound);
        return r;
    }
    if (const auto* fam = m.chemotaxis()) {
        r.v_bound = std::max(0.0, mu);
        const double base = lambda + std::abs(fam->b) * r.v_bound;
        r.u_bound = std::max(0.0, base) * std::exp(fam->chi * fam->F(r.v_bound));
        r.valid = mu > 0.0 && base > 0.0;
        return r;
    }
    fail(ErrorKind::UnsupportedModel, "a-priori bounds are only available for the two application families");
}

enum class Existence { ProvenEmpty, Unknown };

struct NonexistenceReport {
    Existence verdict = Existence::Unknown;
    std::string reason;
    /// Lower lambda-threshold for the chemotaxis family (coexistence needs lambda above it).
    std::optional<double> lambda_floor;
};

inline NonexistenceReport nonexistence(const Model& m, double lambda, double mu, double lambda1) {
    NonexistenceReport r;
    if (const auto* fam = m.prey_predator()) {
        if (lambda <= 0.0) {
            r.verdict = Existence::ProvenEmpty;
            r.reason = "lambda <= 0";
            return r;
        }
        const double cbar = apriori_bounds(m, lambda, mu).u_bound;
        if (mu <= lambda1 - fam->c * cbar) {
            r.verdict = Existence::ProvenEmpty;
            r.reason = "mu <= lambda1 - c * u_bound";
        }
        return r;
    }
    if (const auto* fam = m.chemotaxis()) {
        if (mu <= lambda1) {
            r.verdict = Existence::ProvenEmpty;
            r.reason = "mu <= lambda1";
            return r;
        }
        const double gauge = std::exp(fam->chi * fam->F(mu));
        if (fam->b <= 0.0) {
            r.lambda_floor = lambda1 / gauge;
        } else {
            // sigma_1[-Delta - b mu e^{chi F(mu)}] has a constant potential.
            const double s = lambda1 - fam->b * mu * gauge;
            if (s > 0.0) r.lambda_floor = lambda1 / gauge - fam->b * mu;
            else if (s == 0.0) r.lambda_floor = 0.0;
            else r.lambda_floor = s;
        }
        if (lambda <= *r.lambda_floor) {
            r.verdict = Existence::ProvenEmpty;
            r.reason = fam->b <= 0.0 ? "lambda <= lambda1 e^{-chi F(mu)}" : "lambda below the b > 0 floor";
        }
        return r;
    }
    fail(ErrorKind::UnsupportedModel, "nonexistence predicates are only available for the application families");
}

} // namespace coexist
