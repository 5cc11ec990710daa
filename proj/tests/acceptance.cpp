// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "coexist/continuation.hpp"
#include "coexist/curves.hpp"

using namespace coexist;

namespace {

const double pi2 = M_PI * M_PI;
constexpr std::size_t n_default = 199;

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

int failures = 0;

void report(const char* name, const std::function<void(Outcome&)>& body) {
    Outcome o;
    try {
        body(o);
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail << " [exception: " << e.what() << "]";
    }
    if (!o.pass) ++failures;
    std::printf("%s %s:%s\n", o.pass ? "PASS" : "FAIL", name, o.detail.str().c_str());
    std::fflush(stdout);
}

Model ap2() { return model_ap2(0.5, 1.0, 1.0, constant_sensitivity(), [](double z) { return z; }); }

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(a + (b - a) * i / (n - 1));
    return v;
}

double sigma_const(std::size_t n, double A, double B, double C) {
    const Grid g = make_grid(n, 1.0);
    return sigma1_divergence(g, NodeField::constant(g, A), GridFunction::constant(g, B), GridFunction::constant(g, C))
        .sigma1;
}

void eigenvalue_ground_truth(Outcome& o) {
    const double s1 = sigma_const(n_default, 1, 0, 1), s2 = sigma_const(2 * n_default + 1, 1, 0, 1);
    const double rel = std::abs(s1 - pi2) / pi2;
    const double ratio = std::abs(s1 - pi2) / std::abs(s2 - pi2);
    const double d = std::abs(sigma_const(n_default, 3, 0, 1) / (3 * pi2) - 1);
    const double b = std::abs(sigma_const(n_default, 1, 5, 1) / (pi2 + 5) - 1);
    const double c = std::abs(sigma_const(n_default, 1, 0, 2) / (pi2 / 2) - 1);
    o.detail << " sigma1=" << s1 << " rel=" << rel << " ratio=" << ratio << " scalings=" << d << "," << b << "," << c;
    o.check(rel < 1e-3, "relative error < 1e-3");
    o.check(std::abs(ratio - 4.0) <= 0.5, "refinement ratio 4 +- 0.5");
    o.check(d < 1e-3 && b < 1e-3 && c < 1e-3, "scalings within 1e-3");
}

void gauge_identity(Outcome& o) {
    // n = 199 and n = 399 share the interval (0,1), so h halves exactly.
    auto gap = [](const Model& m, std::size_t n) {
        return curve_point(m, Curve::LambdaMu, pi2 + 2.0, make_grid(n, 1.0)).gap;
    };
    const std::pair<const char*, Model> cases[] = {{"prey-predator", model_ap1_sample()}, {"chemotaxis", ap2()}};
    for (const auto& [name, m] : cases) {
        const double g1 = gap(m, n_default), g2 = gap(m, 2 * n_default + 1);
        const double order = std::log2(g1 / g2);
        o.detail << " " << name << ": gap=" << g1 << " order=" << order;
        o.check(g1 < 1e-2, std::string(name) + " gap < 1e-2");
        o.check(std::abs(order - 2.0) <= 0.3, std::string(name) + " order 2 +- 0.3");
    }
}

void logistic_threshold(Outcome& o) {
    const Grid g = make_grid(n_default, 1.0);
    double worst_ratio = 0.0;
    auto solve = [&](double gamma) {
        const ScalarProblem p = logistic_problem(gamma);
        const ScalarSolveResult r = solve_scalar(p, g, default_scalar_guess(p, g));
        if (r.found()) worst_ratio = std::max(worst_ratio, r.solution.sup_norm() / gamma);
        return r;
    };
    double lo = 5.0, hi = 15.0;
    o.check(!solve(lo).found() && solve(hi).found(), "bracket");
    while (hi - lo > 1e-3) {
        const double mid = 0.5 * (lo + hi);
        (solve(mid).found() ? hi : lo) = mid;
    }
    const double threshold = 0.5 * (lo + hi);
    double min_margin = INFINITY;
    for (double gamma : {pi2 + 0.5, 2 * pi2, 4 * pi2}) {
        const ScalarSolveResult r = solve(gamma);
        o.check(r.found(), "solution above threshold");
        if (r.found()) min_margin = std::min(min_margin, nondegeneracy_margin(logistic_problem(gamma), g, r.solution));
    }
    o.detail << " threshold=" << threshold << " max ||theta||/gamma=" << worst_ratio << " min margin=" << min_margin;
    o.check(std::abs(threshold - pi2) < 1e-2, "threshold within 1e-2 of pi^2");
    o.check(worst_ratio <= 1.0, "||theta|| <= gamma");
    o.check(min_margin > 0.0, "margins > 0");
}

void jacobian_integrity(Outcome& o) {
    const Grid g = make_grid(n_default, 1.0);
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> amp(0.05, 4.0), wiggle(-0.5, 0.5), par(-5.0, 40.0);
    const std::pair<const char*, Model> cases[] = {{"prey-predator", model_ap1_sample()}, {"chemotaxis", ap2()}};
    for (const auto& [name, m] : cases) {
        double worst = 0.0;
        for (int t = 0; t < 20; ++t) {
            const double a = amp(rng), b = amp(rng), p = wiggle(rng), q = wiggle(rng);
            const double lambda = par(rng), mu = par(rng);
            const CoupledState s(
                GridFunction::sample(g, [&](double x) { return a * std::sin(M_PI * x) * (1 + p * std::sin(5 * x)); }),
                GridFunction::sample(g, [&](double x) { return b * std::sin(M_PI * x) * (1 + q * std::cos(3 * x)); }));
            const Eigen::MatrixXd J(jacobian(m, lambda, mu, s).matrix());
            const Vector x = s.pack();
            double err = 0.0;
            for (Eigen::Index j = 0; j < x.size(); ++j) {
                const double e = 1e-6 * std::max(1.0, std::abs(x[j]));
                Vector xp = x, xm = x;
                xp[j] += e;
                xm[j] -= e;
                const Vector col = (residual(m, lambda, mu, CoupledState::unpack(g, xp)) -
                                    residual(m, lambda, mu, CoupledState::unpack(g, xm))) /
                                   (2 * e);
                err = std::max(err, (J.col(j) - col).cwiseAbs().maxCoeff());
            }
            worst = std::max(worst, err / J.cwiseAbs().maxCoeff());
        }
        o.detail << " " << name << ": max rel err=" << worst;
        o.check(worst < 1e-5, std::string(name) + " within 1e-5");
    }
}

void semitrivial_embedding(Outcome& o) {
    const Grid g = make_grid(n_default, 1.0);
    const Model m = model_ap1_sample();
    double worst = 0.0, spread = 0.0;
    for (double lambda : {2 * pi2 + 1, 30.0, 40.0, 50.0, 59.0}) {
        const SemitrivialBase b = semitrivial_base(m, Side::OnU, lambda, g);
        o.check(b.exists, "semitrivial solution exists");
        if (!b.exists) continue;
        double lo = INFINITY, hi = 0.0;
        for (double mu : {-10.0, 0.0, 5.0, 20.0, 100.0}) {
            const double r = residual(m, lambda, mu, b.state()).cwiseAbs().maxCoeff();
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        worst = std::max(worst, hi);
        spread = std::max(spread, hi - lo);
    }
    o.detail << " max residual=" << worst << " spread over mu=" << spread;
    o.check(worst < 1e-7, "residual < 1e-7");
    o.check(spread == 0.0, "independent of mu");
}

void bifurcation_structure(Outcome& o) {
    const Grid g = make_grid(n_default, 1.0);
    const std::tuple<const char*, Model, double> cases[] = {{"prey-predator", model_ap1_sample(), 40.0},
                                                            {"chemotaxis", ap2(), pi2 + 2.0}};
    for (const auto& [name, m, lambda] : cases) {
        const BifurcationTangent t = bifurcation_tangent(m, semitrivial_base(m, Side::OnU, lambda, g));
        const double s0 = t.smallest_singular_values[0], s1 = t.smallest_singular_values[1];
        o.detail << " " << name << ": sv=" << s0 << "," << s1 << " tol=" << t.kernel_tol << " angle=" << t.angle;
        o.check(s0 < t.kernel_tol && s1 >= t.kernel_tol, std::string(name) + " exactly one small singular value");
        o.check(t.kernel_sign_definite && t.principal.positive(), std::string(name) + " sign-definite v-component");
        o.check(t.angle < 1e-4, std::string(name) + " angle < 1e-4");
    }
}

void endpoint_law(Outcome& o) {
    const Grid g = make_grid(n_default, 1.0);
    const Model m = ap2();
    const double mu = pi2 + 2.0;
    const BifurcationTangent t = bifurcation_tangent(m, semitrivial_base(m, Side::OnV, mu, g), {1e-6, 1e-6, false});
    const Branch br = continue_branch(m, t);
    const double lambda_star = br.termination_data.parameter;
    o.detail << " termination=" << to_string(br.termination) << " lambda*=" << lambda_star;
    o.check(br.termination == Termination::HitsOtherSemitrivial_u, "terminates on the u-semitrivial branch");
    // Independent evaluation of sigma_1[-Delta + c theta_{lambda*}].
    const ScalarProblem p = semitrivial_u_problem(m, lambda_star);
    const ScalarSolveResult th = solve_scalar(p, g, default_scalar_guess(p, g));
    o.check(th.found(), "theta_{lambda*} exists");
    if (!th.found()) return;
    const double c = m.chemotaxis()->c;
    const double sigma =
        sigma1_divergence(g, NodeField::constant(g, 1.0), GridFunction(g, c * th.solution.values()),
                          GridFunction::constant(g, 1.0))
            .sigma1;
    o.detail << " sigma1[-Delta + c theta]=" << sigma << " |mu - sigma1|=" << std::abs(mu - sigma);
    o.check(std::abs(mu - sigma) < 1e-2, "|mu - sigma1| < 1e-2");
}

void region_theorem(Outcome& o) {
    const Grid g = make_grid(n_default, 1.0);
    const Model m = model_ap1_sample();
    const RegionMap r = region_map(m, linspace(-1.0, 6 * pi2, 12), linspace(pi2 - 2, pi2 + 10, 12), g);
    int empty = 0, empty_found = 0, predicted = 0, confirmed_pred = 0, confirmed = 0, out_of_bounds = 0;
    double worst_excess = -INFINITY;
    auto Ginv = [](double y) { return 0.5 * (-1.0 + std::sqrt(1.0 + 4.0 * y)); };
    for (const RegionCell& c : r.cells) {
        if (c.proven_empty) {
            ++empty;
            empty_found += c.probe.found;
        }
        if (c.predicted) {
            ++predicted;
            confirmed_pred += c.verdict == CellVerdict::Confirmed;
        }
        if (c.verdict == CellVerdict::Confirmed) {
            ++confirmed;
            // u <= G^{-1}(2 G(lambda)), v <= mu + u_bound with G(u) = u^2 + u.
            const double ub = Ginv(2.0 * (c.lambda * c.lambda + c.lambda));
            const double vb = c.mu + ub;
            const double excess = std::max(c.probe.state.u.max() - ub, c.probe.state.v.max() - vb);
            worst_excess = std::max(worst_excess, excess);
            out_of_bounds += excess > 1e-6;
        }
    }
    const double frac = predicted ? static_cast<double>(confirmed_pred) / predicted : 0.0;
    o.detail << " ProvenEmpty=" << empty << " (probe hits " << empty_found << ") Predicted=" << predicted
             << " confirmed=" << confirmed_pred << " (" << 100 * frac << "%) Confirmed total=" << confirmed
             << " max bound excess=" << worst_excess;
    o.check(empty > 0 && empty_found == 0, "ProvenEmpty cells probe-free");
    o.check(predicted > 0 && frac >= 0.9, ">= 90% of Predicted confirmed");
    o.check(out_of_bounds == 0, "Confirmed states within a-priori bounds + 1e-6");
}

void nonexistence_soundness(Outcome& o) {
    const Grid g = make_grid(n_default, 1.0);
    ProbeOptions po;
    po.random_seeds = 50;
    po.probe_proven_empty = true;
    const RegionMap a = region_map(model_ap1_sample(), {-5.0, -1.0, 0.0}, {pi2 - 2, pi2 + 2, pi2 + 10, 40.0}, g, po);
    const RegionMap b = region_map(ap2(), {-1.0, 5.0, 15.0, 30.0}, {pi2 - 3, pi2 - 1, pi2 - 0.1}, g, po);
    int probes = 0, hits = 0;
    for (const RegionMap* r : {&a, &b})
        for (const RegionCell& c : r->cells) {
            probes += c.probe.attempts;
            hits += c.probe.found;
            o.check(c.proven_empty, "cell classified ProvenEmpty");
        }
    o.detail << " probes=" << probes << " confirmed=" << hits;
    o.check(hits == 0, "zero Confirmed probes");
}

void monotonicity(Outcome& o) {
    const Grid g = make_grid(n_default, 1.0);
    const CurveTable t = curve_table(model_ap1_sample(), Curve::MuLambda, linspace(2 * pi2 + 0.5, 6 * pi2, 10), g);
    bool decreasing = true;
    for (std::size_t k = 0; k < t.points.size(); ++k) {
        o.check(t.points[k].form == "drift", "lambda above threshold");
        if (k && !(t.points[k].value < t.points[k - 1].value)) decreasing = false;
    }
    o.detail << " mu_lambda from " << t.points.front().value << " to " << t.points.back().value;
    o.check(decreasing, "strictly decreasing");
}

} // namespace

int main() {
    report("eigenvalue-ground-truth", eigenvalue_ground_truth);
    report("gauge-identity", gauge_identity);
    report("logistic-threshold", logistic_threshold);
    report("jacobian-integrity", jacobian_integrity);
    report("semitrivial-embedding", semitrivial_embedding);
    report("bifurcation-point-structure", bifurcation_structure);
    report("chemotaxis-endpoint", endpoint_law);
    report("prey-predator-region", region_theorem);
    report("nonexistence-soundness", nonexistence_soundness);
    report("mu-lambda-monotonicity", monotonicity);
    std::printf("%d of 10 criteria failed\n", failures);
    return failures ? 1 : 0;
}
