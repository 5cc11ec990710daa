#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "coexist/continuation.hpp"
#include "coexist/models.hpp"
#include "coexist/system.hpp"

namespace coexist {

enum class Curve { MuLambda, LambdaMu };

inline std::string to_string(Curve c) { return c == Curve::MuLambda ? "mu_lambda" : "lambda_mu"; }

struct CurvePoint {
    double parameter = 0.0;
    double value = 0.0;
    std::string form;        ///< "drift" or "extension"
    double gauge_value = std::numeric_limits<double>::quiet_NaN();
    double gap = std::numeric_limits<double>::quiet_NaN();
    std::optional<SemitrivialBase> base;
    std::optional<BifurcationTangent> tangent;   ///< kernel data when the base is nondegenerate
};

namespace detail {

inline Side side_of(Curve c) { return c == Curve::MuLambda ? Side::OnU : Side::OnV; }

/// Value of the curve below the semitrivial threshold.
inline double curve_extension(const Model& m, Curve c, const Grid& grid) {
    if (c == Curve::MuLambda) return scalar_threshold(semitrivial_v_problem(m, 0.0), grid);
    // The prey-predator family extends lambda_mu by 0, not by the u-threshold.
    if (m.prey_predator()) return 0.0;
    return scalar_threshold(semitrivial_u_problem(m, 0.0), grid);
}

} // namespace detail

/// One curve value: drift-form sigma_1 at theta, its gauge-form twin and their gap; the
/// extension value below the semitrivial threshold.
inline CurvePoint curve_point(const Model& m, Curve c, double parameter, const Grid& grid,
                              const std::optional<GridFunction>& warm = std::nullopt) {
    CurvePoint out;
    out.parameter = parameter;
    const Side side = detail::side_of(c);
    SemitrivialBase base = semitrivial_base(m, side, parameter, grid, warm);
    if (!base.exists) {
        out.value = detail::curve_extension(m, c, grid);
        out.form = "extension";
        out.base = std::move(base);
        return out;
    }
    out.value = base.eigen->sigma1;
    out.form = "drift";
    const DriftForm f = drift_form(m, side, base.theta);
    const TransformGap g = transform_identity_check(grid, f.M1, f.M2, base.theta, f.B, f.C);
    out.gauge_value = g.sigma_transformed;
    out.gap = std::abs(out.value - g.sigma_transformed);
    try {
        out.tangent = bifurcation_tangent(m, base, {1e-6, 1e-6, false});
    } catch (const Error&) {
        out.tangent.reset();
    }
    out.base = std::move(base);
    return out;
}

inline double mu_lambda(const Model& m, double lambda, const Grid& grid) {
    return curve_point(m, Curve::MuLambda, lambda, grid).value;
}

inline double lambda_mu(const Model& m, double mu, const Grid& grid) {
    return curve_point(m, Curve::LambdaMu, mu, grid).value;
}

struct CurveTable {
    Curve curve = Curve::MuLambda;
    std::string model_label;
    std::size_t n_interior = 0;
    double length = 0.0;
    std::vector<CurvePoint> points;   ///< increasing parameter

    [[nodiscard]] std::vector<double> parameters() const {
        std::vector<double> p;
        for (const auto& q : points) p.push_back(q.parameter);
        return p;
    }
    [[nodiscard]] std::vector<double> values() const {
        std::vector<double> v;
        for (const auto& q : points) v.push_back(q.value);
        return v;
    }

    /// Piecewise-linear interpolation; clamps outside the sampled range.
    [[nodiscard]] double interpolate(double p) const {
        require(!points.empty(), ErrorKind::InvalidArgument, "empty curve table");
        if (p <= points.front().parameter) return points.front().value;
        if (p >= points.back().parameter) return points.back().value;
        const auto it = std::lower_bound(points.begin(), points.end(), p,
                                         [](const CurvePoint& q, double x) { return q.parameter < x; });
        const auto& b = *it;
        const auto& a = *(it - 1);
        const double t = (p - a.parameter) / (b.parameter - a.parameter);
        return (1.0 - t) * a.value + t * b.value;
    }

    /// Exact table entry at a sampled parameter, if present.
    [[nodiscard]] const CurvePoint* find(double p) const {
        for (const auto& q : points)
            if (q.parameter == p) return &q;
        return nullptr;
    }
};

/// Sweeps the curve over increasing parameters, warm-starting each semitrivial solve.
inline CurveTable curve_table(const Model& m, Curve c, const std::vector<double>& params, const Grid& grid) {
    for (std::size_t k = 1; k < params.size(); ++k)
        require(params[k] > params[k - 1], ErrorKind::InvalidArgument, "curve parameters must be increasing");
    CurveTable t;
    t.curve = c;
    t.model_label = m.label;
    t.n_interior = grid.n_interior();
    t.length = grid.length();
    std::optional<GridFunction> warm;
    for (double p : params) {
        CurvePoint q = curve_point(m, c, p, grid, warm);
        if (q.base && q.base->exists) warm = q.base->theta;
        for (double v : {q.value}) require(std::isfinite(v), ErrorKind::NonConvergence, "non-finite curve value");
        t.points.push_back(std::move(q));
    }
    return t;
}

// ---------------------------------------------------------------------------------------------
// Coexistence regions.

enum class CellVerdict { ProvenEmpty, Predicted, Confirmed, PredictedNotFound, Unknown };

inline std::string to_string(CellVerdict v) {
    switch (v) {
    case CellVerdict::ProvenEmpty: return "ProvenEmpty";
    case CellVerdict::Predicted: return "Predicted";
    case CellVerdict::Confirmed: return "Confirmed";
    case CellVerdict::PredictedNotFound: return "PredictedNotFound";
    case CellVerdict::Unknown: return "Unknown";
    }
    return "?";
}

/// Theorem conditions for coexistence, given the two curve values at the cell.
///   prey-predator: mu > mu_lambda and lambda > lambda_mu
///   chemotaxis:    mu > lambda1 and (lambda > lambda_mu and mu > mu_lambda, or lambda < lambda_mu and mu < mu_lambda)
inline bool predicted_coexistence(const Model& m, double lambda, double mu, double mu_l, double lambda_m,
                                  double lambda1) {
    if (m.prey_predator()) return mu > mu_l && lambda > lambda_m;
    if (m.chemotaxis())
        return mu > lambda1 && ((lambda > lambda_m && mu > mu_l) || (lambda < lambda_m && mu < mu_l));
    return false;
}

struct ProbeOptions {
    NewtonOptions newton;
    int random_seeds = 4;          ///< randomized seeds appended to the deterministic ladder
    std::uint64_t seed = 0;
    double bump_fraction = 0.3;    ///< bump amplitude relative to the a-priori bound
    double bound_slack = 1e-6;
    bool probe_proven_empty = true;
    unsigned threads = 0;          ///< 0: hardware concurrency
};

struct ProbeResult {
    bool found = false;
    CoupledState state;
    double residual = std::numeric_limits<double>::quiet_NaN();
    std::string seed_kind;          ///< which ladder rung succeeded
    int attempts = 0;
    bool within_bounds = false;
};

/// Context the ladder draws on: semitrivial bases and kernel directions at the cell's parameters.
struct ProbeContext {
    const CurvePoint* mu_lambda = nullptr;   ///< curve point at this lambda
    const CurvePoint* lambda_mu = nullptr;   ///< curve point at this mu
    std::optional<CoupledState> neighbour;   ///< converged state of an adjacent cell
};

namespace detail {

inline GridFunction clamp_nonnegative(const GridFunction& g) {
    return GridFunction(g.grid(), g.values().cwiseMax(0.0));
}

inline GridFunction bump(const Grid& grid, double amplitude) {
    const double L = grid.length();
    return GridFunction::sample(grid, [&](double x) { return amplitude * std::sin(M_PI * x / L); });
}

} // namespace detail

/// Newton from a ladder of seeds: neighbour warm start, tangent seeds off each semitrivial base,
/// a mid-amplitude bump, then randomized bumps drawn from (seed, lambda, mu).
inline ProbeResult probe_coexistence(const Model& m, double lambda, double mu, const Grid& grid,
                                     const ProbeContext& ctx, const ProbeOptions& opts) {
    const BoundReport bounds = apriori_bounds(m, lambda, mu);
    const double ub = bounds.u_bound > 0.0 ? bounds.u_bound : std::max(1.0, std::abs(lambda));
    const double vb = bounds.v_bound > 0.0 ? bounds.v_bound : std::max(1.0, std::abs(mu));

    std::vector<std::pair<std::string, CoupledState>> seeds;
    if (ctx.neighbour) seeds.emplace_back("neighbour", *ctx.neighbour);
    if (ctx.mu_lambda && ctx.mu_lambda->tangent) {
        const auto& t = *ctx.mu_lambda->tangent;
        const double eps = std::min(std::abs(mu - t.threshold), vb);
        for (double e : {eps, 0.3 * eps})
            if (e > 0.0)
                seeds.emplace_back("tangent-u", CoupledState(detail::clamp_nonnegative(GridFunction(
                                                                  grid, t.theta.values() + e * t.coupled.values())),
                                                              GridFunction(grid, e * t.principal.values())));
    }
    if (ctx.lambda_mu && ctx.lambda_mu->tangent) {
        const auto& t = *ctx.lambda_mu->tangent;
        const double eps = std::min(std::abs(lambda - t.threshold), ub);
        for (double e : {eps, 0.3 * eps})
            if (e > 0.0)
                seeds.emplace_back("tangent-v", CoupledState(GridFunction(grid, e * t.principal.values()),
                                                              detail::clamp_nonnegative(GridFunction(
                                                                  grid, t.theta.values() + e * t.coupled.values()))));
    }
    seeds.emplace_back("bump", CoupledState(detail::bump(grid, opts.bump_fraction * ub),
                                            detail::bump(grid, opts.bump_fraction * vb)));
    {
        std::seed_seq sq{static_cast<std::uint64_t>(opts.seed), static_cast<std::uint64_t>(std::hash<double>{}(lambda)),
                         static_cast<std::uint64_t>(std::hash<double>{}(mu))};
        std::mt19937_64 rng(sq);
        std::uniform_real_distribution<double> amp(0.02, 1.0), shape(-0.4, 0.4);
        for (int k = 0; k < opts.random_seeds; ++k) {
            const double au = amp(rng) * ub, av = amp(rng) * vb;
            const double su = shape(rng), sv = shape(rng);
            const double L = grid.length();
            auto profile = [L](double a, double s) {
                return [=](double x) {
                    const double y = M_PI * x / L;
                    return a * std::sin(y) * (1.0 + s * std::cos(y));
                };
            };
            seeds.emplace_back("random", CoupledState(GridFunction::sample(grid, profile(au, su)),
                                                      GridFunction::sample(grid, profile(av, sv))));
        }
    }

    ProbeResult out;
    for (const auto& [kind, guess] : seeds) {
        ++out.attempts;
        const NewtonResult r = detail::newton_raw(m, lambda, mu, guess, opts.newton);
        if (!r.found()) continue;
        out.found = true;
        out.state = r.state;
        out.residual = r.residual;
        out.seed_kind = kind;
        out.within_bounds = !bounds.valid || (r.state.u.max() <= bounds.u_bound + opts.bound_slack &&
                                              r.state.v.max() <= bounds.v_bound + opts.bound_slack);
        return out;
    }
    return out;
}

struct RegionCell {
    double lambda = 0.0;
    double mu = 0.0;
    CellVerdict verdict = CellVerdict::Unknown;
    bool proven_empty = false;
    bool predicted = false;
    std::string empty_reason;
    ProbeResult probe;
    double mu_lambda = 0.0;
    double lambda_mu = 0.0;
};

struct RegionMap {
    std::string model_label;
    std::vector<double> lambdas;
    std::vector<double> mus;
    std::vector<RegionCell> cells;   ///< row-major in mu: cells[j * lambdas.size() + i]
    CurveTable mu_lambda;            ///< over lambdas
    CurveTable lambda_mu;            ///< over mus
    double lambda1 = 0.0;

    [[nodiscard]] const RegionCell& at(std::size_t i_lambda, std::size_t j_mu) const {
        return cells[j_mu * lambdas.size() + i_lambda];
    }
};

/// Classifies every cell of lambda_grid x mu_grid. Rows (fixed mu) run in parallel; within a row
/// cells are probed left to right so converged states warm-start their neighbours.
inline RegionMap region_map(const Model& m, const std::vector<double>& lambda_grid, const std::vector<double>& mu_grid,
                            const Grid& grid, const ProbeOptions& opts = {}) {
    require(!lambda_grid.empty() && !mu_grid.empty(), ErrorKind::InvalidArgument, "region grids must be nonempty");
    for (double x : lambda_grid) require(std::isfinite(x), ErrorKind::InvalidArgument, "non-finite lambda");
    for (double x : mu_grid) require(std::isfinite(x), ErrorKind::InvalidArgument, "non-finite mu");

    RegionMap map;
    map.model_label = m.label;
    map.lambdas = lambda_grid;
    map.mus = mu_grid;
    map.mu_lambda = curve_table(m, Curve::MuLambda, lambda_grid, grid);
    map.lambda_mu = curve_table(m, Curve::LambdaMu, mu_grid, grid);
    map.lambda1 = scalar_threshold(logistic_problem(0.0), grid);
    map.cells.resize(lambda_grid.size() * mu_grid.size());

    const std::size_t nl = lambda_grid.size();
    auto run_row = [&](std::size_t j) {
        std::optional<CoupledState> neighbour;
        for (std::size_t i = 0; i < nl; ++i) {
            RegionCell& cell = map.cells[j * nl + i];
            cell.lambda = lambda_grid[i];
            cell.mu = mu_grid[j];
            const CurvePoint& ml = map.mu_lambda.points[i];
            const CurvePoint& lm = map.lambda_mu.points[j];
            cell.mu_lambda = ml.value;
            cell.lambda_mu = lm.value;
            const NonexistenceReport ne = nonexistence(m, cell.lambda, cell.mu, map.lambda1);
            cell.proven_empty = ne.verdict == Existence::ProvenEmpty;
            cell.empty_reason = ne.reason;
            cell.predicted =
                !cell.proven_empty && predicted_coexistence(m, cell.lambda, cell.mu, ml.value, lm.value, map.lambda1);

            if (!cell.proven_empty || opts.probe_proven_empty) {
                ProbeContext ctx{&ml, &lm, neighbour};
                cell.probe = probe_coexistence(m, cell.lambda, cell.mu, grid, ctx, opts);
            }
            neighbour = cell.probe.found ? std::optional<CoupledState>(cell.probe.state) : std::nullopt;

            if (cell.proven_empty) cell.verdict = CellVerdict::ProvenEmpty;
            else if (cell.probe.found) cell.verdict = CellVerdict::Confirmed;
            else if (cell.predicted) cell.verdict = CellVerdict::PredictedNotFound;
            else cell.verdict = CellVerdict::Unknown;
        }
    };

    unsigned threads = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, mu_grid.size()));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t j = next++; j < mu_grid.size(); j = next++) run_row(j);
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return map;
}

} // namespace coexist
