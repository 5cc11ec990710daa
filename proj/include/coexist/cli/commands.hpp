#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iostream>
#include <string>

#include "coexist/cli/config.hpp"
#include "coexist/cli/csv.hpp"
#include "coexist/cli/schema.hpp"
#include "coexist/continuation.hpp"
#include "coexist/curves.hpp"

namespace coexist::cli {

namespace fs = std::filesystem;

enum ExitCode : int { Success = 0, SolverFailure = 1, ConfigFailure = 2 };

namespace detail {

inline Side parse_side(const Config& c, const std::string& section) {
    const std::string s = c.text(section, "side", "v");
    if (s == "u") return Side::OnU;
    if (s == "v") return Side::OnV;
    fail(ErrorKind::ConfigError, section + ".side must be 'u' or 'v'");
}

inline EigenOptions eigen_options(const Config& c) {
    EigenOptions o;
    o.tol = c.real("eig", "tol", o.tol);
    o.max_iter = static_cast<int>(c.integer("eig", "max_iter", o.max_iter));
    if (!(o.tol > 0.0) || o.max_iter < 1) fail(ErrorKind::ConfigError, "eig.tol and eig.max_iter must be positive");
    return o;
}

} // namespace detail

/// eig.csv. case = operator: sigma_1[-(A u')' + B; C] with constants. case = gauge: drift and
/// gauge forms of the threshold at the semitrivial base selected by side/parameter.
inline int cmd_eig(const Config& c, const fs::path& out) {
    const Grid grid = c.grid();
    const EigenOptions eo = detail::eigen_options(c);
    CsvTable t(schema::eig);
    const std::string which = c.text("eig", "case", "operator");
    const auto n = static_cast<long long>(grid.n_interior());
    if (which == "operator") {
        const double A = c.real("eig", "A", 1.0), B = c.real("eig", "B", 0.0), C = c.real("eig", "C", 1.0);
        if (!(A > 0.0 && C > 0.0)) fail(ErrorKind::ConfigError, "eig.A and eig.C must be positive");
        const EigenResult r = sigma1_divergence(grid, NodeField::constant(grid, A), GridFunction::constant(grid, B),
                                                GridFunction::constant(grid, C), eo);
        t.add({std::string("divergence"), r.sigma1, r.residual, static_cast<long long>(r.iterations), n, NAN});
        std::cout << "sigma1 = " << format_real(r.sigma1) << "\n";
    } else if (which == "gauge") {
        const Model m = c.model();
        const Side side = detail::parse_side(c, "eig");
        const double p = c.real("eig", "parameter", c.lambda1() + 2.0);
        const SemitrivialBase base = semitrivial_base(m, side, p, grid, std::nullopt, eo);
        if (!base.exists) fail(ErrorKind::InvalidArgument, "no positive semitrivial solution at eig.parameter");
        const DriftForm f = drift_form(m, side, base.theta);
        const EigenResult drift = sigma1_drift(grid, f.M1, f.M2, base.theta, f.B, f.C, eo);
        const NodeField g = gauge_transform(f.M1, f.M2, base.theta);
        Vector a(static_cast<Eigen::Index>(grid.n_interior() + 2));
        for (std::size_t k = 0; k < grid.n_interior() + 2; ++k)
            a[static_cast<Eigen::Index>(k)] = f.M2(base.theta.at_full(k)) * g[k];
        const Vector gi = g.values().segment(1, n);
        const EigenResult gauge =
            sigma1_divergence(grid, NodeField(grid, a), GridFunction(grid, f.B.values().cwiseProduct(gi)),
                              GridFunction(grid, f.C.values().cwiseProduct(gi)), eo);
        const double gap = std::abs(drift.sigma1 - gauge.sigma1);
        t.add({std::string("drift"), drift.sigma1, drift.residual, static_cast<long long>(drift.iterations), n, gap});
        t.add({std::string("gauge"), gauge.sigma1, gauge.residual, static_cast<long long>(gauge.iterations), n, gap});
        std::cout << "drift = " << format_real(drift.sigma1) << ", gauge = " << format_real(gauge.sigma1)
                  << ", gap = " << format_real(gap) << "\n";
    } else {
        fail(ErrorKind::ConfigError, "eig.case must be 'operator' or 'gauge'");
    }
    write_atomic(out / "eig.csv", t.str());
    return Success;
}

/// branch_semitrivial.csv over an increasing gamma grid.
inline int cmd_semitrivial(const Config& c, const fs::path& out) {
    const Grid grid = c.grid();
    const std::string problem = c.text("semitrivial", "problem", "logistic");
    ScalarProblem family;
    if (problem == "logistic") {
        const double d = c.real("semitrivial", "d", 1.0);
        if (!(d > 0.0)) fail(ErrorKind::ConfigError, "semitrivial.d must be positive");
        family = logistic_problem(0.0, d);
    } else if (problem == "u") {
        family = semitrivial_u_problem(c.model(), 0.0);
    } else if (problem == "v") {
        family = semitrivial_v_problem(c.model(), 0.0);
    } else {
        fail(ErrorKind::ConfigError, "semitrivial.problem must be logistic, u or v");
    }
    const auto gammas = c.linspace("semitrivial", "parameter_min", "parameter_max", "count", 1.0, 4.0 * c.lambda1(), 40);
    const SemitrivialBranch br = branch_sweep(family, gammas, grid);
    CsvTable t(schema::semitrivial);
    for (std::size_t k = 0; k < gammas.size(); ++k) {
        const auto& s = br.solutions[k];
        t.add({gammas[k], s.has_value(), s ? s->sup_norm() : NAN, br.nondegeneracy_margins[k]});
    }
    write_atomic(out / "branch_semitrivial.csv", t.str());
    std::cout << "threshold = " << format_real(br.threshold) << "\n";
    return Success;
}

inline void add_curve_rows(CsvTable& t, const CurveTable& table) {
    const std::string name = to_string(table.curve);
    for (const auto& p : table.points) {
        t.add({p.parameter, name, p.value, p.form, p.gap});
        if (p.form == "drift") t.add({p.parameter, name, p.gauge_value, std::string("gauge"), p.gap});
    }
}

/// curves.csv: drift value and gauge value per sampled parameter (one row each), or the extension.
inline int cmd_curves(const Config& c, const fs::path& out) {
    const Grid grid = c.grid();
    const Model m = c.model();
    const std::string which = c.text("curves", "curve", "both");
    if (which != "mu_lambda" && which != "lambda_mu" && which != "both")
        fail(ErrorKind::ConfigError, "curves.curve must be mu_lambda, lambda_mu or both");
    const auto params = c.linspace("curves", "parameter_min", "parameter_max", "count", 0.0, 6.0 * c.lambda1(), 25);
    CsvTable t(schema::curves);
    if (which != "lambda_mu") add_curve_rows(t, curve_table(m, Curve::MuLambda, params, grid));
    if (which != "mu_lambda") add_curve_rows(t, curve_table(m, Curve::LambdaMu, params, grid));
    write_atomic(out / "curves.csv", t.str());
    std::cout << "wrote " << t.size() << " curve rows\n";
    return Success;
}

inline nlohmann::ordered_json verdict_json(const Branch& br) {
    nlohmann::ordered_json j;
    const auto& td = br.termination_data;
    const bool has_match = br.termination == Termination::HitsOtherSemitrivial_u ||
                           br.termination == Termination::HitsOtherSemitrivial_v ||
                           br.termination == Termination::HitsTrivial;
    j["termination"] = to_string(br.termination);
    j["side"] = to_string(br.side);
    j["fixed_parameter"] = br.fixed_name();
    j["fixed_value"] = br.fixed_parameter;
    j["free_parameter"] = br.free_name();
    j["parameter"] = td.parameter;
    j["matched_eigenvalue"] = has_match ? nlohmann::ordered_json(td.expected) : nlohmann::ordered_json(nullptr);
    j["mismatch"] = has_match ? nlohmann::ordered_json(td.mismatch) : nlohmann::ordered_json(nullptr);
    j["tolerance"] = td.matching_tol;
    j["matched"] = has_match ? nlohmann::ordered_json(td.matched) : nlohmann::ordered_json(nullptr);
    j["points"] = br.points.size();
    j["detail"] = td.detail;
    return j;
}

/// branch.csv + verdict.json for the continuum emanating from the selected semitrivial base.
inline int cmd_branch(const Config& c, const fs::path& out) {
    const Grid grid = c.grid();
    const Model m = c.model();
    const Side side = detail::parse_side(c, "branch");
    const double fixed = c.real("branch", "parameter", c.lambda1() + 2.0);
    const SemitrivialBase base = semitrivial_base(m, side, fixed, grid);
    if (!base.exists) fail(ErrorKind::InvalidArgument, "no positive semitrivial solution at branch.parameter");
    const BifurcationTangent tangent = bifurcation_tangent(m, base);

    ContinuationOptions o;
    o.ds = c.real("branch", "ds", o.ds);
    o.max_steps = static_cast<int>(c.integer("branch", "max_steps", o.max_steps));
    o.window_lo = c.optional_real("branch", "window_lo");
    o.window_hi = c.optional_real("branch", "window_hi");
    o.norm_cap = c.real("branch", "norm_cap", o.norm_cap);
    o.boundary_tol = c.real("branch", "boundary_tol", o.boundary_tol);
    o.matching_tol = c.real("branch", "matching_tol", o.matching_tol);
    if (!(o.ds > 0.0) || o.max_steps < 1 || !(o.norm_cap > 0.0) || !(o.boundary_tol > 0.0) || !(o.matching_tol > 0.0))
        fail(ErrorKind::ConfigError, "branch options must be positive");
    const Branch br = continue_branch(m, tangent, o);

    CsvTable t(schema::branch);
    for (std::size_t k = 0; k < br.points.size(); ++k) {
        const auto& p = br.points[k];
        t.add({static_cast<long long>(k), p.parameter, p.state.u.sup_norm(), p.state.v.sup_norm(), p.state.u.min(),
               p.state.v.min(), p.arclength});
    }
    write_atomic(out / "branch.csv", t.str());
    write_atomic(out / "verdict.json", verdict_json(br).dump(2) + "\n");
    std::cout << to_string(br.termination) << " at " << br.free_name() << " = "
              << format_real(br.termination_data.parameter) << "\n";
    return Success;
}

/// region.csv (and curves.csv with the tables used for the theorem conditions).
inline int cmd_region(const Config& c, const fs::path& out) {
    const Grid grid = c.grid();
    const Model m = c.model();
    const double l1 = c.lambda1();
    const auto lambdas = c.linspace("region", "lambda_min", "lambda_max", "lambda_count", -1.0, 6.0 * l1, 12);
    const auto mus = c.linspace("region", "mu_min", "mu_max", "mu_count", l1 - 2.0, l1 + 10.0, 12);
    ProbeOptions po;
    po.seed = c.seed();
    po.random_seeds = static_cast<int>(c.integer("region", "random_seeds", po.random_seeds));
    po.probe_proven_empty = c.boolean("region", "probe_proven_empty", po.probe_proven_empty);
    po.threads = static_cast<unsigned>(c.integer("run", "threads", 0));
    if (po.random_seeds < 0) fail(ErrorKind::ConfigError, "region.random_seeds must be nonnegative");
    const RegionMap map = region_map(m, lambdas, mus, grid, po);

    CsvTable t(schema::region);
    for (const auto& cell : map.cells)
        t.add({cell.lambda, cell.mu, to_string(cell.verdict), cell.probe.found ? cell.probe.residual : NAN});
    write_atomic(out / "region.csv", t.str());
    CsvTable ct(schema::curves);
    add_curve_rows(ct, map.mu_lambda);
    add_curve_rows(ct, map.lambda_mu);
    write_atomic(out / "curves.csv", ct.str());
    std::cout << "wrote " << t.size() << " cells\n";
    return Success;
}

/// check.csv: one row per violated hypothesis. Exit 1 when anything is violated.
inline int cmd_check(const Config& c, const fs::path& out) {
    const Grid grid = c.grid();
    const Model m = c.model();
    const double umax = c.real("check", "u_max", 10.0), vmax = c.real("check", "v_max", 10.0);
    const long long samples = c.integer("check", "samples", 41);
    if (!(umax > 0.0 && vmax > 0.0) || samples < 2) fail(ErrorKind::ConfigError, "check ranges must be positive");
    const auto v = hypothesis_check(m, umax, vmax, static_cast<int>(samples), grid.length());
    CsvTable t(schema::check);
    for (const auto& x : v) t.add({x.hypothesis, x.condition, x.u, x.v, x.x, x.value});
    write_atomic(out / "check.csv", t.str());
    std::cout << (v.empty() ? "all hypotheses hold" : std::to_string(v.size()) + " violation(s)") << "\n";
    return v.empty() ? Success : SolverFailure;
}

/// Runs one command; maps ConfigError to exit 2 and every other failure to exit 1.
inline int dispatch(const std::string& command, const Config& c, const fs::path& out) {
    try {
        if (command == "eig") return cmd_eig(c, out);
        if (command == "semitrivial") return cmd_semitrivial(c, out);
        if (command == "curves") return cmd_curves(c, out);
        if (command == "branch") return cmd_branch(c, out);
        if (command == "region") return cmd_region(c, out);
        if (command == "check") return cmd_check(c, out);
        std::cerr << "unknown command '" << command << "'\n";
        return ConfigFailure;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.kind() == ErrorKind::ConfigError ? ConfigFailure : SolverFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return SolverFailure;
    }
}

} // namespace coexist::cli
