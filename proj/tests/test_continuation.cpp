#include <gtest/gtest.h>

#include <cmath>

#include "coexist/continuation.hpp"
#include "coexist/curves.hpp"

using namespace coexist;

namespace {

const double pi2 = M_PI * M_PI;

Model ap2() { return model_ap2(0.5, 1.0, 1.0, constant_sensitivity(), [](double z) { return z; }); }

void check_invariants(const Model& m, const Branch& br) {
    ASSERT_GE(br.points.size(), 3u);
    for (std::size_t k = 1; k < br.points.size(); ++k)
        EXPECT_GT(br.points[k].arclength, br.points[k - 1].arclength) << k;
    for (std::size_t k = 1; k + 1 < br.points.size(); ++k) {
        const BranchPoint& p = br.points[k];
        EXPECT_TRUE(p.state.coexistence()) << k;
        const double lambda = br.lambda_at(p), mu = br.mu_at(p);
        EXPECT_LT(scaled_residual(m, lambda, mu, p.state), 1e-7) << k;
        const BoundReport b = apriori_bounds(m, lambda, mu);
        if (b.valid) {
            EXPECT_LE(p.state.u.max(), b.u_bound + 1e-6) << k;
            EXPECT_LE(p.state.v.max(), b.v_bound + 1e-6) << k;
        }
    }
}

} // namespace

TEST(Continuation, ChemotaxisEndsOnPreySemitrivial) {
    const Grid g = make_grid(199, 1.0);
    const Model m = ap2();
    const double mu = pi2 + 2.0;
    const BifurcationTangent t = bifurcation_tangent(m, semitrivial_base(m, Side::OnV, mu, g), {1e-6, 1e-6, false});
    const Branch br = continue_branch(m, t);
    ASSERT_EQ(br.termination, Termination::HitsOtherSemitrivial_u) << br.termination_data.detail;
    const double lambda_star = br.termination_data.parameter;
    EXPECT_GT(lambda_star, t.threshold);
    EXPECT_TRUE(br.termination_data.matched);
    // Independent recomputation of mu_{lambda*} on the u-semitrivial branch.
    EXPECT_LT(std::abs(mu - mu_lambda(m, lambda_star, g)), 1e-2);
    EXPECT_LT(br.points.back().state.v.sup_norm(), 1e-6 + 1e-3);
    check_invariants(m, br);
}

TEST(Continuation, PreyPredatorIsUnbounded) {
    const Grid g = make_grid(199, 1.0);
    const Model m = model_ap1_sample();
    const BifurcationTangent t =
        bifurcation_tangent(m, semitrivial_base(m, Side::OnV, pi2 + 2.0, g), {1e-6, 1e-6, false});
    ContinuationOptions o;
    o.window_lo = t.threshold - 1.0;
    o.window_hi = t.threshold + 30.0;
    const Branch br = continue_branch(m, t, o);
    EXPECT_EQ(br.termination, Termination::UnboundedWindow) << br.termination_data.detail;
    // Toward large lambda: either the window edge or the norm cap ends the run.
    const BranchPoint& last = br.points.back();
    EXPECT_TRUE(last.parameter > *o.window_hi || last.state.pack().cwiseAbs().maxCoeff() > o.norm_cap);
    EXPECT_GT(last.parameter, t.threshold);
    check_invariants(m, br);
}

TEST(Continuation, StepBudgetExhausted) {
    const Grid g = make_grid(49, 1.0);
    const Model m = model_ap1_sample();
    const BifurcationTangent t =
        bifurcation_tangent(m, semitrivial_base(m, Side::OnV, pi2 + 2.0, g), {1e-6, 1e-6, false});
    ContinuationOptions o;
    o.max_steps = 3;
    const Branch br = continue_branch(m, t, o);
    EXPECT_EQ(br.termination, Termination::StepFailure);
    EXPECT_LE(br.points.size(), 4u);
}

TEST(Continuation, WindowMustContainStart) {
    const Grid g = make_grid(49, 1.0);
    const Model m = model_ap1_sample();
    const BifurcationTangent t =
        bifurcation_tangent(m, semitrivial_base(m, Side::OnV, pi2 + 2.0, g), {1e-6, 1e-6, false});
    ContinuationOptions o;
    o.window_lo = t.threshold + 1.0;
    EXPECT_THROW(continue_branch(m, t, o), Error);
}

TEST(Continuation, TerminationNames) {
    EXPECT_EQ(to_string(Termination::UnboundedWindow), "UnboundedWindow");
    EXPECT_EQ(to_string(Termination::HitsOtherSemitrivial_u), "HitsOtherSemitrivial_u");
    EXPECT_EQ(to_string(Termination::HitsOtherSemitrivial_v), "HitsOtherSemitrivial_v");
    EXPECT_EQ(to_string(Termination::HitsTrivial), "HitsTrivial");
    EXPECT_EQ(to_string(Termination::StepFailure), "StepFailure");
}
