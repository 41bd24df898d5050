#include "fairmo/bounds.hpp"
#include "fairmo/envs.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace fairmo;
using fairmo::testing::random_momdp;
using fairmo::testing::source_path;

namespace {

const GgfWeights kGeo2 = make_weights("geo2", 2);

void expect_report_invariants(const BoundReport& r) {
    EXPECT_GE(r.bound_value, 0.0);
    EXPECT_EQ(r.holds, r.ggf_gain_gamma >= r.ggf_gain_avg - r.bound_value - kBoundSlack);
    EXPECT_LE(r.ggf_gain_gamma, r.ggf_gain_avg + 1e-8);
    EXPECT_NEAR(r.gap, r.ggf_gain_avg - r.ggf_gain_gamma, 1e-15);
    EXPECT_GT(r.gamma, r.gamma_threshold);
}

} // namespace

TEST(Rho, Formula) {
    EXPECT_NEAR(rho(0.9, 0.5), 10.0 / 17.0, 1e-15);
    for (double g : {0.1, 0.5, 0.9, 0.999}) EXPECT_EQ(rho(g, 0.0), 0.0);
    for (double g : {0.6, 0.8, 0.95})
        for (double s : {0.1, 1.0, 2.0}) EXPECT_NEAR(rho(g, s), s / (g - (1.0 - g) * s), 1e-15);
}

TEST(RewardBound, VertexMaximum) {
    const Momdp m = one_state_two_action();
    EXPECT_DOUBLE_EQ(reward_bound(m), 1.0);
    Momdp n = one_state_two_action();
    n.rewards[0](0, 1) = -3.0;
    EXPECT_DOUBLE_EQ(reward_bound(n), 4.0);
}

TEST(RewardBound, NoPolicyExceedsIt) {
    Rng rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        const Momdp m = random_momdp(rng, 1 + rng.next_index(5), 1 + rng.next_index(3), 1 + rng.next_index(3), 0.9);
        const double rbar = reward_bound(m);
        double best_det = 0.0;
        for_each_deterministic_policy(m.num_states, m.num_actions, [&](const StochasticPolicy& pi) {
            const Matrix r = induce(m, pi).R;
            for (std::size_t s = 0; s < m.num_states; ++s) {
                double l1 = 0.0;
                for (double x : r.row(s)) l1 += std::abs(x);
                best_det = std::max(best_det, l1);
            }
        });
        ASSERT_NEAR(rbar, best_det, 1e-12);
        for (int k = 0; k < 20; ++k) {
            const Matrix r = induce(m, fairmo::testing::random_policy(rng, m.num_states, m.num_actions)).R;
            for (std::size_t s = 0; s < m.num_states; ++s) {
                double l1 = 0.0;
                for (double x : r.row(s)) l1 += std::abs(x);
                ASSERT_LE(l1, rbar + 1e-12);
            }
        }
    }
}

TEST(GainBound, OneStateIsTight) {
    const BoundReport r = gain_bound_report(one_state_two_action(), kGeo2, 0.9);
    EXPECT_EQ(r.sigma_H_gamma, 0.0);
    EXPECT_EQ(r.sigma_H_avg, 0.0);
    EXPECT_EQ(r.bound_value, 0.0);
    EXPECT_NEAR(r.gap, 0.0, 1e-9);
    EXPECT_TRUE(r.holds);
    EXPECT_EQ(r.R_bar_method, "exact-vertex");
}

TEST(GainBound, PeriodicInstance) {
    const Momdp m = load_instance(source_path("instances/periodic2.json"));
    const BoundReport r = gain_bound_report(m, kGeo2, 0.9);
    EXPECT_NEAR(r.sigma_H_gamma, 0.5, 1e-9);
    EXPECT_NEAR(r.rho_gamma, 10.0 / 17.0, 1e-8);
    EXPECT_NEAR(r.rho_avg, 10.0 / 17.0, 1e-8);
    EXPECT_NEAR(r.gamma_threshold, 1.0 / 3.0, 1e-9);
    EXPECT_TRUE(r.holds);
    expect_report_invariants(r);
}

TEST(GainBound, BelowThresholdThrows) {
    const Momdp m = load_instance(source_path("instances/periodic2.json"));
    try {
        gain_bound_report(m, kGeo2, 0.3);
        FAIL();
    } catch (const GammaBelowThreshold& e) {
        EXPECT_NEAR(e.threshold(), 1.0 / 3.0, 1e-9);
    }
}

TEST(GainBound, HoldsOnRandomInstances) {
    Rng rng(2);
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t D = 1 + rng.next_index(3);
        const Momdp m = random_momdp(rng, 1 + rng.next_index(8), 1 + rng.next_index(3), D, 0.9);
        const GgfWeights w = make_weights("geo2", D);
        for (double gamma : {0.9, 0.99}) {
            try {
                const BoundReport r = gain_bound_report(m, w, gamma);
                ASSERT_TRUE(r.holds) << "trial " << trial << " gamma " << gamma;
                expect_report_invariants(r);
                ++checked;
            } catch (const GammaBelowThreshold&) {
            }
        }
    }
    EXPECT_GT(checked, 150);
}

TEST(ScalarGainBound, Examples) {
    Momdp single(1, 2, 1, 0.9);
    single.p(0, 0, 0) = single.p(1, 0, 0) = 1.0;
    single.rewards[0](0, 0) = 0.3;
    single.rewards[1](0, 0) = 0.8;
    const BoundReport a = scalar_gain_bound_report(single, 0.9);
    EXPECT_EQ(a.bound_value, 0.0);
    EXPECT_TRUE(a.holds);

    const BoundReport b = scalar_gain_bound_report(periodic_chain({{1.0}, {0.0}}), 0.9);
    EXPECT_NEAR(b.sigma_H_gamma, 0.5, 1e-9);
    EXPECT_NEAR(b.gamma_threshold, 1.0 / 3.0, 1e-9);
    EXPECT_THROW(scalar_gain_bound_report(one_state_two_action(), 0.9), DimensionMismatch);
}

TEST(ScalarGainBound, HoldsOnRandomInstances) {
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const Momdp m = random_momdp(rng, 1 + rng.next_index(8), 1 + rng.next_index(3), 1, 0.9);
        const BoundReport r = scalar_gain_bound_report(m, 0.99);
        ASSERT_TRUE(r.holds) << "trial " << trial;
        expect_report_invariants(r);
    }
}

TEST(GammaSweep, BoundShrinksTowardZero) {
    const Momdp m = load_instance(source_path("instances/periodic2.json"));
    const std::vector<double> gammas{0.9, 0.99, 0.999};
    const auto sweep = gamma_sweep(m, kGeo2, gammas);
    ASSERT_EQ(sweep.size(), 3u);
    for (std::size_t k = 0; k < 3; ++k) {
        ASSERT_TRUE(sweep[k].report) << sweep[k].error;
        EXPECT_DOUBLE_EQ(sweep[k].gamma, gammas[k]);
        EXPECT_LE(sweep[k].report->gap, sweep[k].report->bound_value + kBoundSlack);
    }
    EXPECT_GT(sweep[0].report->bound_value, sweep[1].report->bound_value);
    EXPECT_GT(sweep[1].report->bound_value, sweep[2].report->bound_value);
}

TEST(GammaSweep, ReportsBelowThresholdPerEntry) {
    const Momdp m = load_instance(source_path("instances/garnet.json"));
    const std::vector<double> gammas{0.5, 0.9};
    const auto sweep = gamma_sweep(m, kGeo2, gammas);
    EXPECT_FALSE(sweep[0].report);
    EXPECT_NE(sweep[0].error.find("GammaBelowThreshold"), std::string::npos);
    EXPECT_GT(sweep[0].threshold, 0.5);
    ASSERT_TRUE(sweep[1].report);
    EXPECT_TRUE(sweep[1].report->holds);
}

TEST(GammaSweep, NearOneOnShippedInstances) {
    for (const char* name : {"one_state", "periodic2", "garnet"}) {
        const Momdp m = load_instance(source_path(std::string("instances/") + name + ".json"));
        const std::vector<double> gammas{0.999999};
        const GgfWeights w = make_weights("geo2", m.num_objectives);
        const auto sweep = gamma_sweep(m, w, gammas);
        ASSERT_TRUE(sweep[0].report) << name << ": " << sweep[0].error;
        EXPECT_LT(sweep[0].report->bound_value, 1e-3 * sweep[0].report->R_bar) << name;
        EXPECT_TRUE(sweep[0].report->holds) << name;
    }
}

TEST(GainBound, Deterministic) {
    const Momdp m = load_instance(source_path("instances/garnet.json"));
    const BoundReport a = gain_bound_report(m, kGeo2, 0.95), b = gain_bound_report(m, kGeo2, 0.95);
    EXPECT_EQ(a.bound_value, b.bound_value);
    EXPECT_EQ(a.ggf_gain_gamma, b.ggf_gain_gamma);
}
