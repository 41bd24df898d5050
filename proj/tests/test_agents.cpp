#include "fairmo/agents.hpp"
#include "fairmo/envs.hpp"
#include "fairmo/optimal.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace fairmo;
using fairmo::testing::random_momdp;

namespace {

const GgfWeights kGeo2 = make_weights("geo2", 2);

double discounted_ggf(const Momdp& m, const StochasticPolicy& pi) {
    return policy_ggf(m, kGeo2, pi, Criterion::Discounted);
}

/// Swaps the two objectives of every reward in a trajectory.
Trajectory swap_objectives(Trajectory tr) {
    for (Step& st : tr.steps) std::swap(st.reward[0], st.reward[1]);
    return tr;
}

} // namespace

TEST(GreedyAction, Examples) {
    VectorQTable q(1, 2, 2);
    q(0, 0)[0] = 4.0;
    q(0, 1)[0] = q(0, 1)[1] = 1.0;
    EXPECT_EQ(ggf_greedy_action(q, 0, Vector{0.0, 0.0}, kGeo2, 0.5), 0u);
    VectorQTable flat(1, 3, 2);
    EXPECT_EQ(ggf_greedy_action(flat, 0, Vector{1.0, 2.0}, kGeo2, 0.9), 0u);
    VectorQTable scalar(1, 3, 1);
    scalar(0, 0)[0] = 1.0, scalar(0, 1)[0] = 3.0, scalar(0, 2)[0] = 2.0;
    EXPECT_EQ(ggf_greedy_action(scalar, 0, Vector{0.0}, GgfWeights(Vector{1.0}), 0.9), 1u);
    EXPECT_THROW(ggf_greedy_action(q, 0, Vector{0.0}, kGeo2, 0.5), DimensionMismatch);
}

TEST(GreedyAction, PermutationAndScaleInvariance) {
    Rng rng(1);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t A = 2 + rng.next_index(4), D = 1 + rng.next_index(3);
        const GgfWeights w = make_weights("geo2", D);
        VectorQTable q(1, A, D);
        for (std::size_t a = 0; a < A; ++a)
            for (double& x : q(0, a)) x = rng.uniform(-5.0, 5.0);
        Vector r(D);
        for (double& x : r) x = rng.uniform(-1.0, 1.0);
        const std::size_t best = ggf_greedy_action(q, 0, r, w, 0.9);

        VectorQTable rev(1, A, D), scaled(1, A, D);
        for (std::size_t a = 0; a < A; ++a)
            for (std::size_t d = 0; d < D; ++d) {
                rev(0, A - 1 - a)[d] = q(0, a)[d];
                scaled(0, a)[d] = 3.5 * q(0, a)[d];
            }
        Vector r_scaled = r;
        for (double& x : r_scaled) x *= 3.5;
        ASSERT_EQ(ggf_greedy_action(rev, 0, r, w, 0.9), A - 1 - best);
        ASSERT_EQ(ggf_greedy_action(scaled, 0, r_scaled, w, 0.9), best);
    }
}

TEST(QUpdate, Examples) {
    VectorQTable q(2, 2, 2);
    const Step st{0, 1, Vector{0.3, 0.7}, 1};
    ggf_q_update(q, st, kGeo2, 0.9, 1.0);
    EXPECT_DOUBLE_EQ(q(0, 1)[0], 0.3);
    EXPECT_DOUBLE_EQ(q(0, 1)[1], 0.7);

    VectorQTable fixed(1, 1, 2);
    fixed(0, 0)[0] = 10.0, fixed(0, 0)[1] = 20.0;  // r + 0.5 Q = Q for r = (5, 10)
    const VectorQTable before = fixed;
    ggf_q_update(fixed, Step{0, 0, Vector{5.0, 10.0}, 0}, kGeo2, 0.5, 0.3);
    EXPECT_EQ(fixed, before);
    EXPECT_THROW(ggf_q_update(q, st, kGeo2, 0.9, 0.0), BadParams);
    EXPECT_THROW(ggf_q_update(q, st, kGeo2, 0.9, 1.5), BadParams);
}

TEST(QUpdate, SingleObjectiveMatchesTextbook) {
    Rng rng(2);
    const Momdp m = random_momdp(rng, 5, 3, 1, 0.9);
    VectorQTable q(5, 3, 1);
    std::vector<double> ref(15, 0.0);
    const GgfWeights w(Vector{1.0});
    std::size_t s = 0;
    for (int t = 0; t < 5000; ++t) {
        const std::size_t a = rng.next_index(3);
        const std::size_t next = sample_next_state(m, s, a, rng);
        const double r = m.rewards[a](s, 0);
        const double alpha = 0.1 + 0.9 * rng.next_float();
        ggf_q_update(q, Step{s, a, Vector{r}, next}, w, m.gamma, alpha);
        double best = ref[next * 3];
        for (std::size_t b = 1; b < 3; ++b) best = std::max(best, ref[next * 3 + b]);
        ref[s * 3 + a] += alpha * (r + m.gamma * best - ref[s * 3 + a]);
        for (std::size_t k = 0; k < 15; ++k) ASSERT_DOUBLE_EQ(q(k / 3, k % 3)[0], ref[k]) << "step " << t;
        s = next;
    }
}

TEST(PolicyGradient, RankWeights) {
    SoftmaxPolicy params(1, 2);
    CriticTable critic = Matrix::from_rows({{2.0, 7.0}});
    const Momdp m = one_state_two_action();
    Rng rng(3);
    const std::vector<Trajectory> batch{rollout(m, params.policy(), 5, rng)};
    const Vector w = ggf_policy_gradient_step(params, critic, batch, kGeo2, TrainConfig{});
    EXPECT_DOUBLE_EQ(w[0], 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(w[1], 1.0 / 3.0);
    EXPECT_THROW(ggf_policy_gradient_step(params, critic, std::vector<Trajectory>{}, kGeo2, TrainConfig{}), EmptyBatch);
    EXPECT_THROW(ggf_ppo_step(params, critic, std::vector<Trajectory>{}, params.logits(), kGeo2, TrainConfig{}),
                 EmptyBatch);
}

TEST(PolicyGradient, SingleObjectiveIsPlainActorCritic) {
    Rng rng(4);
    const Momdp m = random_momdp(rng, 4, 3, 1, 0.9);
    TrainConfig cfg;
    cfg.gamma = 0.8;
    cfg.lr_actor = 0.3;
    cfg.lr_critic = 0.2;
    SoftmaxPolicy params(4, 3);
    for (double& x : params.logits().data()) x = rng.uniform(-1.0, 1.0);
    CriticTable critic(4, 1);
    for (double& x : critic.data()) x = rng.uniform(0.0, 2.0);
    std::vector<Trajectory> batch;
    for (int b = 0; b < 3; ++b) batch.push_back(rollout(m, params.policy(), 7, rng));

    // Hand-written reference: return-to-go advantages, score-function gradient, then critic regression.
    Matrix theta = params.logits();
    Matrix v = critic;
    Matrix grad(4, 3);
    std::vector<std::vector<double>> returns(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const auto& steps = batch[b].steps;
        double g = critic(steps.back().next_state, 0);
        returns[b].resize(steps.size());
        for (std::size_t t = steps.size(); t-- > 0;) returns[b][t] = g = steps[t].reward[0] + cfg.gamma * g;
        for (std::size_t t = 0; t < steps.size(); ++t) {
            const Vector p = params.probabilities(steps[t].state);
            const double adv = returns[b][t] - critic(steps[t].state, 0);
            for (std::size_t a = 0; a < 3; ++a) grad(steps[t].state, a) += adv * ((a == steps[t].action) - p[a]);
        }
    }
    theta += (cfg.lr_actor / 21.0) * grad;
    for (std::size_t b = 0; b < batch.size(); ++b)
        for (std::size_t t = 0; t < batch[b].steps.size(); ++t) {
            const std::size_t s = batch[b].steps[t].state;
            v(s, 0) += cfg.lr_critic * (returns[b][t] - v(s, 0));
        }

    const Vector w = ggf_policy_gradient_step(params, critic, batch, GgfWeights(Vector{1.0}), cfg);
    EXPECT_EQ(w, Vector{1.0});
    EXPECT_LT(max_abs(params.logits() - theta), 1e-13);
    EXPECT_LT(max_abs(critic - v), 1e-13);
}

TEST(PolicyGradient, MeanWelfareMatchesGgfForOneObjective) {
    Rng rng(5);
    const Momdp m = random_momdp(rng, 3, 2, 1, 0.9);
    SoftmaxPolicy a(3, 2), b(3, 2);
    CriticTable ca(3, 1), cb(3, 1);
    const std::vector<Trajectory> batch{rollout(m, a.policy(), 10, rng), rollout(m, a.policy(), 10, rng)};
    policy_gradient_step(a, ca, batch, Welfare::mean_welfare(1), TrainConfig{});
    policy_gradient_step(b, cb, batch, Welfare::ggf_welfare(GgfWeights(Vector{1.0})), TrainConfig{});
    EXPECT_EQ(a.logits(), b.logits());
    EXPECT_EQ(ca, cb);
}

TEST(PolicyGradient, ObjectiveLabelsDoNotMatter) {
    Rng rng(6);
    const Momdp m = random_momdp(rng, 4, 3, 2, 0.9);
    SoftmaxPolicy p1(4, 3);
    for (double& x : p1.logits().data()) x = rng.uniform(-1.0, 1.0);
    SoftmaxPolicy p2 = p1;
    CriticTable c1(4, 2);
    for (double& x : c1.data()) x = rng.uniform(0.0, 3.0);
    CriticTable c2(4, 2);
    for (std::size_t s = 0; s < 4; ++s) c2(s, 0) = c1(s, 1), c2(s, 1) = c1(s, 0);
    std::vector<Trajectory> b1, b2;
    for (int k = 0; k < 3; ++k) {
        b1.push_back(rollout(m, p1.policy(), 8, rng));
        b2.push_back(swap_objectives(b1.back()));
    }
    TrainConfig cfg;
    cfg.lr_actor = 0.5;
    ggf_policy_gradient_step(p1, c1, b1, kGeo2, cfg);
    ggf_policy_gradient_step(p2, c2, b2, kGeo2, cfg);
    EXPECT_LT(max_abs(p1.logits() - p2.logits()), 1e-14);

    SoftmaxPolicy q1 = p1, q2 = p1;
    ggf_ppo_step(q1, c1, b1, q1.logits(), kGeo2, cfg);
    ggf_ppo_step(q2, c2, b2, q2.logits(), kGeo2, cfg);
    EXPECT_LT(max_abs(q1.logits() - q2.logits()), 1e-14);
}

TEST(Ppo, ClippedSurrogate) {
    const double delta = 0.2;
    const Surrogate inside = ppo_surrogate(1.0, 2.0, delta);
    EXPECT_DOUBLE_EQ(inside.value, 2.0);
    EXPECT_DOUBLE_EQ(inside.d_ratio, 2.0);
    const Surrogate high = ppo_surrogate(1.0 + 2.0 * delta, 2.0, delta);
    EXPECT_DOUBLE_EQ(high.value, (1.0 + delta) * 2.0);
    EXPECT_EQ(high.d_ratio, 0.0);
    const Surrogate low_neg = ppo_surrogate(0.5, -1.0, delta);
    EXPECT_DOUBLE_EQ(low_neg.value, -0.8);
    EXPECT_EQ(low_neg.d_ratio, 0.0);
    const Surrogate high_neg = ppo_surrogate(1.5, -1.0, delta);
    EXPECT_DOUBLE_EQ(high_neg.value, -1.5);
    EXPECT_DOUBLE_EQ(high_neg.d_ratio, -1.0);
}

TEST(Ppo, FirstEpochEqualsUnclippedGradient) {
    Rng rng(7);
    const Momdp m = random_momdp(rng, 4, 3, 2, 0.9);
    TrainConfig cfg;
    cfg.ppo_epochs = 1;
    cfg.lr_actor = 0.4;
    SoftmaxPolicy params(4, 3);
    for (double& x : params.logits().data()) x = rng.uniform(-1.0, 1.0);
    CriticTable critic(4, 2);
    for (double& x : critic.data()) x = rng.uniform(0.0, 3.0);
    std::vector<Trajectory> batch;
    for (int k = 0; k < 3; ++k) batch.push_back(rollout(m, params.policy(), 9, rng));

    const Vector w = rank_weights(kGeo2, estimate_objectives(critic, batch));
    Matrix grad(4, 3);
    std::size_t n = 0;
    for (const auto& tr : batch) {
        const auto tg = detail::gae_targets(tr, critic, cfg.gamma, cfg.lambda);
        for (std::size_t t = 0; t < tr.steps.size(); ++t, ++n) {
            const Vector p = params.probabilities(tr.steps[t].state);
            const double adv = dot(w, tg.advantage[t]);
            for (std::size_t a = 0; a < 3; ++a) grad(tr.steps[t].state, a) += adv * ((a == tr.steps[t].action) - p[a]);
        }
    }
    const Matrix expected = params.logits() + (cfg.lr_actor / static_cast<double>(n)) * grad;
    ggf_ppo_step(params, critic, batch, params.logits(), kGeo2, cfg);
    EXPECT_LT(max_abs(params.logits() - expected), 1e-14);
}

TEST(Agents, EntropyBonusPushesTowardUniform) {
    SoftmaxPolicy params(1, 2);
    params.logits()(0, 0) = 2.0;
    Matrix grad(1, 2);
    detail::add_entropy_gradient(grad, 0, params.probabilities(0), 1.0);
    EXPECT_LT(grad(0, 0), 0.0);
    EXPECT_GT(grad(0, 1), 0.0);
    Matrix none(1, 2);
    detail::add_entropy_gradient(none, 0, Vector{0.5, 0.5}, 1.0);
    EXPECT_NEAR(max_abs(none), 0.0, 1e-15);
}

TEST(Training, GgfQLearningReachesBestDeterministic) {
    const Momdp m = one_state_two_action(0.9);
    TrainConfig cfg;
    cfg.episodes = 2000;  // 2e5 steps
    const TrainResult res = train(m, parse_agent_id("ggf-ql"), cfg);
    EXPECT_EQ(res.steps, 200000u);
    const double score = discounted_ggf(m, res.policy);
    EXPECT_GE(score, 0.85 * 10.0 / 3.0);
    EXPECT_LE(score, 10.0 / 3.0 + 1e-9);
}

TEST(Training, GgfPolicyGradientRandomises) {
    const Momdp m = one_state_two_action(0.9);
    for (const char* agent : {"ggf-a2c", "ggf-ppo"})
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            TrainConfig cfg;  // 500 episodes of 100 steps
            cfg.seed = seed;
            const TrainResult res = train(m, parse_agent_id(agent), cfg);
            const double score = discounted_ggf(m, res.policy);
            EXPECT_GE(score, 4.5) << agent << " seed " << seed;
            EXPECT_LE(score, 5.0 + 1e-6) << agent << " seed " << seed;
            EXPECT_GT(score, 10.0 / 3.0);
        }
}

TEST(Training, MeanQLearningEndsAtAVertex) {
    const Momdp m = one_state_two_action(0.9);
    TrainConfig cfg;
    cfg.episodes = 2000;
    const TrainResult res = train(m, parse_agent_id("mean-ql"), cfg);
    EXPECT_LE(discounted_ggf(m, res.policy), 10.0 / 3.0 + 1e-9);
    EXPECT_TRUE(res.policy(0, 0) == 1.0 || res.policy(0, 1) == 1.0);
}

TEST(Training, BitwiseReproducible) {
    const Momdp m = species_lite(3, 3);
    for (const char* agent : {"ggf-ql", "ggf-a2c", "ggf-ppo", "mean-ql", "mean-a2c", "mean-ppo"}) {
        TrainConfig cfg;
        cfg.episodes = 20;
        cfg.horizon = 30;
        cfg.seed = 11;
        std::vector<Vector> seen;
        const TrainResult a = train(m, parse_agent_id(agent), cfg, [&](std::size_t, const Vector& r) { seen.push_back(r); });
        const TrainResult b = train(m, parse_agent_id(agent), cfg);
        EXPECT_EQ(a.policy.matrix(), b.policy.matrix()) << agent;
        EXPECT_EQ(a.episode_returns, b.episode_returns) << agent;
        EXPECT_EQ(seen, a.episode_returns) << agent;
        cfg.seed = 12;
        EXPECT_NE(train(m, parse_agent_id(agent), cfg).episode_returns, a.episode_returns) << agent;
    }
}

TEST(AgentIds, RoundTrip) {
    for (const char* s : {"ggf-ql", "ggf-a2c", "ggf-ppo", "mean-ql", "mean-a2c", "mean-ppo"})
        EXPECT_EQ(to_string(parse_agent_id(s)), s);
    EXPECT_THROW(parse_agent_id("ggf-dqn"), UnknownId);
}

TEST(Welfare, ScoresAndWeights) {
    const Welfare mean = Welfare::mean_welfare(3);
    EXPECT_DOUBLE_EQ(mean.score(Vector{1.0, 2.0, 6.0}), 3.0);
    EXPECT_EQ(mean.gradient_weights(Vector{5.0, 1.0, 2.0}), Vector(3, 1.0 / 3.0));
    const Welfare g = Welfare::ggf_welfare(kGeo2);
    EXPECT_DOUBLE_EQ(g.score(Vector{3.0, 9.0}), 5.0);
    EXPECT_THROW(g.score(Vector{1.0}), DimensionMismatch);
    EXPECT_THROW(Welfare::mean_welfare(0), DimensionMismatch);
}

TEST(Config, ScheduleAndValidation) {
    const Schedule s{1.0, 0.1, 10};
    EXPECT_DOUBLE_EQ(s.at(0), 1.0);
    EXPECT_DOUBLE_EQ(s.at(5), 0.55);
    EXPECT_DOUBLE_EQ(s.at(100), 0.1);
    EXPECT_THROW((Schedule{0.1, 1.0, 10}.validate("x")), BadParams);
    TrainConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.clip = 1.0;
    EXPECT_THROW(cfg.validate(), BadParams);
    cfg = TrainConfig{};
    cfg.gamma = 1.0;
    EXPECT_THROW(cfg.validate(), BadParams);
    cfg = TrainConfig{};
    cfg.lambda = 1.5;
    EXPECT_THROW(cfg.validate(), BadParams);
}

TEST(Config, JsonRoundTrip) {
    TrainConfig cfg;
    cfg.episodes = 123;
    cfg.entropy = 0.05;
    cfg.epsilon = {0.9, 0.01, 500};
    const TrainConfig back = train_config_from_json(to_json(cfg));
    EXPECT_EQ(back.episodes, 123u);
    EXPECT_DOUBLE_EQ(back.entropy, 0.05);
    EXPECT_DOUBLE_EQ(back.epsilon.start, 0.9);
    EXPECT_EQ(back.epsilon.steps, 500u);
    EXPECT_THROW(train_config_from_json(nlohmann::json::parse(R"({"episods": 3})")), ParseError);
    EXPECT_THROW(train_config_from_json(nlohmann::json::parse(R"({"episodes": "many"})")), ParseError);
}
