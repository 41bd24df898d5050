#pragma once

// Tabular learning agents for fair multiobjective control.
//
// Every agent optimises a welfare of the vector return. The GGF variants use
// the generalized Gini function: Q-learning picks bootstrap actions by the GGF
// of the vector target, and the policy-gradient agents (A2C and a clipped
// surrogate PPO) contract the per-objective gradients with the GGF weights
// assigned by the current rank of the estimated objective vector. The mean
// variants use fixed uniform weights 1/D and never sort.

#include "fairmo/errors.hpp"
#include "fairmo/ggf.hpp"
#include "fairmo/momdp.hpp"
#include "fairmo/numkit.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fairmo {

// ---------------------------------------------------------------------------
// Welfare used by an agent

enum class WelfareKind { Ggf, Mean };

/**
 * Scores vectors and produces the weights that contract per-objective
 * gradients. For GGF the gradient weight of objective d is the GGF weight at
 * d's ascending rank in the reference vector (lowest index first on ties).
 */
class Welfare {
public:
    static Welfare ggf_welfare(GgfWeights w) { return Welfare(WelfareKind::Ggf, std::move(w)); }
    static Welfare mean_welfare(std::size_t dims) {
        if (dims == 0) throw DimensionMismatch("welfare needs at least one objective");
        return Welfare(WelfareKind::Mean, GgfWeights(Vector{1.0}), dims);
    }

    WelfareKind kind() const noexcept { return kind_; }
    std::size_t dims() const noexcept { return dims_; }
    const GgfWeights& weights() const noexcept { return w_; }

    double score(std::span<const double> v) const {
        check(v);
        if (kind_ == WelfareKind::Ggf) return ggf(w_, v);
        double total = 0.0;
        for (double x : v) total += x;
        return total / static_cast<double>(dims_);
    }

    Vector gradient_weights(std::span<const double> reference) const {
        check(reference);
        if (kind_ == WelfareKind::Ggf) return rank_weights(w_, reference);
        return Vector(dims_, 1.0 / static_cast<double>(dims_));
    }

private:
    Welfare(WelfareKind k, GgfWeights w, std::size_t dims = 0)
        : kind_(k), w_(std::move(w)), dims_(k == WelfareKind::Ggf ? w_.size() : dims) {}

    void check(std::span<const double> v) const {
        if (v.size() != dims_)
            throw DimensionMismatch("vector has " + std::to_string(v.size()) + " components, welfare expects " +
                                    std::to_string(dims_));
    }

    WelfareKind kind_;
    GgfWeights w_;
    std::size_t dims_;
};

// ---------------------------------------------------------------------------
// Configuration

/// Linear decay from `start` to `end` over `steps` calls, constant afterwards.
struct Schedule {
    double start = 1.0;
    double end = 1.0;
    std::size_t steps = 1;

    double at(std::size_t t) const {
        if (t >= steps) return end;
        return start + (end - start) * static_cast<double>(t) / static_cast<double>(steps);
    }
    void validate(std::string_view what) const {
        if (!(start > 0.0 && end > 0.0) || end > start || steps == 0)
            throw BadParams(std::string(what) + " schedule must be positive and non-increasing");
    }
};

struct TrainConfig {
    std::size_t episodes = 500;
    std::size_t horizon = 100;
    double gamma = 0.9;
    double lr_actor = 0.1;
    double lr_critic = 0.1;
    Schedule q_alpha{0.5, 0.05, 100000};
    Schedule epsilon{1.0, 0.05, 100000};
    double clip = 0.2;
    double lambda = 0.95;
    double entropy = 0.0;  ///< weight of the policy-entropy bonus in the actor objective
    std::size_t batch_episodes = 4;
    std::size_t ppo_epochs = 4;
    std::uint64_t seed = 0;
    std::string weights = "geo2";

    void validate() const {
        if (episodes == 0 || horizon == 0) throw BadParams("episodes and horizon must be positive");
        if (!(gamma >= 0.0 && gamma < 1.0)) throw BadParams("gamma must be in [0, 1)");
        if (!(clip > 0.0 && clip < 1.0)) throw BadParams("clip must be in (0, 1)");
        if (!(lambda >= 0.0 && lambda <= 1.0)) throw BadParams("lambda must be in [0, 1]");
        if (!(lr_actor > 0.0 && lr_critic > 0.0)) throw BadParams("learning rates must be positive");
        if (!(entropy >= 0.0)) throw BadParams("entropy weight must be non-negative");
        if (batch_episodes == 0 || ppo_epochs == 0) throw BadParams("batch_episodes and ppo_epochs must be positive");
        q_alpha.validate("q_alpha");
        if (q_alpha.start > 1.0) throw BadParams("q_alpha must be in (0, 1]");
        epsilon.validate("epsilon");
        if (epsilon.start > 1.0) throw BadParams("epsilon must be in (0, 1]");
    }
};

inline nlohmann::json to_json(const Schedule& s) { return {{"start", s.start}, {"end", s.end}, {"steps", s.steps}}; }

inline nlohmann::json to_json(const TrainConfig& c) {
    return {{"episodes", c.episodes},   {"horizon", c.horizon},       {"gamma", c.gamma},
            {"lr_actor", c.lr_actor},   {"lr_critic", c.lr_critic},   {"q_alpha", to_json(c.q_alpha)},
            {"epsilon", to_json(c.epsilon)}, {"clip", c.clip},        {"lambda", c.lambda},
            {"entropy", c.entropy},             {"batch_episodes", c.batch_episodes}, {"ppo_epochs", c.ppo_epochs}, {"seed", c.seed},
            {"weights", c.weights}};
}

/// Reads the fields present in `j` on top of `base`; unknown keys are errors.
inline TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {}) {
    if (!j.is_object()) throw ParseError("train config must be a JSON object");
    auto schedule = [](const nlohmann::json& v, Schedule s, const std::string& key) {
        if (!v.is_object()) throw ParseError("'" + key + "' must be an object with start, end, steps");
        for (const auto& [k, x] : v.items()) {
            if (k == "start") s.start = x.get<double>();
            else if (k == "end") s.end = x.get<double>();
            else if (k == "steps") s.steps = x.get<std::size_t>();
            else throw ParseError("unknown key '" + key + "." + k + "'");
        }
        return s;
    };
    try {
        for (const auto& [k, v] : j.items()) {
            if (k == "episodes") base.episodes = v.get<std::size_t>();
            else if (k == "horizon") base.horizon = v.get<std::size_t>();
            else if (k == "gamma") base.gamma = v.get<double>();
            else if (k == "lr_actor") base.lr_actor = v.get<double>();
            else if (k == "lr_critic") base.lr_critic = v.get<double>();
            else if (k == "q_alpha") base.q_alpha = schedule(v, base.q_alpha, k);
            else if (k == "epsilon") base.epsilon = schedule(v, base.epsilon, k);
            else if (k == "clip") base.clip = v.get<double>();
            else if (k == "lambda") base.lambda = v.get<double>();
            else if (k == "entropy") base.entropy = v.get<double>();
            else if (k == "batch_episodes") base.batch_episodes = v.get<std::size_t>();
            else if (k == "ppo_epochs") base.ppo_epochs = v.get<std::size_t>();
            else if (k == "seed") base.seed = v.get<std::uint64_t>();
            else if (k == "weights") base.weights = v.get<std::string>();
            else throw ParseError("unknown train config key '" + k + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("train config: ") + e.what());
    }
    base.validate();
    return base;
}

// ---------------------------------------------------------------------------
// Tables

/// Q(s, a) in R^D, stored contiguously.
class VectorQTable {
public:
    VectorQTable(std::size_t states, std::size_t actions, std::size_t dims)
        : S_(states), A_(actions), D_(dims), q_(states * actions * dims, 0.0) {}

    std::size_t num_states() const noexcept { return S_; }
    std::size_t num_actions() const noexcept { return A_; }
    std::size_t dims() const noexcept { return D_; }

    std::span<double> operator()(std::size_t s, std::size_t a) { return {q_.data() + (s * A_ + a) * D_, D_}; }
    std::span<const double> operator()(std::size_t s, std::size_t a) const {
        return {q_.data() + (s * A_ + a) * D_, D_};
    }
    bool operator==(const VectorQTable&) const = default;

private:
    std::size_t S_, A_, D_;
    Vector q_;
};

/// Softmax policy with one logit per (s, a), temperature 1.
class SoftmaxPolicy {
public:
    SoftmaxPolicy(std::size_t states, std::size_t actions) : theta_(states, actions) {}

    std::size_t num_states() const noexcept { return theta_.rows(); }
    std::size_t num_actions() const noexcept { return theta_.cols(); }
    Matrix& logits() noexcept { return theta_; }
    const Matrix& logits() const noexcept { return theta_; }

    Vector probabilities(std::size_t s) const {
        const auto row = theta_.row(s);
        const double top = *std::max_element(row.begin(), row.end());
        Vector p(row.size());
        double total = 0.0;
        for (std::size_t a = 0; a < row.size(); ++a) total += (p[a] = std::exp(row[a] - top));
        for (double& x : p) x /= total;
        return p;
    }

    StochasticPolicy policy() const {
        Matrix pi(num_states(), num_actions());
        for (std::size_t s = 0; s < num_states(); ++s) {
            const Vector p = probabilities(s);
            std::copy(p.begin(), p.end(), pi.row(s).begin());
        }
        return StochasticPolicy(std::move(pi));
    }

private:
    Matrix theta_;
};

/// Tabular vector-valued state-value estimate V(s) in R^D.
using CriticTable = Matrix;

// ---------------------------------------------------------------------------
// Q-learning

/// argmax_a welfare(r + gamma Q[s][a]); the lowest index wins ties.
inline std::size_t greedy_action(const VectorQTable& q, std::size_t s, std::span<const double> r,
                                 const Welfare& welfare, double gamma) {
    if (r.size() != q.dims()) throw DimensionMismatch("reward vector does not match Q dimension");
    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    Vector target(q.dims());
    for (std::size_t a = 0; a < q.num_actions(); ++a) {
        const auto qa = q(s, a);
        for (std::size_t d = 0; d < q.dims(); ++d) target[d] = r[d] + gamma * qa[d];
        const double v = welfare.score(target);
        if (v > best_score) best_score = v, best = a;
    }
    return best;
}

inline std::size_t ggf_greedy_action(const VectorQTable& q, std::size_t s, std::span<const double> r,
                                     const GgfWeights& w, double gamma) {
    return greedy_action(q, s, r, Welfare::ggf_welfare(w), gamma);
}

/**
 * Q[s][a] += alpha (r + gamma Q[s'][a*] - Q[s][a]) componentwise, with a*
 * chosen at s' by the welfare of r + gamma Q[s'][.] (the sampled r enters the
 * argmax). Returns a*.
 */
inline std::size_t q_update(VectorQTable& q, const Step& step, const Welfare& welfare, double gamma, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw BadParams("alpha must be in (0, 1]");
    const std::size_t next_action = greedy_action(q, step.next_state, step.reward, welfare, gamma);
    const auto target = q(step.next_state, next_action);
    Vector bootstrap(target.begin(), target.end());
    auto qsa = q(step.state, step.action);
    for (std::size_t d = 0; d < q.dims(); ++d) qsa[d] += alpha * (step.reward[d] + gamma * bootstrap[d] - qsa[d]);
    return next_action;
}

inline std::size_t ggf_q_update(VectorQTable& q, const Step& step, const GgfWeights& w, double gamma, double alpha) {
    return q_update(q, step, Welfare::ggf_welfare(w), gamma, alpha);
}

/// Deterministic policy that is greedy in welfare(Q[s][.]).
inline StochasticPolicy greedy_policy(const VectorQTable& q, const Welfare& welfare) {
    std::vector<std::size_t> actions(q.num_states());
    const Vector zero(q.dims(), 0.0);
    for (std::size_t s = 0; s < q.num_states(); ++s) actions[s] = greedy_action(q, s, zero, welfare, 1.0);
    return StochasticPolicy::deterministic(actions, q.num_actions());
}

// ---------------------------------------------------------------------------
// Policy gradient

/// Value and derivative in the ratio of min(rho A, clip(rho, 1 - delta, 1 + delta) A).
struct Surrogate {
    double value = 0.0;
    double d_ratio = 0.0;
};

inline Surrogate ppo_surrogate(double ratio, double advantage, double delta) {
    const double clipped = std::clamp(ratio, 1.0 - delta, 1.0 + delta) * advantage;
    const double plain = ratio * advantage;
    if (plain <= clipped) return {plain, advantage};
    return {clipped, 0.0};
}

/// J estimate: critic value averaged over the batch's initial states.
inline Vector estimate_objectives(const CriticTable& critic, std::span<const Trajectory> batch) {
    if (batch.empty()) throw EmptyBatch("policy update needs at least one trajectory");
    Vector j(critic.cols(), 0.0);
    for (const auto& tr : batch)
        for (std::size_t d = 0; d < j.size(); ++d) j[d] += critic(tr.initial_state, d);
    for (double& x : j) x /= static_cast<double>(batch.size());
    return j;
}

namespace detail {

/// Per-step vector advantages and critic targets of one trajectory.
struct StepTargets {
    std::vector<Vector> advantage;
    std::vector<Vector> target;
};

/// Discounted return-to-go bootstrapped with V at the truncation state.
inline StepTargets return_targets(const Trajectory& tr, const CriticTable& v, double gamma) {
    const std::size_t T = tr.steps.size(), D = v.cols();
    StepTargets out{std::vector<Vector>(T, Vector(D)), std::vector<Vector>(T, Vector(D))};
    Vector g(D);
    if (T > 0)
        for (std::size_t d = 0; d < D; ++d) g[d] = v(tr.steps.back().next_state, d);
    for (std::size_t t = T; t-- > 0;) {
        const Step& st = tr.steps[t];
        for (std::size_t d = 0; d < D; ++d) {
            g[d] = st.reward[d] + gamma * g[d];
            out.target[t][d] = g[d];
            out.advantage[t][d] = g[d] - v(st.state, d);
        }
    }
    return out;
}

/// Generalized advantage estimates with lambda-return critic targets.
inline StepTargets gae_targets(const Trajectory& tr, const CriticTable& v, double gamma, double lambda) {
    const std::size_t T = tr.steps.size(), D = v.cols();
    StepTargets out{std::vector<Vector>(T, Vector(D)), std::vector<Vector>(T, Vector(D))};
    Vector acc(D, 0.0);
    for (std::size_t t = T; t-- > 0;) {
        const Step& st = tr.steps[t];
        for (std::size_t d = 0; d < D; ++d) {
            const double td = st.reward[d] + gamma * v(st.next_state, d) - v(st.state, d);
            acc[d] = td + gamma * lambda * acc[d];
            out.advantage[t][d] = acc[d];
            out.target[t][d] = acc[d] + v(st.state, d);
        }
    }
    return out;
}

/// Adds beta * d H(pi(s)) / d theta_s, H the Shannon entropy of the softmax.
inline void add_entropy_gradient(Matrix& grad, std::size_t s, std::span<const double> p, double beta) {
    if (beta == 0.0) return;
    double h = 0.0;
    for (double x : p)
        if (x > 0.0) h -= x * std::log(x);
    for (std::size_t a = 0; a < p.size(); ++a)
        if (p[a] > 0.0) grad(s, a) -= beta * p[a] * (std::log(p[a]) + h);
}

inline double contract(std::span<const double> weights, std::span<const double> adv) { return dot(weights, adv); }

inline void critic_regression(CriticTable& critic, std::span<const Trajectory> batch,
                              const std::vector<StepTargets>& targets, double lr) {
    for (std::size_t b = 0; b < batch.size(); ++b)
        for (std::size_t t = 0; t < batch[b].steps.size(); ++t) {
            const std::size_t s = batch[b].steps[t].state;
            for (std::size_t d = 0; d < critic.cols(); ++d)
                critic(s, d) += lr * (targets[b].target[t][d] - critic(s, d));
        }
}

inline std::size_t total_steps(std::span<const Trajectory> batch) {
    std::size_t n = 0;
    for (const auto& tr : batch) n += tr.steps.size();
    if (n == 0) throw EmptyBatch("batch contains no transitions");
    return n;
}

} // namespace detail

/**
 * One advantage actor-critic update. The objective estimate J is frozen at
 * the start of the batch; the actor ascends
 *   (1/N) sum_t (w_sigma . A_t) grad log pi(a_t | s_t)
 * with A_t the per-objective return-to-go advantages, and the critic then
 * regresses each component of V(s_t) on the return-to-go.
 * Returns the gradient weights used.
 */
inline Vector policy_gradient_step(SoftmaxPolicy& params, CriticTable& critic, std::span<const Trajectory> batch,
                                   const Welfare& welfare, const TrainConfig& cfg) {
    const Vector weights = welfare.gradient_weights(estimate_objectives(critic, batch));
    const double scale = cfg.lr_actor / static_cast<double>(detail::total_steps(batch));
    std::vector<detail::StepTargets> targets;
    for (const auto& tr : batch) targets.push_back(detail::return_targets(tr, critic, cfg.gamma));

    Matrix grad(params.num_states(), params.num_actions());
    for (std::size_t b = 0; b < batch.size(); ++b)
        for (std::size_t t = 0; t < batch[b].steps.size(); ++t) {
            const Step& st = batch[b].steps[t];
            const double adv = detail::contract(weights, targets[b].advantage[t]);
            const Vector p = params.probabilities(st.state);
            for (std::size_t a = 0; a < p.size(); ++a) grad(st.state, a) += adv * ((a == st.action) - p[a]);
            detail::add_entropy_gradient(grad, st.state, p, cfg.entropy);
        }
    params.logits() += scale * grad;
    detail::critic_regression(critic, batch, targets, cfg.lr_critic);
    return weights;
}

inline Vector ggf_policy_gradient_step(SoftmaxPolicy& params, CriticTable& critic, std::span<const Trajectory> batch,
                                       const GgfWeights& w, const TrainConfig& cfg) {
    return policy_gradient_step(params, critic, batch, Welfare::ggf_welfare(w), cfg);
}

/**
 * One clipped-surrogate update over `cfg.ppo_epochs` epochs. Advantages are
 * GAE(lambda) per objective, contracted with the rank weights of the frozen J
 * estimate, and the resulting scalar is clipped once. `behavior_logits` are
 * the logits that generated the batch. Returns the gradient weights used.
 */
inline Vector ppo_step(SoftmaxPolicy& params, CriticTable& critic, std::span<const Trajectory> batch,
                       const Matrix& behavior_logits, const Welfare& welfare, const TrainConfig& cfg) {
    const Vector weights = welfare.gradient_weights(estimate_objectives(critic, batch));
    const double scale = cfg.lr_actor / static_cast<double>(detail::total_steps(batch));
    std::vector<detail::StepTargets> targets;
    for (const auto& tr : batch) targets.push_back(detail::gae_targets(tr, critic, cfg.gamma, cfg.lambda));

    SoftmaxPolicy behavior(params.num_states(), params.num_actions());
    behavior.logits() = behavior_logits;
    std::vector<std::vector<double>> old_prob(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b)
        for (const Step& st : batch[b].steps) old_prob[b].push_back(behavior.probabilities(st.state)[st.action]);

    for (std::size_t epoch = 0; epoch < cfg.ppo_epochs; ++epoch) {
        Matrix grad(params.num_states(), params.num_actions());
        for (std::size_t b = 0; b < batch.size(); ++b)
            for (std::size_t t = 0; t < batch[b].steps.size(); ++t) {
                const Step& st = batch[b].steps[t];
                const Vector p = params.probabilities(st.state);
                const double ratio = p[st.action] / old_prob[b][t];
                const Surrogate sur =
                    ppo_surrogate(ratio, detail::contract(weights, targets[b].advantage[t]), cfg.clip);
                detail::add_entropy_gradient(grad, st.state, p, cfg.entropy);
                if (sur.d_ratio == 0.0) continue;
                // d ratio / d theta = ratio * grad log pi
                for (std::size_t a = 0; a < p.size(); ++a)
                    grad(st.state, a) += sur.d_ratio * ratio * ((a == st.action) - p[a]);
            }
        params.logits() += scale * grad;
    }
    detail::critic_regression(critic, batch, targets, cfg.lr_critic);
    return weights;
}

inline Vector ggf_ppo_step(SoftmaxPolicy& params, CriticTable& critic, std::span<const Trajectory> batch,
                           const Matrix& behavior_logits, const GgfWeights& w, const TrainConfig& cfg) {
    return ppo_step(params, critic, batch, behavior_logits, Welfare::ggf_welfare(w), cfg);
}

// ---------------------------------------------------------------------------
// Agent ids and training loops

enum class Algorithm { QLearning, A2C, PPO };

struct AgentId {
    Algorithm algorithm = Algorithm::A2C;
    WelfareKind welfare = WelfareKind::Ggf;
    bool operator==(const AgentId&) const = default;
};

inline std::string to_string(const AgentId& id) {
    std::string out = id.welfare == WelfareKind::Ggf ? "ggf-" : "mean-";
    switch (id.algorithm) {
        case Algorithm::QLearning: return out + "ql";
        case Algorithm::A2C: return out + "a2c";
        case Algorithm::PPO: return out + "ppo";
    }
    return out;
}

/// "ggf-ql", "ggf-a2c", "ggf-ppo", "mean-ql", "mean-a2c" or "mean-ppo".
inline AgentId parse_agent_id(std::string_view s) {
    for (auto w : {WelfareKind::Ggf, WelfareKind::Mean})
        for (auto a : {Algorithm::QLearning, Algorithm::A2C, Algorithm::PPO})
            if (to_string(AgentId{a, w}) == s) return {a, w};
    throw UnknownId("unknown agent '" + std::string(s) +
                    "'; expected ggf-ql, ggf-a2c, ggf-ppo, mean-ql, mean-a2c or mean-ppo");
}

inline Welfare make_welfare(WelfareKind kind, const std::string& weights_id, std::size_t dims) {
    if (kind == WelfareKind::Mean) return Welfare::mean_welfare(dims);
    return Welfare::ggf_welfare(make_weights(weights_id, dims));
}

struct TrainResult {
    StochasticPolicy policy;
    std::vector<Vector> episode_returns;  ///< undiscounted sum of rewards / horizon, one per episode
    std::size_t steps = 0;
};

/// Called after every episode with its index and per-step average return.
using EpisodeCallback = std::function<void(std::size_t, const Vector&)>;

namespace detail {

inline Vector average_return(const Trajectory& tr, std::size_t dims) {
    Vector r(dims, 0.0);
    for (const Step& st : tr.steps)
        for (std::size_t d = 0; d < dims; ++d) r[d] += st.reward[d];
    for (double& x : r) x /= static_cast<double>(tr.steps.size());
    return r;
}

inline TrainResult train_q_learning(const Momdp& m, const Welfare& welfare, const TrainConfig& cfg, Rng& rng,
                                    const EpisodeCallback& on_episode) {
    VectorQTable q(m.num_states, m.num_actions, m.num_objectives);
    const Vector zero(m.num_objectives, 0.0);
    TrainResult out{StochasticPolicy::uniform(m.num_states, m.num_actions), {}, 0};
    for (std::size_t ep = 0; ep < cfg.episodes; ++ep) {
        Trajectory tr;
        tr.initial_state = rng.choice(m.mu0);
        std::size_t s = tr.initial_state;
        for (std::size_t t = 0; t < cfg.horizon; ++t, ++out.steps) {
            const double eps = cfg.epsilon.at(out.steps);
            const std::size_t a = rng.next_float() < eps ? rng.next_index(m.num_actions)
                                                         : greedy_action(q, s, zero, welfare, 1.0);
            const std::size_t next = sample_next_state(m, s, a, rng);
            const auto r = m.reward(a, s);
            Step st{s, a, Vector(r.begin(), r.end()), next};
            q_update(q, st, welfare, cfg.gamma, cfg.q_alpha.at(out.steps));
            tr.steps.push_back(std::move(st));
            s = next;
        }
        out.episode_returns.push_back(average_return(tr, m.num_objectives));
        if (on_episode) on_episode(ep, out.episode_returns.back());
    }
    out.policy = greedy_policy(q, welfare);
    return out;
}

inline TrainResult train_policy_gradient(const Momdp& m, const Welfare& welfare, bool ppo, const TrainConfig& cfg,
                                         Rng& rng, const EpisodeCallback& on_episode) {
    SoftmaxPolicy params(m.num_states, m.num_actions);
    CriticTable critic(m.num_states, m.num_objectives);
    TrainResult out{StochasticPolicy::uniform(m.num_states, m.num_actions), {}, 0};
    std::vector<Trajectory> batch;
    for (std::size_t ep = 0; ep < cfg.episodes;) {
        const StochasticPolicy behavior = params.policy();
        const Matrix behavior_logits = params.logits();
        batch.clear();
        for (std::size_t b = 0; b < cfg.batch_episodes && ep < cfg.episodes; ++b, ++ep) {
            batch.push_back(rollout(m, behavior, cfg.horizon, rng));
            out.steps += cfg.horizon;
            out.episode_returns.push_back(average_return(batch.back(), m.num_objectives));
            if (on_episode) on_episode(ep, out.episode_returns.back());
        }
        if (ppo) ppo_step(params, critic, batch, behavior_logits, welfare, cfg);
        else policy_gradient_step(params, critic, batch, welfare, cfg);
    }
    out.policy = params.policy();
    return out;
}

} // namespace detail

/// Trains one agent; deterministic given (m, id, cfg) including cfg.seed.
inline TrainResult train(const Momdp& m, const AgentId& id, const TrainConfig& cfg,
                         const EpisodeCallback& on_episode = {}) {
    cfg.validate();
    const Welfare welfare = make_welfare(id.welfare, cfg.weights, m.num_objectives);
    Rng rng(cfg.seed);
    switch (id.algorithm) {
        case Algorithm::QLearning: return detail::train_q_learning(m, welfare, cfg, rng, on_episode);
        case Algorithm::A2C: return detail::train_policy_gradient(m, welfare, false, cfg, rng, on_episode);
        case Algorithm::PPO: return detail::train_policy_gradient(m, welfare, true, cfg, rng, on_episode);
    }
    throw UnknownId("unknown algorithm");
}

} // namespace fairmo
