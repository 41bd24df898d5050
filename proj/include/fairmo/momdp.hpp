#pragma once

// Finite multiobjective MDP model, stationary policies, induced Markov
// reward processes, trajectory sampling and the JSON instance format.
//
// Instance file layout (dimension order is normative):
//   {
//     "name": "...",                 optional
//     "num_states": S, "num_actions": A, "num_objectives": D,
//     "gamma": g,                    in [0, 1)
//     "mu0": [S],                    initial distribution
//     "transitions": [A][S][S],      transitions[a][s][s'] = P(s' | s, a)
//     "rewards": [A][S][D]           rewards[a][s][d]
//   }

#include "fairmo/errors.hpp"
#include "fairmo/numkit.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fairmo {

inline constexpr double kStochasticTol = 1e-9;

struct Momdp {
    std::string name;
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::size_t num_objectives = 0;
    double gamma = 0.9;
    Vector mu0;
    std::vector<Matrix> transitions;  ///< [a] is S x S
    std::vector<Matrix> rewards;      ///< [a] is S x D

    Momdp() = default;
    Momdp(std::size_t s, std::size_t a, std::size_t d, double discount = 0.9)
        : num_states(s), num_actions(a), num_objectives(d), gamma(discount), mu0(s, 0.0),
          transitions(a, Matrix(s, s)), rewards(a, Matrix(s, d)) {
        if (s == 0 || a == 0 || d == 0) throw ShapeMismatch("MOMDP dimensions must be positive");
        mu0[0] = 1.0;
    }

    double p(std::size_t a, std::size_t s, std::size_t next) const { return transitions[a](s, next); }
    double& p(std::size_t a, std::size_t s, std::size_t next) { return transitions[a](s, next); }
    std::span<const double> reward(std::size_t a, std::size_t s) const { return rewards[a].row(s); }
    std::span<double> reward(std::size_t a, std::size_t s) { return rewards[a].row(s); }

    Momdp with_gamma(double g) const {
        Momdp m = *this;
        m.gamma = g;
        m.validate();
        return m;
    }

    /// Throws InvariantViolation naming the first broken invariant.
    void validate() const {
        auto fmt = [](double x) {
            std::ostringstream os;
            os.precision(12);
            os << x;
            return os.str();
        };
        if (num_states == 0 || num_actions == 0 || num_objectives == 0)
            throw InvariantViolation("dimensions must be positive");
        if (!(gamma >= 0.0 && gamma < 1.0)) throw InvariantViolation("gamma " + fmt(gamma) + " not in [0,1)");
        if (mu0.size() != num_states) throw InvariantViolation("mu0 has wrong length");
        if (transitions.size() != num_actions || rewards.size() != num_actions)
            throw InvariantViolation("transition/reward tensors need one entry per action");
        double mass = 0.0;
        for (std::size_t s = 0; s < num_states; ++s) {
            if (!(mu0[s] >= 0.0)) throw InvariantViolation("mu0[" + std::to_string(s) + "] is negative");
            mass += mu0[s];
        }
        if (std::abs(mass - 1.0) > kStochasticTol) throw InvariantViolation("mu0 sums to " + fmt(mass));
        for (std::size_t a = 0; a < num_actions; ++a) {
            const Matrix& pa = transitions[a];
            const Matrix& ra = rewards[a];
            if (pa.rows() != num_states || pa.cols() != num_states)
                throw InvariantViolation("P[" + std::to_string(a) + "] is not S x S");
            if (ra.rows() != num_states || ra.cols() != num_objectives)
                throw InvariantViolation("R[" + std::to_string(a) + "] is not S x D");
            if (!ra.all_finite()) throw InvariantViolation("R[" + std::to_string(a) + "] has non-finite entries");
            for (std::size_t s = 0; s < num_states; ++s) {
                double total = 0.0;
                for (double x : pa.row(s)) {
                    if (!(x >= 0.0) || !std::isfinite(x))
                        throw InvariantViolation("P[" + std::to_string(a) + "][" + std::to_string(s) +
                                                 "] has a negative or non-finite entry");
                    total += x;
                }
                if (std::abs(total - 1.0) > kStochasticTol)
                    throw InvariantViolation("P[" + std::to_string(a) + "][" + std::to_string(s) + "] sums to " +
                                             fmt(total));
            }
        }
    }

    friend bool operator==(const Momdp&, const Momdp&) = default;
};

// ---------------------------------------------------------------------------
// Policies

class StochasticPolicy {
public:
    explicit StochasticPolicy(Matrix pi) : pi_(std::move(pi)) {
        for (std::size_t s = 0; s < pi_.rows(); ++s) {
            double total = 0.0;
            for (double x : pi_.row(s)) {
                if (!(x >= 0.0)) throw InvariantViolation("policy row " + std::to_string(s) + " has a negative entry");
                total += x;
            }
            if (std::abs(total - 1.0) > kStochasticTol)
                throw InvariantViolation("policy row " + std::to_string(s) + " sums to " + std::to_string(total));
        }
    }

    static StochasticPolicy uniform(std::size_t states, std::size_t actions) {
        return StochasticPolicy(Matrix(states, actions, 1.0 / static_cast<double>(actions)));
    }

    static StochasticPolicy deterministic(const std::vector<std::size_t>& actions, std::size_t num_actions) {
        Matrix pi(actions.size(), num_actions);
        for (std::size_t s = 0; s < actions.size(); ++s) {
            if (actions[s] >= num_actions) throw ShapeMismatch("action index out of range");
            pi(s, actions[s]) = 1.0;
        }
        return StochasticPolicy(std::move(pi));
    }

    std::size_t num_states() const noexcept { return pi_.rows(); }
    std::size_t num_actions() const noexcept { return pi_.cols(); }
    double operator()(std::size_t s, std::size_t a) const noexcept { return pi_(s, a); }
    std::span<const double> probabilities(std::size_t s) const noexcept { return pi_.row(s); }
    const Matrix& matrix() const noexcept { return pi_; }

    std::size_t sample(std::size_t s, Rng& rng) const { return rng.choice(pi_.row(s)); }

    /// Convex combination lambda * a + (1 - lambda) * b.
    static StochasticPolicy mix(double lambda, const StochasticPolicy& a, const StochasticPolicy& b) {
        return StochasticPolicy(lambda * a.pi_ + (1.0 - lambda) * b.pi_);
    }

private:
    Matrix pi_;
};

/// Enumerates every deterministic policy; calls f(policy) for each of A^S.
template <typename F>
void for_each_deterministic_policy(std::size_t states, std::size_t actions, F&& f) {
    std::vector<std::size_t> choice(states, 0);
    for (;;) {
        f(StochasticPolicy::deterministic(choice, actions));
        std::size_t s = 0;
        while (s < states && ++choice[s] == actions) choice[s++] = 0;
        if (s == states) return;
    }
}

/// Markov reward process induced by a stationary policy.
struct InducedChain {
    Matrix P;  ///< S x S
    Matrix R;  ///< S x D
};

inline InducedChain induce(const Momdp& m, const StochasticPolicy& pi) {
    if (pi.num_states() != m.num_states || pi.num_actions() != m.num_actions)
        throw ShapeMismatch("policy shape does not match the MOMDP");
    InducedChain c{Matrix(m.num_states, m.num_states), Matrix(m.num_states, m.num_objectives)};
    for (std::size_t s = 0; s < m.num_states; ++s)
        for (std::size_t a = 0; a < m.num_actions; ++a) {
            const double w = pi(s, a);
            if (w == 0.0) continue;
            for (std::size_t t = 0; t < m.num_states; ++t) c.P(s, t) += w * m.p(a, s, t);
            for (std::size_t d = 0; d < m.num_objectives; ++d) c.R(s, d) += w * m.rewards[a](s, d);
        }
    return c;
}

// ---------------------------------------------------------------------------
// Simulation

struct Step {
    std::size_t state = 0;
    std::size_t action = 0;
    Vector reward;
    std::size_t next_state = 0;
};

struct Trajectory {
    std::size_t initial_state = 0;
    std::vector<Step> steps;
    std::uint64_t seed = 0;
};

/// Samples one environment transition from (s, a).
inline std::size_t sample_next_state(const Momdp& m, std::size_t s, std::size_t a, Rng& rng) {
    return rng.choice(m.transitions[a].row(s));
}

/// Samples `horizon` steps starting from `start`, following `pi`.
inline Trajectory rollout_from(const Momdp& m, const StochasticPolicy& pi, std::size_t start, std::size_t horizon,
                               Rng& rng) {
    if (pi.num_states() != m.num_states || pi.num_actions() != m.num_actions)
        throw ShapeMismatch("policy shape does not match the MOMDP");
    if (horizon == 0) throw ShapeMismatch("horizon must be at least 1");
    Trajectory tr;
    tr.seed = rng.seed();
    tr.initial_state = start;
    tr.steps.reserve(horizon);
    std::size_t s = start;
    for (std::size_t t = 0; t < horizon; ++t) {
        const std::size_t a = pi.sample(s, rng);
        const std::size_t next = sample_next_state(m, s, a, rng);
        const auto r = m.reward(a, s);
        tr.steps.push_back({s, a, Vector(r.begin(), r.end()), next});
        s = next;
    }
    return tr;
}

inline Trajectory rollout(const Momdp& m, const StochasticPolicy& pi, std::size_t horizon, Rng& rng) {
    const std::size_t start = rng.choice(m.mu0);
    return rollout_from(m, pi, start, horizon, rng);
}

// ---------------------------------------------------------------------------
// Instance files

inline nlohmann::json instance_to_json(const Momdp& m) {
    using nlohmann::json;
    json j;
    if (!m.name.empty()) j["name"] = m.name;
    j["num_states"] = m.num_states;
    j["num_actions"] = m.num_actions;
    j["num_objectives"] = m.num_objectives;
    j["gamma"] = m.gamma;
    j["mu0"] = m.mu0;
    json tr = json::array(), rw = json::array();
    for (std::size_t a = 0; a < m.num_actions; ++a) {
        json ta = json::array(), ra = json::array();
        for (std::size_t s = 0; s < m.num_states; ++s) {
            const auto pr = m.transitions[a].row(s);
            const auto rr = m.rewards[a].row(s);
            ta.push_back(Vector(pr.begin(), pr.end()));
            ra.push_back(Vector(rr.begin(), rr.end()));
        }
        tr.push_back(std::move(ta));
        rw.push_back(std::move(ra));
    }
    j["transitions"] = std::move(tr);
    j["rewards"] = std::move(rw);
    return j;
}

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
    return j.at(key);
}

inline std::size_t require_count(const nlohmann::json& j, const char* key) {
    const auto& v = require_field(j, key);
    if (!v.is_number_unsigned() || v.get<std::uint64_t>() == 0)
        throw ParseError(std::string("field '") + key + "' must be a positive integer");
    return v.get<std::size_t>();
}

inline double require_number(const nlohmann::json& v, const std::string& where) {
    if (!v.is_number()) throw ParseError("field '" + where + "' must be a number");
    return v.get<double>();
}

inline void require_array(const nlohmann::json& v, std::size_t n, const std::string& where) {
    if (!v.is_array()) throw ParseError("field '" + where + "' must be an array");
    if (v.size() != n)
        throw ParseError("field '" + where + "' has length " + std::to_string(v.size()) + ", expected " +
                         std::to_string(n));
}

} // namespace detail

inline Momdp instance_from_json(const nlohmann::json& j) {
    using detail::require_array;
    using detail::require_number;
    if (!j.is_object()) throw ParseError("instance must be a JSON object");
    const std::size_t S = detail::require_count(j, "num_states");
    const std::size_t A = detail::require_count(j, "num_actions");
    const std::size_t D = detail::require_count(j, "num_objectives");
    Momdp m(S, A, D);
    if (j.contains("name")) {
        if (!j["name"].is_string()) throw ParseError("field 'name' must be a string");
        m.name = j["name"].get<std::string>();
    }
    m.gamma = require_number(detail::require_field(j, "gamma"), "gamma");

    const auto& mu0 = detail::require_field(j, "mu0");
    require_array(mu0, S, "mu0");
    for (std::size_t s = 0; s < S; ++s) m.mu0[s] = require_number(mu0[s], "mu0[" + std::to_string(s) + "]");

    const auto& tr = detail::require_field(j, "transitions");
    const auto& rw = detail::require_field(j, "rewards");
    require_array(tr, A, "transitions");
    require_array(rw, A, "rewards");
    for (std::size_t a = 0; a < A; ++a) {
        const std::string ta = "transitions[" + std::to_string(a) + "]";
        const std::string ra = "rewards[" + std::to_string(a) + "]";
        require_array(tr[a], S, ta);
        require_array(rw[a], S, ra);
        for (std::size_t s = 0; s < S; ++s) {
            const std::string ts = ta + "[" + std::to_string(s) + "]";
            const std::string rs = ra + "[" + std::to_string(s) + "]";
            require_array(tr[a][s], S, ts);
            require_array(rw[a][s], D, rs);
            for (std::size_t t = 0; t < S; ++t)
                m.p(a, s, t) = require_number(tr[a][s][t], ts + "[" + std::to_string(t) + "]");
            for (std::size_t d = 0; d < D; ++d)
                m.rewards[a](s, d) = require_number(rw[a][s][d], rs + "[" + std::to_string(d) + "]");
        }
    }
    m.validate();
    return m;
}

/// Parses instance text; `source` prefixes diagnostics.
inline Momdp parse_instance(const std::string& text, const std::string& source = "<string>") {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 1, column = 1;
        for (std::size_t k = 0; k + 1 < e.byte && k < text.size(); ++k) {
            if (text[k] == '\n') ++line, column = 1;
            else ++column;
        }
        throw ParseError(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + e.what());
    }
    try {
        return instance_from_json(j);
    } catch (const ParseError& e) {
        std::string msg = e.what();
        if (msg.starts_with("ParseError: ")) msg.erase(0, 12);
        throw ParseError(source + ": " + msg);
    }
}

inline Momdp load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_instance(buf.str(), path);
}

inline void save_instance(const Momdp& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << instance_to_json(m).dump(2) << '\n';
}

/// {"num_states": S, "num_actions": A, "policy": [[pi(a|s) for a] for s]}
inline nlohmann::json policy_to_json(const StochasticPolicy& pi) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t s = 0; s < pi.num_states(); ++s) {
        const auto p = pi.probabilities(s);
        rows.push_back(std::vector<double>(p.begin(), p.end()));
    }
    return {{"num_states", pi.num_states()}, {"num_actions", pi.num_actions()}, {"policy", rows}};
}

inline StochasticPolicy policy_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ParseError("policy file must be a JSON object");
    const std::size_t S = detail::require_count(j, "num_states");
    const std::size_t A = detail::require_count(j, "num_actions");
    const auto& rows = detail::require_field(j, "policy");
    detail::require_array(rows, S, "policy");
    Matrix pi(S, A);
    for (std::size_t s = 0; s < S; ++s) {
        const std::string where = "policy[" + std::to_string(s) + "]";
        detail::require_array(rows[s], A, where);
        for (std::size_t a = 0; a < A; ++a)
            pi(s, a) = detail::require_number(rows[s][a], where + "[" + std::to_string(a) + "]");
    }
    return StochasticPolicy(std::move(pi));
}

inline StochasticPolicy load_policy(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    try {
        return policy_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
}

} // namespace fairmo
