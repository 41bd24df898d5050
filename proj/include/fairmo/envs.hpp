#pragma once

// Shipped MOMDP instances and random generators.

#include "fairmo/errors.hpp"
#include "fairmo/exact.hpp"
#include "fairmo/ggf.hpp"
#include "fairmo/momdp.hpp"
#include "fairmo/numkit.hpp"

#include <array>
#include <charconv>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

namespace fairmo {

struct EnvSpec {
    std::string id;
    Momdp model;
    std::vector<std::string> objective_names;
    std::vector<std::string> action_names;
};

/// True when the uniform policy's Cesaro limit has no zero entry.
inline bool uniform_policy_communicates(const Momdp& m) {
    const Matrix p_star = cesaro_limit(induce(m, StochasticPolicy::uniform(m.num_states, m.num_actions)).P);
    for (double x : p_star.data())
        if (!(x > 1e-12)) return false;
    return true;
}

/// Mixes every transition row with a jump to mu0: (1 - eps) P + eps mu0.
inline void add_restart(Momdp& m, double eps) {
    for (auto& pa : m.transitions)
        for (std::size_t s = 0; s < m.num_states; ++s)
            for (std::size_t t = 0; t < m.num_states; ++t) pa(s, t) = (1.0 - eps) * pa(s, t) + eps * m.mu0[t];
}

// ---------------------------------------------------------------------------
// Small fixed instances

/// One state, two actions: a0 pays (1,0), a1 pays (0,1).
inline Momdp one_state_two_action(double gamma = 0.9) {
    Momdp m(1, 2, 2, gamma);
    m.name = "one_state";
    m.p(0, 0, 0) = m.p(1, 0, 0) = 1.0;
    m.rewards[0](0, 0) = 1.0;
    m.rewards[1](0, 1) = 1.0;
    m.validate();
    return m;
}

/**
 * Deterministic two-state cycle 0 -> 1 -> 0 with a single action. State s
 * pays `state_rewards[s]` (one row of D components per state).
 */
inline Momdp periodic_chain(const std::vector<Vector>& state_rewards, double gamma = 0.9) {
    if (state_rewards.size() != 2 || state_rewards[0].empty() || state_rewards[0].size() != state_rewards[1].size())
        throw BadParams("periodic chain needs two equal-length reward rows");
    Momdp m(2, 1, state_rewards[0].size(), gamma);
    m.name = "periodic2";
    m.p(0, 0, 1) = m.p(0, 1, 0) = 1.0;
    for (std::size_t s = 0; s < 2; ++s)
        for (std::size_t d = 0; d < m.num_objectives; ++d) m.rewards[0](s, d) = state_rewards[s][d];
    m.validate();
    return m;
}

// ---------------------------------------------------------------------------
// example1: a three-state instance whose GGF-optimal plan depends on the start state

namespace example1_ids {
inline constexpr std::size_t s1 = 0, s2 = 1, s3 = 2;
inline constexpr std::size_t up = 0, down = 1;
} // namespace example1_ids

/**
 * Three states, two actions (Up, Down). s1 -> s2 pays Up (7,0) / Down (0,0);
 * s2 -> s3 pays Up (0,7/gamma) / Down (5/gamma,5/gamma); s3 absorbs with zero
 * reward. `start` selects mu0 = e_start (0 for s1, 1 for s2).
 */
inline Momdp example1(double gamma, std::size_t start = 0) {
    using namespace example1_ids;
    if (!(gamma > 0.0 && gamma < 1.0)) throw BadParams("example1 needs gamma in (0,1)");
    if (start > s2) throw BadParams("example1 start must be s1 or s2");
    Momdp m(3, 2, 2, gamma);
    m.name = "example1";
    m.mu0 = {0.0, 0.0, 0.0};
    m.mu0[start] = 1.0;
    for (std::size_t a : {up, down}) {
        m.p(a, s1, s2) = 1.0;
        m.p(a, s2, s3) = 1.0;
        m.p(a, s3, s3) = 1.0;
    }
    m.rewards[up](s1, 0) = 7.0;
    m.rewards[up](s2, 1) = 7.0 / gamma;
    m.rewards[down](s2, 0) = 5.0 / gamma;
    m.rewards[down](s2, 1) = 5.0 / gamma;
    m.validate();
    return m;
}

struct PlanRow {
    std::string plan;  ///< "Up-Up" etc.: action at s1, then at s2
    Vector J;          ///< discounted objective vector from s1
    double ggf = 0.0;
};

struct InconsistencyTable {
    Vector weights;
    std::vector<PlanRow> from_s1;     ///< all four plans evaluated from s1
    std::array<PlanRow, 2> from_s2;   ///< Up and Down evaluated from s2
    std::size_t best_plan_s1 = 0;     ///< index into from_s1
    std::size_t best_action_s2 = 0;   ///< 0 = Up, 1 = Down
    /// The s1-optimal plan's s2 action is strictly worse from s2.
    bool inconsistent = false;
};

/// Enumerates every deterministic plan of example1 under weights `w`.
inline InconsistencyTable example1_enumeration(const GgfWeights& w, double gamma) {
    using namespace example1_ids;
    const char* names[2] = {"Up", "Down"};
    InconsistencyTable t;
    t.weights = w.values();
    const Momdp from1 = example1(gamma, s1);
    const Momdp from2 = example1(gamma, s2);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a1 : {up, down})
        for (std::size_t a2 : {up, down}) {
            const auto pi = StochasticPolicy::deterministic({a1, a2, up}, 2);
            PlanRow row{std::string(names[a1]) + "-" + names[a2], vec_mat(from1.mu0, value_discounted(from1, pi)), 0.0};
            row.ggf = ggf(w, row.J);
            if (row.ggf > best + 1e-12) best = row.ggf, t.best_plan_s1 = t.from_s1.size();
            t.from_s1.push_back(std::move(row));
        }
    for (std::size_t a2 : {up, down}) {
        const auto pi = StochasticPolicy::deterministic({up, a2, up}, 2);
        PlanRow row{names[a2], vec_mat(from2.mu0, value_discounted(from2, pi)), 0.0};
        row.ggf = ggf(w, row.J);
        t.from_s2[a2] = std::move(row);
    }
    t.best_action_s2 = t.from_s2[down].ggf > t.from_s2[up].ggf ? down : up;
    const std::size_t planned_s2 = t.best_plan_s1 % 2;  // plans enumerate (a1, a2) with a2 fastest
    t.inconsistent = t.from_s2[planned_s2].ggf < t.from_s2[1 - planned_s2].ggf;
    return t;
}

// ---------------------------------------------------------------------------
// Species conservation (two interacting populations)

struct SpeciesParams {
    double restart = 0.01;         ///< jump to mu0 per step
    double otter_growth = 0.15;    ///< up-step rate at full prey, otters present
    double otter_decline = 0.10;   ///< natural down-step rate
    double introduce = 0.60;       ///< extra up-step rate when introducing otters
    double control = 0.60;         ///< extra down-step rate when controlling otters
    double catastrophe = 0.03;     ///< oil-spill rate: otters drop by two levels
    double abalone_growth = 0.35;  ///< up-step rate
    double poaching = 0.30;        ///< down-step rate without enforcement
    double antipoach = 0.25;       ///< poaching reduction under enforcement
    double predation = 0.55;       ///< extra down-step rate at maximal otter density
    bool constant_rewards = false; ///< test hook: every state pays (c, c)
    double constant_value = 0.5;
};

namespace species_actions {
inline constexpr std::size_t nothing = 0, introduce = 1, antipoach = 2, control = 3, half_half = 4;
} // namespace species_actions

/**
 * States are (otter level, abalone level) pairs, index o * La + b. Each
 * species takes an independent +-1 step per period with action-modulated
 * rates; predation raises the abalone down-step rate with otter density and
 * a rare catastrophe knocks otters down two levels. Otters at level 0 only
 * grow when introduced. Rewards are densities scaled to [0,1]. The process
 * starts at (0 otters, max abalone) and restarts there with small probability.
 */
inline Momdp species_lite(std::size_t levels_otter, std::size_t levels_abalone, const SpeciesParams& p = {},
                          double gamma = 0.99) {
    using namespace species_actions;
    if (levels_otter < 3 || levels_abalone < 3) throw BadParams("species levels must be at least 3");
    if (!(p.restart > 0.0 && p.restart <= 0.2)) throw BadParams("species restart must be in (0, 0.2]");
    const std::size_t Lo = levels_otter, La = levels_abalone, S = Lo * La;
    Momdp m(S, 5, 2, gamma);
    m.name = "species:" + std::to_string(Lo) + "x" + std::to_string(La);
    auto idx = [&](std::size_t o, std::size_t b) { return o * La + b; };
    m.mu0.assign(S, 0.0);
    m.mu0[idx(0, La - 1)] = 1.0;

    auto clamp01 = [](double x) { return std::min(1.0, std::max(0.0, x)); };
    for (std::size_t a = 0; a < 5; ++a) {
        const double intro = a == introduce ? p.introduce : 0.0;
        const double ctrl = a == control ? p.control : (a == half_half ? 0.5 * p.control : 0.0);
        const double enforce = a == antipoach ? p.antipoach : (a == half_half ? 0.5 * p.antipoach : 0.0);
        for (std::size_t o = 0; o < Lo; ++o)
            for (std::size_t b = 0; b < La; ++b) {
                const double prey = static_cast<double>(b) / static_cast<double>(La - 1);
                const double density = static_cast<double>(o) / static_cast<double>(Lo - 1);
                // otter step distribution over {-2 (catastrophe), -1, 0, +1}
                double o_up = (o == 0 ? 0.0 : p.otter_growth * prey) + intro;
                double o_dn = o == 0 ? 0.0 : p.otter_decline + ctrl;
                double o_cat = o == 0 ? 0.0 : p.catastrophe;
                if (o + 1 == Lo) o_up = 0.0;
                const double o_total = o_up + o_dn + o_cat;
                if (o_total > 1.0) o_up /= o_total, o_dn /= o_total, o_cat /= o_total;
                // abalone step distribution over {-1, 0, +1}
                double b_up = b + 1 == La ? 0.0 : p.abalone_growth;
                double b_dn = b == 0 ? 0.0 : clamp01(p.poaching - enforce + p.predation * density);
                const double b_total = b_up + b_dn;
                if (b_total > 1.0) b_up /= b_total, b_dn /= b_total;

                const double o_moves[4] = {o_cat, o_dn, 1.0 - o_up - o_dn - o_cat, o_up};
                const int o_delta[4] = {-2, -1, 0, 1};
                const double b_moves[3] = {b_dn, 1.0 - b_up - b_dn, b_up};
                const int b_delta[3] = {-1, 0, 1};
                const std::size_t s = idx(o, b);
                for (int i = 0; i < 4; ++i) {
                    if (o_moves[i] <= 0.0) continue;
                    const auto no = static_cast<std::size_t>(std::max<long>(0, static_cast<long>(o) + o_delta[i]));
                    for (int k = 0; k < 3; ++k) {
                        if (b_moves[k] <= 0.0) continue;
                        const auto nb = static_cast<std::size_t>(static_cast<long>(b) + b_delta[k]);
                        m.p(a, s, idx(no, nb)) += o_moves[i] * b_moves[k];
                    }
                }
                m.rewards[a](s, 0) = p.constant_rewards ? p.constant_value : density;
                m.rewards[a](s, 1) = p.constant_rewards ? p.constant_value : prey;
            }
    }
    add_restart(m, p.restart);
    m.validate();
    return m;
}

// ---------------------------------------------------------------------------
// Shared-queue resource allocation

struct ResourceParams {
    double capacity = 1.0;
    double high = 0.7;         ///< share of the favoured host
    double low = 0.15;         ///< share of each other host
    double load_spread = 0.2;  ///< host i adds a_i (1 - spread (hosts-1-i)/(hosts-1)) to the queue load
    bool symmetric = false;    ///< every host loads the queue equally
    double queue_gain = 1.0;   ///< up-step probability per unit of relative overflow
    double drain = 0.4;        ///< down-step probability at exact capacity
    double restart = 0.01;
};

/**
 * State is the level q of a single shared queue, q_norm = q / (levels - 1).
 * Actions come from a small menu of allocation profiles: equal split of the
 * capacity, one "favour host i" profile per host, and idle. The queue load of
 * a profile is its allocation weighted by per-host load factors; host 0 is
 * the most efficient, so favouring it earns the largest sustainable total.
 * The queue steps up with probability proportional to relative overflow when
 * the load exceeds capacity and steps down otherwise. Host i earns
 * a_i (1 - 2 q_norm).
 */
inline Momdp resource_alloc_lite(std::size_t hosts, std::size_t levels, const ResourceParams& p = {},
                                 double gamma = 0.99) {
    if (hosts < 2 || hosts > 6) throw BadParams("resource allocation supports 2..6 hosts");
    if (levels < 2) throw BadParams("resource allocation needs at least 2 queue levels");
    if (!(p.capacity > 0.0)) throw BadParams("capacity must be positive");
    if (!(p.restart > 0.0 && p.restart <= 0.2)) throw BadParams("restart must be in (0, 0.2]");
    if (!(p.load_spread >= 0.0 && p.load_spread < 1.0)) throw BadParams("load_spread must be in [0, 1)");

    std::vector<Vector> menu;
    menu.push_back(Vector(hosts, p.capacity / static_cast<double>(hosts)));
    for (std::size_t i = 0; i < hosts; ++i) {
        Vector a(hosts, p.low);
        a[i] = p.high;
        menu.push_back(std::move(a));
    }
    menu.push_back(Vector(hosts, 0.0));
    Vector load_factor(hosts, 1.0);
    if (!p.symmetric)
        for (std::size_t i = 0; i < hosts; ++i)
            load_factor[i] = 1.0 - p.load_spread * static_cast<double>(hosts - 1 - i) / static_cast<double>(hosts - 1);

    const std::size_t S = levels, A = menu.size();
    Momdp m(S, A, hosts, gamma);
    m.name = "resalloc:" + std::to_string(hosts) + "x" + std::to_string(levels) + (p.symmetric ? ":sym" : "");
    m.mu0.assign(S, 0.0);
    m.mu0[0] = 1.0;
    for (std::size_t a = 0; a < A; ++a) {
        const double rel = (dot(menu[a], load_factor) - p.capacity) / p.capacity;
        const double up = rel > 0.0 ? std::min(1.0, p.queue_gain * rel) : 0.0;
        const double down = rel > 0.0 ? 0.0 : std::min(1.0, p.drain - rel);
        for (std::size_t q = 0; q < S; ++q) {
            const double qn = levels == 1 ? 0.0 : static_cast<double>(q) / static_cast<double>(levels - 1);
            const double u = q + 1 < S ? up : 0.0;
            const double d = q > 0 ? down : 0.0;
            if (q + 1 < S) m.p(a, q, q + 1) += u;
            if (q > 0) m.p(a, q, q - 1) += d;
            m.p(a, q, q) += 1.0 - u - d;
            for (std::size_t h = 0; h < hosts; ++h) m.rewards[a](q, h) = menu[a][h] * (1.0 - 2.0 * qn);
        }
    }
    add_restart(m, p.restart);
    m.validate();
    return m;
}

// ---------------------------------------------------------------------------
// Garnet random instances

/**
 * Each (a, s) gets `branching` distinct random successors with Dirichlet(1)
 * probabilities, then every row is mixed with eps_restart * mu0 (uniform).
 * Rewards are i.i.d. uniform on [0,1]^D. Deterministic given the seed.
 */
inline Momdp garnet(std::size_t states, std::size_t actions, std::size_t objectives, std::size_t branching,
                    std::uint64_t seed, double eps_restart = 0.05, bool require_communicating = true,
                    double gamma = 0.9) {
    if (states == 0 || actions == 0 || objectives == 0) throw BadParams("garnet dimensions must be positive");
    if (branching == 0 || branching > states) throw BadParams("garnet branching must be in [1, S]");
    if (!(eps_restart >= 0.0 && eps_restart <= 0.2)) throw BadParams("garnet eps_restart must be in [0, 0.2]");
    if (require_communicating && eps_restart == 0.0)
        throw BadParams("communicating instances need eps_restart > 0");
    Rng rng(seed);
    Momdp m(states, actions, objectives, gamma);
    m.name = "garnet:" + std::to_string(states) + "," + std::to_string(actions) + "," + std::to_string(objectives) +
             "," + std::to_string(branching) + "," + std::to_string(seed);
    m.mu0.assign(states, 1.0 / static_cast<double>(states));
    std::vector<std::size_t> pool(states);
    for (std::size_t a = 0; a < actions; ++a)
        for (std::size_t s = 0; s < states; ++s) {
            std::iota(pool.begin(), pool.end(), std::size_t{0});
            for (std::size_t k = 0; k < branching; ++k) std::swap(pool[k], pool[k + rng.next_index(states - k)]);
            Vector weights(branching);
            double total = 0.0;
            for (double& x : weights) total += (x = rng.exponential());
            for (std::size_t k = 0; k < branching; ++k) m.p(a, s, pool[k]) += weights[k] / total;
            for (std::size_t d = 0; d < objectives; ++d) m.rewards[a](s, d) = rng.next_float();
        }
    add_restart(m, eps_restart);
    m.validate();
    return m;
}

// ---------------------------------------------------------------------------
// Environment ids

namespace detail {

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    for (;;) {
        const auto k = s.find(sep);
        out.push_back(s.substr(0, k));
        if (k == std::string_view::npos) return out;
        s.remove_prefix(k + 1);
    }
}

template <typename T>
T parse_number(std::string_view s, std::string_view what) {
    T x{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc{} || p != s.data() + s.size() || s.empty())
        throw UnknownId("cannot parse '" + std::string(s) + "' in " + std::string(what));
    return x;
}

} // namespace detail

/**
 * Builds an environment from its id: "example1", "example1:s2", "one-state",
 * "periodic", "species:<Lo>x<La>", "resalloc:<hosts>x<levels>[:sym]",
 * "garnet:S,A,D,b,seed[,eps]".
 */
inline EnvSpec make_env(std::string_view id, double gamma = 0.99) {
    EnvSpec e;
    e.id = std::string(id);
    const auto colon = id.find(':');
    const std::string_view kind = id.substr(0, colon);
    const std::string_view args = colon == std::string_view::npos ? std::string_view{} : id.substr(colon + 1);
    auto dims = [&](std::string_view s) {
        const auto parts = detail::split(s, 'x');
        if (parts.size() != 2) throw UnknownId("expected <a>x<b> in env id '" + std::string(id) + "'");
        return std::pair{detail::parse_number<std::size_t>(parts[0], id), detail::parse_number<std::size_t>(parts[1], id)};
    };
    if (kind == "example1") {
        if (!args.empty() && args != "s1" && args != "s2") throw UnknownId("example1 start must be s1 or s2");
        e.model = example1(gamma, args == "s2" ? 1 : 0);
        e.objective_names = {"user1", "user2"};
        e.action_names = {"up", "down"};
    } else if (kind == "one-state") {
        e.model = one_state_two_action(gamma);
        e.objective_names = {"obj0", "obj1"};
        e.action_names = {"a0", "a1"};
    } else if (kind == "periodic") {
        e.model = periodic_chain({{1.0, 0.0}, {0.0, 1.0}}, gamma);
        e.objective_names = {"obj0", "obj1"};
        e.action_names = {"stay"};
    } else if (kind == "species") {
        const auto [lo, la] = dims(args);
        e.model = species_lite(lo, la, {}, gamma);
        e.objective_names = {"otter", "abalone"};
        e.action_names = {"nothing", "introduce", "antipoach", "control", "half"};
    } else if (kind == "resalloc") {
        const auto parts = detail::split(args, ':');
        if (parts.size() > 2 || (parts.size() == 2 && parts[1] != "sym"))
            throw UnknownId("resalloc id is resalloc:<hosts>x<levels>[:sym]");
        const auto [hosts, levels] = dims(parts[0]);
        ResourceParams p;
        p.symmetric = parts.size() == 2;
        e.model = resource_alloc_lite(hosts, levels, p, gamma);
        for (std::size_t h = 0; h < hosts; ++h) e.objective_names.push_back("host" + std::to_string(h));
        e.action_names.push_back("equal");
        for (std::size_t h = 0; h < hosts; ++h) e.action_names.push_back("favour" + std::to_string(h));
        e.action_names.push_back("idle");
    } else if (kind == "garnet") {
        const auto parts = detail::split(args, ',');
        if (parts.size() != 5 && parts.size() != 6) throw UnknownId("garnet id is garnet:S,A,D,b,seed[,eps]");
        const double eps = parts.size() == 6 ? detail::parse_number<double>(parts[5], id) : 0.05;
        e.model = garnet(detail::parse_number<std::size_t>(parts[0], id), detail::parse_number<std::size_t>(parts[1], id),
                         detail::parse_number<std::size_t>(parts[2], id), detail::parse_number<std::size_t>(parts[3], id),
                         detail::parse_number<std::uint64_t>(parts[4], id), eps, eps > 0.0, gamma);
        for (std::size_t d = 0; d < e.model.num_objectives; ++d) e.objective_names.push_back("obj" + std::to_string(d));
        for (std::size_t a = 0; a < e.model.num_actions; ++a) e.action_names.push_back("a" + std::to_string(a));
    } else {
        throw UnknownId("unknown env id '" + std::string(id) + "'");
    }
    return e;
}

} // namespace fairmo
