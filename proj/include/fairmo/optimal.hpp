#pragma once

// GGF-optimal policies by linear programming over occupation measures.
//
// The GGF of the objective vector J is the concave piecewise-linear function
//   sum_k (w_k - w_{k+1}) L_k(J),   L_k(J) = sum of the k smallest J_i,
// and each L_k has the exact LP form
//   L_k(J) = max { k r_k - sum_i d_ik : r_k - d_ik <= J_i, d_ik >= 0 }.
// Substituting J_i = sum_{s,a} y[s,a] R[a][s][i] gives one LP whose feasible
// set is the polytope of occupation measures.

#include "fairmo/errors.hpp"
#include "fairmo/exact.hpp"
#include "fairmo/ggf.hpp"
#include "fairmo/momdp.hpp"
#include "fairmo/numkit.hpp"

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

namespace fairmo {

enum class Criterion { Discounted, Average };

inline std::string_view to_string(Criterion c) { return c == Criterion::Discounted ? "discounted" : "average"; }

inline Criterion parse_criterion(std::string_view s) {
    if (s == "discounted") return Criterion::Discounted;
    if (s == "average") return Criterion::Average;
    throw UnknownId("criterion must be 'discounted' or 'average', got '" + std::string(s) + "'");
}

struct GgfSolution {
    Matrix occupation;  ///< S x A; discounted mass sums to 1/(1-gamma), average mass to 1
    StochasticPolicy policy;
    Vector J;
    double ggf_value = 0.0;
    Criterion criterion = Criterion::Discounted;
    bool not_unichain = false;  ///< average case: recovered chain has several recurrent classes
    std::size_t pivots = 0;
};

/// Occupation mass below this is treated as an unvisited state.
inline constexpr double kZeroMass = 1e-12;

/// pi[s][a] = y[s,a] / sum_a y[s,a]; uniform on states without mass.
inline StochasticPolicy recover_policy(const Matrix& occupation) {
    Matrix pi(occupation.rows(), occupation.cols());
    for (std::size_t s = 0; s < occupation.rows(); ++s) {
        double mass = 0.0;
        for (double y : occupation.row(s)) mass += std::max(y, 0.0);
        for (std::size_t a = 0; a < occupation.cols(); ++a)
            pi(s, a) = mass > kZeroMass ? std::max(occupation(s, a), 0.0) / mass
                                        : 1.0 / static_cast<double>(occupation.cols());
    }
    return StochasticPolicy(std::move(pi));
}

namespace detail {

struct GgfLpLayout {
    std::size_t S, A, D;
    std::size_t y(std::size_t s, std::size_t a) const { return s * A + a; }
    std::size_t r(std::size_t k) const { return S * A + k; }
    std::size_t d(std::size_t i, std::size_t k) const { return S * A + D + i * D + k; }
    std::size_t size() const { return S * A + D + D * D; }
};

/**
 * Builds the LP. For the discounted criterion the occupation is scaled by
 * (1 - gamma) so its total mass is one; the LP optimum is then
 * (1 - gamma) GGF(J), which keeps the tableau well scaled for gamma near 1.
 */
inline LinearProgram build_ggf_lp(const Momdp& m, const GgfWeights& w, Criterion criterion, GgfLpLayout& layout) {
    const std::size_t S = m.num_states, A = m.num_actions, D = m.num_objectives;
    if (w.size() != D)
        throw DimensionMismatch("weights have " + std::to_string(w.size()) + " components, MOMDP has " +
                                std::to_string(D) + " objectives");
    layout = {S, A, D};
    LinearProgram lp(layout.size());
    for (std::size_t k = 0; k < D; ++k) lp.lower[layout.r(k)] = -std::numeric_limits<double>::infinity();

    const double discount = criterion == Criterion::Discounted ? m.gamma : 1.0;
    for (std::size_t t = 0; t < S; ++t) {
        Vector row(layout.size(), 0.0);
        for (std::size_t a = 0; a < A; ++a) row[layout.y(t, a)] += 1.0;
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a) row[layout.y(s, a)] -= discount * m.p(a, s, t);
        const double rhs = criterion == Criterion::Discounted ? (1.0 - m.gamma) * m.mu0[t] : 0.0;
        lp.add(std::move(row), Relation::Equal, rhs);
    }
    if (criterion == Criterion::Average) {
        Vector row(layout.size(), 0.0);
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a) row[layout.y(s, a)] = 1.0;
        lp.add(std::move(row), Relation::Equal, 1.0);
    }
    // r_k - d_ik - J_i <= 0
    for (std::size_t i = 0; i < D; ++i)
        for (std::size_t k = 0; k < D; ++k) {
            Vector row(layout.size(), 0.0);
            row[layout.r(k)] = 1.0;
            row[layout.d(i, k)] = -1.0;
            for (std::size_t s = 0; s < S; ++s)
                for (std::size_t a = 0; a < A; ++a) row[layout.y(s, a)] = -m.rewards[a](s, i);
            lp.add(std::move(row), Relation::LessEqual, 0.0);
        }
    for (std::size_t k = 0; k < D; ++k) {
        const double dw = w[k] - (k + 1 < D ? w[k + 1] : 0.0);
        lp.objective[layout.r(k)] = dw * static_cast<double>(k + 1);
        for (std::size_t i = 0; i < D; ++i) lp.objective[layout.d(i, k)] = -dw;
    }
    return lp;
}

} // namespace detail

inline GgfSolution solve_ggf(const Momdp& m, const GgfWeights& w, Criterion criterion) {
    detail::GgfLpLayout layout{};
    const LinearProgram lp = detail::build_ggf_lp(m, w, criterion, layout);
    const LpResult res = simplex_solve(lp);
    if (res.status != LpStatus::Optimal)
        throw LpFailure(std::string("GGF LP returned ") + std::string(to_string(res.status)));

    const double scale = criterion == Criterion::Discounted ? 1.0 / (1.0 - m.gamma) : 1.0;
    const std::size_t S = m.num_states, A = m.num_actions, D = m.num_objectives;
    Matrix y(S, A);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) y(s, a) = std::max(res.x[layout.y(s, a)], 0.0) * scale;

    GgfSolution sol{y, recover_policy(y), Vector(D, 0.0), res.value * scale, criterion, false, res.pivots};
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a)
            for (std::size_t i = 0; i < D; ++i) sol.J[i] += y(s, a) * m.rewards[a](s, i);

    if (criterion == Criterion::Average) {
        const Matrix p_star = cesaro_limit(induce(m, sol.policy).P);
        sol.not_unichain = row_spread(p_star) > 1e-6;
    }
    return sol;
}

inline GgfSolution solve_ggf_discounted(const Momdp& m, const GgfWeights& w) {
    return solve_ggf(m, w, Criterion::Discounted);
}

inline GgfSolution solve_ggf_average(const Momdp& m, const GgfWeights& w) {
    return solve_ggf(m, w, Criterion::Average);
}

/// GGF of a policy's exact objective vector under the given criterion.
inline double policy_ggf(const Momdp& m, const GgfWeights& w, const StochasticPolicy& pi, Criterion criterion) {
    if (criterion == Criterion::Discounted) return ggf(w, vec_mat(m.mu0, value_discounted(m, pi)));
    return ggf(w, vec_mat(m.mu0, gain(m, pi)));
}

struct DeterministicBest {
    std::vector<std::size_t> actions;
    double ggf_value = -std::numeric_limits<double>::infinity();
};

/// Exhaustive search over all A^S deterministic policies.
inline DeterministicBest best_deterministic(const Momdp& m, const GgfWeights& w, Criterion criterion) {
    DeterministicBest best;
    for_each_deterministic_policy(m.num_states, m.num_actions, [&](const StochasticPolicy& pi) {
        const double v = policy_ggf(m, w, pi, criterion);
        if (v > best.ggf_value) {
            best.ggf_value = v;
            best.actions.clear();
            for (std::size_t s = 0; s < m.num_states; ++s)
                best.actions.push_back(static_cast<std::size_t>(
                    std::max_element(pi.probabilities(s).begin(), pi.probabilities(s).end()) -
                    pi.probabilities(s).begin()));
        }
    });
    return best;
}

struct ScalarSolution {
    Vector V;
    std::vector<std::size_t> actions;
    std::size_t iterations = 0;
};

/**
 * Bellman-optimality iteration for a single-objective model. Stops when the
 * span of successive differences drops below `span_tol`, then applies the
 * span-based (MacQueen) correction to the last iterate.
 */
inline ScalarSolution value_iteration_scalar(const Momdp& m, double span_tol = 1e-10,
                                             std::size_t max_iterations = 10000000) {
    if (m.num_objectives != 1) throw DimensionMismatch("value iteration needs a single-objective model");
    const std::size_t S = m.num_states, A = m.num_actions;
    const double g = m.gamma;
    ScalarSolution out{Vector(S, 0.0), std::vector<std::size_t>(S, 0), 0};
    Vector next(S);
    auto backup = [&](std::size_t s, std::size_t a, const Vector& v) {
        double q = m.rewards[a](s, 0);
        for (std::size_t t = 0; t < S; ++t) q += g * m.p(a, s, t) * v[t];
        return q;
    };
    for (;;) {
        for (std::size_t s = 0; s < S; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < A; ++a) best = std::max(best, backup(s, a, out.V));
            next[s] = best;
        }
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t s = 0; s < S; ++s) lo = std::min(lo, next[s] - out.V[s]), hi = std::max(hi, next[s] - out.V[s]);
        out.V = next;
        ++out.iterations;
        if (hi - lo < span_tol || g == 0.0) {
            const double shift = g / (1.0 - g) * 0.5 * (lo + hi);
            for (double& v : out.V) v += shift;
            break;
        }
        if (out.iterations >= max_iterations) throw NoConvergence("value iteration did not converge");
    }
    for (std::size_t s = 0; s < S; ++s) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < A; ++a) {
            const double q = backup(s, a, out.V);
            if (q > best + 1e-12) best = q, out.actions[s] = a;
        }
    }
    return out;
}

} // namespace fairmo
