#pragma once

// Numerical check of the discounted-versus-average approximation bound for
// GGF-optimal policies:
//
//   GGF(J_avg(pi*_gamma)) >= GGF(J_avg(pi*_1))
//        - Rbar (1 - gamma) (rho(gamma, sigma(H_1)) + rho(gamma, sigma(H_gamma)))
//
// with rho(gamma, sigma) = sigma / (gamma - (1 - gamma) sigma), H the Drazin
// inverse of I - P for the respective policy, and Rbar = max_pi ||R_pi||.

#include "fairmo/errors.hpp"
#include "fairmo/exact.hpp"
#include "fairmo/ggf.hpp"
#include "fairmo/momdp.hpp"
#include "fairmo/optimal.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fairmo {

inline constexpr double kBoundSlack = 1e-8;

/// Norm convention for Rbar: max over states of the l1 norm of the reward vector.
inline constexpr std::string_view kRbarNorm = "max_s ||R_pi[s]||_1";

inline double rho(double gamma, double sigma) { return sigma / (gamma - (1.0 - gamma) * sigma); }

/**
 * Rbar = max over policies pi of max_s ||R_pi[s]||_1.
 *
 * For a fixed state, R_pi[s] = sum_a pi(a|s) R[a][s] is an affine image of the
 * action simplex and ||.||_1 is convex, so its maximum over the simplex sits at
 * a vertex: a single action. States decouple because a stationary policy
 * picks its row in every state independently. The exact value is therefore
 * max_s max_a ||R[a][s]||_1 and no policy enumeration is needed.
 */
inline double reward_bound(const Momdp& m) {
    double best = 0.0;
    for (std::size_t a = 0; a < m.num_actions; ++a)
        for (std::size_t s = 0; s < m.num_states; ++s) {
            double l1 = 0.0;
            for (double x : m.reward(a, s)) l1 += std::abs(x);
            best = std::max(best, l1);
        }
    return best;
}

struct BoundReport {
    double gamma = 0.0;
    double sigma_H_gamma = 0.0;
    double sigma_H_avg = 0.0;
    double gamma_threshold = 0.0;
    double R_bar = 0.0;
    std::string R_bar_method = "exact-vertex";
    double rho_gamma = 0.0;
    double rho_avg = 0.0;
    double bound_value = 0.0;
    double ggf_gain_gamma = 0.0;
    double ggf_gain_avg = 0.0;
    double gap = 0.0;
    bool holds = false;
};

namespace detail {

struct AverageReference {
    GgfSolution solution;
    double sigma = 0.0;
    double ggf_gain = 0.0;
};

inline AverageReference average_reference(const Momdp& m, const GgfWeights& w) {
    AverageReference ref{solve_ggf_average(m, w)};
    const ExactEvaluation ev = evaluate(m, ref.solution.policy);
    ref.sigma = ev.sigma_H;
    ref.ggf_gain = ggf(w, ev.average_objectives(m.mu0));
    return ref;
}

inline BoundReport bound_report(const Momdp& base, const GgfWeights& w, double gamma, const AverageReference& ref,
                                double r_bar) {
    const Momdp m = base.with_gamma(gamma);
    const GgfSolution disc = solve_ggf_discounted(m, w);
    const ExactEvaluation ev = evaluate(m, disc.policy);

    BoundReport r;
    r.gamma = gamma;
    r.sigma_H_gamma = ev.sigma_H;
    r.sigma_H_avg = ref.sigma;
    r.gamma_threshold = std::max(laurent_threshold(r.sigma_H_gamma), laurent_threshold(r.sigma_H_avg));
    if (!(gamma > r.gamma_threshold)) throw GammaBelowThreshold(gamma, r.gamma_threshold);
    r.R_bar = r_bar;
    r.rho_gamma = rho(gamma, r.sigma_H_gamma);
    r.rho_avg = rho(gamma, r.sigma_H_avg);
    r.bound_value = r.R_bar * (1.0 - gamma) * (r.rho_avg + r.rho_gamma);
    r.ggf_gain_gamma = ggf(w, ev.average_objectives(m.mu0));
    r.ggf_gain_avg = ref.ggf_gain;
    r.gap = r.ggf_gain_avg - r.ggf_gain_gamma;
    r.holds = r.ggf_gain_gamma >= r.ggf_gain_avg - r.bound_value - kBoundSlack;
    return r;
}

} // namespace detail

inline BoundReport gain_bound_report(const Momdp& m, const GgfWeights& w, double gamma) {
    const auto ref = detail::average_reference(m, w);
    return detail::bound_report(m, w, gamma, ref, reward_bound(m));
}

/// Single-objective specialisation; the GGF of a scalar is the scalar.
inline BoundReport scalar_gain_bound_report(const Momdp& m, double gamma) {
    if (m.num_objectives != 1) throw DimensionMismatch("single-objective bound needs D = 1");
    return gain_bound_report(m, GgfWeights(Vector{1.0}), gamma);
}

struct SweepEntry {
    double gamma = 0.0;
    std::optional<BoundReport> report;
    std::string error;  ///< set when the report could not be produced
    double threshold = 0.0;
};

/// One entry per gamma, in input order; the average-optimal reference is shared.
inline std::vector<SweepEntry> gamma_sweep(const Momdp& m, const GgfWeights& w, std::span<const double> gammas) {
    const auto ref = detail::average_reference(m, w);
    const double r_bar = reward_bound(m);
    std::vector<SweepEntry> out;
    for (double g : gammas) {
        SweepEntry e{g, std::nullopt, {}, 0.0};
        try {
            e.report = detail::bound_report(m, w, g, ref, r_bar);
            e.threshold = e.report->gamma_threshold;
        } catch (const GammaBelowThreshold& ex) {
            e.error = ex.what();
            e.threshold = ex.threshold();
        } catch (const InvariantViolation& ex) {
            e.error = ex.what();
        }
        out.push_back(std::move(e));
    }
    return out;
}

} // namespace fairmo
