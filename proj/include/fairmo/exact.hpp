#pragma once

// Exact evaluation of a fixed stationary policy: discounted values and
// occupation measure by direct linear solves, the Cesaro-limit matrix, gain,
// the Drazin inverse of I - P and the Laurent-series reconstruction of the
// discounted value from the gain.

#include "fairmo/errors.hpp"
#include "fairmo/momdp.hpp"
#include "fairmo/numkit.hpp"

#include <cmath>
#include <optional>
#include <string>

namespace fairmo {

inline constexpr double kCesaroTol = 1e-10;
inline constexpr int kCesaroMinSquarings = 20;
inline constexpr int kCesaroMaxSquarings = 200;
inline constexpr double kLaurentTermTol = 1e-12;
inline constexpr std::size_t kLaurentMaxTerms = 10000;

/// V: S x D with (I - gamma P_pi) V_d = R_pi,d for every objective d.
inline Matrix value_discounted(const InducedChain& chain, double gamma) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw GammaOutOfRange(gamma, 0.0);
    const std::size_t S = chain.P.rows();
    Matrix a = Matrix::identity(S) - gamma * chain.P;
    try {
        return LuFactorization(std::move(a)).solve(chain.R);
    } catch (const SingularMatrix& e) {
        throw Error(std::string("internal error: I - gamma P singular for gamma < 1 (") + e.what() + ")");
    }
}

inline Matrix value_discounted(const Momdp& m, const StochasticPolicy& pi) {
    return value_discounted(induce(m, pi), m.gamma);
}

/// x with x (I - gamma P_pi) = mu0; total mass 1 / (1 - gamma).
inline Vector occupation_discounted(const InducedChain& chain, std::span<const double> mu0, double gamma) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw GammaOutOfRange(gamma, 0.0);
    const std::size_t S = chain.P.rows();
    Matrix a = (Matrix::identity(S) - gamma * chain.P).transposed();
    return lu_solve(a, mu0);
}

inline Vector occupation_discounted(const Momdp& m, const StochasticPolicy& pi) {
    return occupation_discounted(induce(m, pi), m.mu0, m.gamma);
}

/**
 * Cesaro limit lim (1/n) sum_{k<n} P^k.
 *
 * The lazy chain Q = (I + P) / 2 has the same Cesaro limit as P (both share
 * the kernel and range of I - P) but is aperiodic, so its plain powers
 * converge. Powers Q^(2^k) are formed by repeated squaring with each row
 * renormalised to sum one. At least `min_squarings` squarings (about 10^6
 * chain steps) are taken so that slowly mixing chains are not stopped early.
 */
inline Matrix cesaro_limit(const Matrix& p, double tol = kCesaroTol, int min_squarings = kCesaroMinSquarings,
                           int max_squarings = kCesaroMaxSquarings) {
    if (!p.square()) throw ShapeMismatch("cesaro_limit needs a square matrix");
    const std::size_t n = p.rows();
    Matrix q = 0.5 * (Matrix::identity(n) + p);
    for (int k = 1; k <= max_squarings; ++k) {
        Matrix next = q * q;
        for (std::size_t i = 0; i < n; ++i) {
            double total = 0.0;
            for (double& x : next.row(i)) {
                if (x < 0.0) x = 0.0;
                total += x;
            }
            for (double& x : next.row(i)) x /= total;
        }
        const double change = max_abs(next - q);
        q = std::move(next);
        if (k >= min_squarings && change < tol) return q;
    }
    throw NoConvergence("Cesaro limit did not converge within " + std::to_string(max_squarings) + " squarings");
}

struct DrazinResult {
    Matrix H;
    double sigma = 0.0;
};

/// H = (I - P + P*)^-1 (I - P*) and its spectral radius.
inline DrazinResult drazin(const Matrix& p, const Matrix& p_star) {
    const std::size_t n = p.rows();
    const Matrix id = Matrix::identity(n);
    Matrix h;
    try {
        h = LuFactorization(id - p + p_star).solve(id - p_star);
    } catch (const SingularMatrix& e) {
        throw Error(std::string("internal error: I - P + P* is singular (") + e.what() +
                    "); the Cesaro limit is probably inaccurate");
    }
    const double sigma = spectral_radius(h);
    return {std::move(h), sigma};
}

inline DrazinResult drazin(const Matrix& p) { return drazin(p, cesaro_limit(p)); }

/// g = P* R_pi.
inline Matrix gain(const Momdp& m, const StochasticPolicy& pi) {
    const InducedChain c = induce(m, pi);
    return cesaro_limit(c.P) * c.R;
}

/// Discount threshold sigma / (sigma + 1) above which the Laurent series converges.
inline double laurent_threshold(double sigma) { return sigma / (sigma + 1.0); }

struct LaurentResult {
    Matrix V;
    std::size_t terms = 0;
};

/**
 * V = g / (1 - gamma) + (1 / gamma) sum_n ((gamma - 1) / gamma)^n H^(n+1) R_pi.
 *
 * With `n_terms` set exactly that many series terms are summed. Otherwise
 * terms are added until one has max-norm below 1e-12, failing with
 * GammaTooCloseToThreshold after 10^4 terms.
 */
inline LaurentResult laurent_value(const InducedChain& chain, const Matrix& g, const DrazinResult& dz,
                                   double gamma, std::optional<std::size_t> n_terms = std::nullopt) {
    const double lower = laurent_threshold(dz.sigma);
    if (!(gamma > lower && gamma < 1.0)) throw GammaOutOfRange(gamma, lower);
    if (n_terms && *n_terms == 0) throw ShapeMismatch("n_terms must be at least 1");

    const double ratio = (gamma - 1.0) / gamma;
    Matrix v = (1.0 / (1.0 - gamma)) * g;
    Matrix term = dz.H * chain.R;  // ratio^n H^(n+1) R at step n
    const std::size_t cap = n_terms.value_or(kLaurentMaxTerms);
    std::size_t used = 0;
    for (; used < cap; ++used) {
        if (!n_terms && max_abs(term) < kLaurentTermTol) break;
        v += (1.0 / gamma) * term;
        term = ratio * (dz.H * term);
    }
    if (!n_terms && used == cap)
        throw GammaTooCloseToThreshold("Laurent series needs more than " + std::to_string(cap) +
                                       " terms at gamma " + std::to_string(gamma) + " (threshold " +
                                       std::to_string(lower) + ")");
    return {std::move(v), used};
}

inline LaurentResult laurent_value(const Momdp& m, const StochasticPolicy& pi,
                                   std::optional<std::size_t> n_terms = std::nullopt) {
    const InducedChain c = induce(m, pi);
    const Matrix p_star = cesaro_limit(c.P);
    const DrazinResult dz = drazin(c.P, p_star);
    return laurent_value(c, p_star * c.R, dz, m.gamma, n_terms);
}

/// Everything known exactly about one stationary policy.
struct ExactEvaluation {
    InducedChain chain;
    Matrix V;        ///< S x D discounted values
    Vector x_gamma;  ///< discounted occupation over states
    Matrix P_star;   ///< Cesaro limit of P_pi^n
    Matrix g;        ///< S x D gain
    Vector x_stat;   ///< mu0 P_star
    Matrix H;        ///< Drazin inverse of I - P_pi
    double sigma_H = 0.0;

    /// mu0 V (discounted objective vector).
    Vector discounted_objectives(std::span<const double> mu0) const { return vec_mat(mu0, V); }
    /// mu0 g (average-reward objective vector).
    Vector average_objectives(std::span<const double> mu0) const { return vec_mat(mu0, g); }
};

inline ExactEvaluation evaluate(const Momdp& m, const StochasticPolicy& pi) {
    ExactEvaluation e;
    e.chain = induce(m, pi);
    e.V = value_discounted(e.chain, m.gamma);
    e.x_gamma = occupation_discounted(e.chain, m.mu0, m.gamma);
    e.P_star = cesaro_limit(e.chain.P);
    e.g = e.P_star * e.chain.R;
    e.x_stat = vec_mat(m.mu0, e.P_star);
    DrazinResult dz = drazin(e.chain.P, e.P_star);
    e.H = std::move(dz.H);
    e.sigma_H = dz.sigma;
    return e;
}

/// Largest spread between rows of a matrix (0 when all rows are equal).
inline double row_spread(const Matrix& a) {
    double worst = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) {
        double lo = a(0, j), hi = a(0, j);
        for (std::size_t i = 1; i < a.rows(); ++i) lo = std::min(lo, a(i, j)), hi = std::max(hi, a(i, j));
        worst = std::max(worst, hi - lo);
    }
    return worst;
}

} // namespace fairmo
