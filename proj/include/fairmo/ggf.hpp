#pragma once

// Generalized Gini social welfare function (GGF): weights sorted decreasingly
// applied to utilities sorted increasingly, so the worst-off objective always
// receives the largest weight.

#include "fairmo/errors.hpp"
#include "fairmo/numkit.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace fairmo {

/// Strictly decreasing positive weights summing to one.
class GgfWeights {
public:
    /// Normalises `raw` and validates the invariants.
    static GgfWeights normalized(std::span<const double> raw) {
        if (raw.empty()) throw InvalidPreset("weights need at least one component");
        double total = 0.0;
        for (double x : raw) {
            if (!(x > 0.0) || !std::isfinite(x)) throw InvalidPreset("weights must be positive and finite");
            total += x;
        }
        Vector w(raw.begin(), raw.end());
        for (double& x : w) x /= total;
        return GgfWeights(std::move(w));
    }

    explicit GgfWeights(Vector w) : w_(std::move(w)) {
        if (w_.empty()) throw InvalidPreset("weights need at least one component");
        double total = 0.0;
        for (std::size_t i = 0; i < w_.size(); ++i) {
            if (!(w_[i] > 0.0) || !std::isfinite(w_[i])) throw InvalidPreset("weights must be positive and finite");
            if (i > 0 && !(w_[i] < w_[i - 1]))
                throw InvalidPreset("weights must be strictly decreasing (index " + std::to_string(i) + ")");
            total += w_[i];
        }
        if (std::abs(total - 1.0) > 1e-12) throw InvalidPreset("weights sum to " + std::to_string(total));
    }

    std::size_t size() const noexcept { return w_.size(); }
    double operator[](std::size_t i) const noexcept { return w_[i]; }
    const Vector& values() const noexcept { return w_; }

private:
    Vector w_;
};

/// Stable ascending arg-sort: ties keep index order.
inline std::vector<std::size_t> ascending_order(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    return idx;
}

inline double ggf(const GgfWeights& w, std::span<const double> v) {
    if (w.size() != v.size())
        throw DimensionMismatch("weights have " + std::to_string(w.size()) + " components, utilities " +
                                std::to_string(v.size()));
    const auto order = ascending_order(v);
    double s = 0.0;
    for (std::size_t i = 0; i < order.size(); ++i) s += w[i] * v[order[i]];
    return s;
}

/// Minimum of the permuted weighted sums; brute force over all D! orders.
inline double ggf_minperm(const GgfWeights& w, std::span<const double> v) {
    if (w.size() != v.size()) throw DimensionMismatch("weights and utilities differ in length");
    if (v.size() > 8) throw DimensionTooLarge("permutation enumeration limited to D <= 8");
    std::vector<std::size_t> perm(v.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    double best = std::numeric_limits<double>::infinity();
    do {
        double s = 0.0;
        for (std::size_t i = 0; i < perm.size(); ++i) s += w[perm[i]] * v[i];
        best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

/**
 * Per-objective weight under the rank order of `v`: objective d receives the
 * weight of its ascending rank. Contracting a gradient with these weights is
 * the (super)gradient of ggf at v.
 */
inline Vector rank_weights(const GgfWeights& w, std::span<const double> v) {
    if (w.size() != v.size()) throw DimensionMismatch("weights and utilities differ in length");
    const auto order = ascending_order(v);
    Vector out(v.size());
    for (std::size_t rank = 0; rank < order.size(); ++rank) out[order[rank]] = w[rank];
    return out;
}

// ---------------------------------------------------------------------------
// Presets

inline constexpr double kDefaultPresetEpsilon = 1e-6;

struct GeometricPreset { double base = 2.0; };
struct UtilitarianPreset { double epsilon = kDefaultPresetEpsilon; };
struct MaxminPreset { double epsilon = kDefaultPresetEpsilon; };
struct CustomPreset { Vector raw; };

using WeightPreset = std::variant<GeometricPreset, UtilitarianPreset, MaxminPreset, CustomPreset>;

inline GgfWeights make_weights(const WeightPreset& preset, std::size_t dims) {
    if (dims == 0) throw InvalidPreset("need at least one objective");
    Vector raw(dims);
    if (const auto* g = std::get_if<GeometricPreset>(&preset)) {
        if (!(g->base > 1.0)) throw InvalidPreset("geometric base must exceed 1");
        for (std::size_t i = 0; i < dims; ++i) raw[i] = std::pow(g->base, -static_cast<double>(i));
    } else if (const auto* u = std::get_if<UtilitarianPreset>(&preset)) {
        if (!(u->epsilon > 0.0 && u->epsilon < 1e-2)) throw InvalidPreset("utilitarian epsilon must be in (0, 0.01)");
        // Near-uniform with a small decreasing ramp to keep the order strict.
        for (std::size_t i = 0; i < dims; ++i) raw[i] = 1.0 + u->epsilon * static_cast<double>(dims - 1 - i);
    } else if (const auto* m = std::get_if<MaxminPreset>(&preset)) {
        if (!(m->epsilon > 0.0 && m->epsilon < 1e-2)) throw InvalidPreset("maxmin epsilon must be in (0, 0.01)");
        raw[0] = 1.0;
        for (std::size_t i = 1; i < dims; ++i) raw[i] = m->epsilon * static_cast<double>(dims - i);
    } else {
        const auto& c = std::get<CustomPreset>(preset);
        if (c.raw.size() != dims)
            throw InvalidPreset("custom weights have " + std::to_string(c.raw.size()) + " components, need " +
                                std::to_string(dims));
        for (std::size_t i = 0; i < dims; ++i) {
            if (!(c.raw[i] > 0.0)) throw InvalidPreset("custom weights must be positive");
            if (i > 0 && !(c.raw[i] < c.raw[i - 1])) throw InvalidPreset("custom weights must be strictly decreasing");
        }
        raw = c.raw;
    }
    return GgfWeights::normalized(raw);
}

/**
 * Parses a preset name: "geo2", "geo10", "geo<base>", "utilitarian", "maxmin",
 * or "custom:[a,b,...]".
 */
inline WeightPreset parse_weight_preset(std::string_view id) {
    auto parse_double = [&](std::string_view s) {
        while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
        while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
        double x = 0.0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
        if (ec != std::errc{} || p != s.data() + s.size() || s.empty())
            throw InvalidPreset("cannot parse number '" + std::string(s) + "' in weights id");
        return x;
    };
    if (id == "utilitarian") return UtilitarianPreset{};
    if (id == "maxmin") return MaxminPreset{};
    if (id.starts_with("geo")) {
        const double base = parse_double(id.substr(3));
        if (!(base > 1.0)) throw InvalidPreset("geometric base must exceed 1");
        return GeometricPreset{base};
    }
    if (id.starts_with("custom:")) {
        std::string_view body = id.substr(7);
        if (body.size() < 2 || body.front() != '[' || body.back() != ']')
            throw InvalidPreset("custom weights must look like custom:[a,b,...]");
        body = body.substr(1, body.size() - 2);
        CustomPreset c;
        while (!body.empty()) {
            const auto comma = body.find(',');
            c.raw.push_back(parse_double(body.substr(0, comma)));
            if (comma == std::string_view::npos) break;
            body.remove_prefix(comma + 1);
        }
        return c;
    }
    throw InvalidPreset("unknown weights id '" + std::string(id) + "'");
}

inline GgfWeights make_weights(std::string_view id, std::size_t dims) {
    return make_weights(parse_weight_preset(id), dims);
}

// ---------------------------------------------------------------------------
// Axiom predicates

/// Moves eps from v[i] to v[j] (v[i] > v[j], eps < v[i] - v[j]) and reports
/// whether welfare strictly increased. Always true for valid GGF weights.
inline bool check_pigou_dalton(const GgfWeights& w, std::span<const double> v, std::size_t i, std::size_t j,
                               double eps) {
    if (i >= v.size() || j >= v.size() || i == j) throw InvalidTransfer("transfer indices out of range");
    if (!(v[i] > v[j])) throw InvalidTransfer("donor must be strictly better off than recipient");
    if (!(eps > 0.0 && eps < v[i] - v[j])) throw InvalidTransfer("transfer must lie in (0, v_i - v_j)");
    Vector after(v.begin(), v.end());
    after[i] -= eps;
    after[j] += eps;
    return ggf(w, after) > ggf(w, v);
}

/// Weak Pareto dominance a >= b componentwise.
inline bool weakly_dominates(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionMismatch("vectors differ in length");
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] < b[i]) return false;
    return true;
}

/// a >= b componentwise with at least one strict inequality.
inline bool pareto_dominates(std::span<const double> a, std::span<const double> b) {
    if (!weakly_dominates(a, b)) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] > b[i]) return true;
    return false;
}

} // namespace fairmo
