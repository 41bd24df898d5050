#pragma once

// Dense linear algebra, a dense-tableau simplex solver and a portable PRNG.
// Everything here is sized for desk-scale models (tens of states), so the
// implementations favour robustness and reproducibility over speed.

#include "fairmo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fairmo {

using Vector = std::vector<double>;

/// Pivots with magnitude below this are treated as exact zeros by the LU.
inline constexpr double kSingularPivot = 1e-12;
/// Absolute primal feasibility tolerance used by the simplex solver.
inline constexpr double kFeasibilityTol = 1e-8;

/// Row-major dense matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {
        if (rows == 0 || cols == 0)
            throw ShapeMismatch("matrix dimensions must be positive");
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix from_rows(const std::vector<Vector>& rows) {
        if (rows.empty()) throw ShapeMismatch("matrix needs at least one row");
        Matrix m(rows.size(), rows.front().size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != m.cols_) throw ShapeMismatch("ragged rows");
            std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
        }
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }

    Vector col(std::size_t j) const {
        Vector c(rows_);
        for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
        return c;
    }
    void set_col(std::size_t j, std::span<const double> v) {
        for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
    }

    const std::vector<double>& data() const noexcept { return data_; }
    std::vector<double>& data() noexcept { return data_; }

    bool square() const noexcept { return rows_ == cols_; }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
    }

    Matrix transposed() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    Matrix& operator+=(const Matrix& o) {
        require_same_shape(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
        return *this;
    }
    Matrix& operator-=(const Matrix& o) {
        require_same_shape(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
        return *this;
    }
    Matrix& operator*=(double s) noexcept {
        for (double& x : data_) x *= s;
        return *this;
    }

    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator*(Matrix a, double s) { return a *= s; }
    friend Matrix operator*(double s, Matrix a) { return a *= s; }

    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        if (a.cols_ != b.rows_) throw ShapeMismatch("matrix product inner dimensions differ");
        Matrix c(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const double aik = a(i, k);
                if (aik == 0.0) continue;
                for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
            }
        return c;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    void require_same_shape(const Matrix& o) const {
        if (rows_ != o.rows_ || cols_ != o.cols_) throw ShapeMismatch("matrix shapes differ");
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// y = A x
inline Vector mat_vec(const Matrix& a, std::span<const double> x) {
    if (x.size() != a.cols()) throw ShapeMismatch("mat_vec length mismatch");
    Vector y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

/// y = x A (x treated as a row vector)
inline Vector vec_mat(std::span<const double> x, const Matrix& a) {
    if (x.size() != a.rows()) throw ShapeMismatch("vec_mat length mismatch");
    Vector y(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        if (x[i] == 0.0) continue;
        for (std::size_t j = 0; j < a.cols(); ++j) y[j] += x[i] * a(i, j);
    }
    return y;
}

/// Maximum absolute row sum (the operator norm induced by the max norm).
inline double norm_inf(const Matrix& a) {
    double best = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (double x : a.row(i)) s += std::abs(x);
        best = std::max(best, s);
    }
    return best;
}

inline double norm_inf(std::span<const double> v) {
    double best = 0.0;
    for (double x : v) best = std::max(best, std::abs(x));
    return best;
}

/// Largest absolute entry.
inline double max_abs(const Matrix& a) { return norm_inf(std::span<const double>(a.data())); }

inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeMismatch("dot length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// ---------------------------------------------------------------------------
// LU with partial pivoting

class LuFactorization {
public:
    explicit LuFactorization(Matrix a) : lu_(std::move(a)), perm_(lu_.rows()) {
        if (!lu_.square()) throw ShapeMismatch("LU needs a square matrix");
        const std::size_t n = lu_.rows();
        std::iota(perm_.begin(), perm_.end(), std::size_t{0});
        for (std::size_t k = 0; k < n; ++k) {
            std::size_t p = k;
            double best = std::abs(lu_(k, k));
            for (std::size_t i = k + 1; i < n; ++i)
                if (std::abs(lu_(i, k)) > best) best = std::abs(lu_(i, k)), p = i;
            if (best < kSingularPivot)
                throw SingularMatrix("pivot " + std::to_string(best) + " at column " + std::to_string(k));
            if (p != k) {
                std::swap_ranges(lu_.row(k).begin(), lu_.row(k).end(), lu_.row(p).begin());
                std::swap(perm_[k], perm_[p]);
            }
            const double pivot = lu_(k, k);
            for (std::size_t i = k + 1; i < n; ++i) {
                const double f = lu_(i, k) / pivot;
                lu_(i, k) = f;
                if (f == 0.0) continue;
                for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= f * lu_(k, j);
            }
        }
    }

    std::size_t size() const noexcept { return lu_.rows(); }

    Vector solve(std::span<const double> b) const {
        const std::size_t n = lu_.rows();
        if (b.size() != n) throw ShapeMismatch("rhs length does not match matrix");
        Vector x(n);
        for (std::size_t i = 0; i < n; ++i) {
            double s = b[perm_[i]];
            for (std::size_t j = 0; j < i; ++j) s -= lu_(i, j) * x[j];
            x[i] = s;
        }
        for (std::size_t i = n; i-- > 0;) {
            double s = x[i];
            for (std::size_t j = i + 1; j < n; ++j) s -= lu_(i, j) * x[j];
            x[i] = s / lu_(i, i);
        }
        return x;
    }

    /// Solves A X = B column by column.
    Matrix solve(const Matrix& b) const {
        if (b.rows() != lu_.rows()) throw ShapeMismatch("rhs rows do not match matrix");
        Matrix x(b.rows(), b.cols());
        for (std::size_t j = 0; j < b.cols(); ++j) x.set_col(j, solve(b.col(j)));
        return x;
    }

private:
    Matrix lu_;
    std::vector<std::size_t> perm_;
};

inline Vector lu_solve(const Matrix& a, std::span<const double> b) {
    if (!a.square()) throw ShapeMismatch("lu_solve needs a square matrix");
    if (b.size() != a.rows()) throw ShapeMismatch("lu_solve rhs length mismatch");
    return LuFactorization(a).solve(b);
}

// ---------------------------------------------------------------------------
// Spectral radius

/**
 * Spectral radius via the Gelfand formula rho(A) = lim ||A^k||^(1/k).
 *
 * The power A^(2^j) is formed by repeated squaring; after every squaring the
 * iterate is renormalised to unit max-norm and the discarded scale is kept in
 * log space, so neither overflow nor underflow occurs. Iteration stops when
 * two successive estimates differ by less than `tol`.
 */
inline double spectral_radius(const Matrix& a, double tol = 1e-12, int max_squarings = 200) {
    if (!a.square()) throw ShapeMismatch("spectral_radius needs a square matrix");
    if (!(tol > 0.0)) throw ShapeMismatch("spectral_radius tolerance must be positive");

    Matrix m = a;
    double log_scale = 0.0;  // log of the factor removed from A^(2^j)
    double power = 1.0;      // 2^j
    double previous = std::numeric_limits<double>::infinity();
    for (int j = 0; j <= max_squarings; ++j) {
        const double n = norm_inf(m);
        if (n == 0.0) return 0.0;
        const double estimate = std::exp((std::log(n) + log_scale) / power);
        if (std::abs(estimate - previous) < tol) return estimate;
        previous = estimate;
        m *= 1.0 / n;
        log_scale = 2.0 * (log_scale + std::log(n));
        power *= 2.0;
        m = m * m;
    }
    throw NoConvergence("spectral radius estimate did not stabilise after " +
                        std::to_string(max_squarings) + " squarings");
}

// ---------------------------------------------------------------------------
// Linear programming

enum class Relation { LessEqual, Equal, GreaterEqual };

struct LinearConstraint {
    Vector coeffs;
    Relation relation = Relation::LessEqual;
    double rhs = 0.0;
};

/// maximize objective . x subject to constraints and per-variable bounds.
/// A lower bound of -infinity makes the variable free.
struct LinearProgram {
    Vector objective;
    std::vector<LinearConstraint> constraints;
    Vector lower;
    Vector upper;

    LinearProgram() = default;
    explicit LinearProgram(std::size_t num_vars)
        : objective(num_vars, 0.0),
          lower(num_vars, 0.0),
          upper(num_vars, std::numeric_limits<double>::infinity()) {}

    std::size_t num_vars() const noexcept { return objective.size(); }

    void add(Vector coeffs, Relation rel, double rhs) {
        constraints.push_back({std::move(coeffs), rel, rhs});
    }

    void validate() const {
        const std::size_t n = objective.size();
        if (lower.size() != n || upper.size() != n) throw ShapeMismatch("bound vectors differ in length");
        for (const auto& c : constraints) {
            if (c.coeffs.size() != n) throw ShapeMismatch("constraint length differs from objective");
            if (!std::isfinite(c.rhs)) throw ShapeMismatch("constraint rhs must be finite");
        }
        for (std::size_t j = 0; j < n; ++j)
            if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] > upper[j] ||
                lower[j] == std::numeric_limits<double>::infinity())
                throw ShapeMismatch("invalid bounds on variable " + std::to_string(j));
    }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

inline std::string_view to_string(LpStatus s) {
    switch (s) {
    case LpStatus::Optimal: return "Optimal";
    case LpStatus::Infeasible: return "Infeasible";
    case LpStatus::Unbounded: return "Unbounded";
    }
    return "?";
}

struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    Vector x;
    double value = 0.0;
    std::size_t pivots = 0;
};

struct SimplexOptions {
    std::size_t max_pivots = 100000;
    double pivot_tol = 1e-9;
};

namespace detail {

/// Dense tableau driven by Bland's rule. Columns [0, n) are variables, column
/// n is the right-hand side. `cost` holds reduced costs, `cost[n]` the negated
/// objective value.
class Tableau {
public:
    Tableau(std::size_t rows, std::size_t cols) : n_(cols), a_(rows, Vector(cols + 1, 0.0)), basis_(rows, 0) {}

    std::size_t rows() const noexcept { return a_.size(); }
    Vector& operator[](std::size_t i) noexcept { return a_[i]; }
    std::vector<std::size_t>& basis() noexcept { return basis_; }

    /// Installs a cost vector and prices out the current basis.
    void set_cost(const Vector& c) {
        cost_.assign(n_ + 1, 0.0);
        std::copy(c.begin(), c.end(), cost_.begin());
        for (std::size_t i = 0; i < a_.size(); ++i) {
            const double cb = c[basis_[i]];
            if (cb == 0.0) continue;
            for (std::size_t j = 0; j <= n_; ++j) cost_[j] -= cb * a_[i][j];
        }
    }

    void pivot(std::size_t r, std::size_t c) {
        Vector& pr = a_[r];
        const double inv = 1.0 / pr[c];
        for (double& x : pr) x *= inv;
        pr[c] = 1.0;
        auto eliminate = [&](Vector& row) {
            const double f = row[c];
            if (f == 0.0) return;
            for (std::size_t j = 0; j <= n_; ++j) {
                row[j] -= f * pr[j];
                if (std::abs(row[j]) < 1e-14) row[j] = 0.0;
            }
            row[c] = 0.0;
        };
        for (std::size_t i = 0; i < a_.size(); ++i)
            if (i != r) eliminate(a_[i]);
        eliminate(cost_);
        basis_[r] = c;
    }

    enum class Outcome { Optimal, Unbounded };

    /**
     * Runs primal simplex from the current basic feasible solution.
     *
     * Entering variable by largest reduced cost; leaving row by a two-pass
     * (Harris) ratio test that prefers the largest pivot among near-ties.
     * After a long run of degenerate pivots the rule falls back to Bland's
     * smallest-index choice, which cannot cycle.
     */
    Outcome run(const std::vector<bool>& allowed, const SimplexOptions& opt, std::size_t& pivots) {
        constexpr double kRatioSlack = 1e-9;
        constexpr std::size_t kDegenerateLimit = 50;
        std::size_t degenerate_run = 0;
        for (;;) {
            const bool bland = degenerate_run >= kDegenerateLimit;
            std::size_t enter = n_;
            double best_cost = opt.pivot_tol;
            for (std::size_t j = 0; j < n_; ++j) {
                if (!allowed[j] || cost_[j] <= best_cost) continue;
                enter = j;
                if (bland) break;
                best_cost = cost_[j];
            }
            if (enter == n_) return Outcome::Optimal;

            double bound = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < a_.size(); ++i) {
                const double aij = a_[i][enter];
                if (aij > opt.pivot_tol) bound = std::min(bound, (std::max(a_[i][n_], 0.0) + kRatioSlack) / aij);
            }
            if (bound == std::numeric_limits<double>::infinity()) return Outcome::Unbounded;

            std::size_t leave = a_.size();
            for (std::size_t i = 0; i < a_.size(); ++i) {
                const double aij = a_[i][enter];
                if (aij <= opt.pivot_tol || std::max(a_[i][n_], 0.0) / aij > bound) continue;
                if (leave == a_.size()) { leave = i; continue; }
                const bool better = bland ? basis_[i] < basis_[leave] : aij > a_[leave][enter];
                if (better) leave = i;
            }
            if (++pivots > opt.max_pivots)
                throw IterationLimit("simplex exceeded " + std::to_string(opt.max_pivots) + " pivots");
            degenerate_run = a_[leave][n_] <= kRatioSlack ? degenerate_run + 1 : 0;
            pivot(leave, enter);
            for (auto& row : a_)
                if (row[n_] < 0.0) row[n_] = 0.0;
        }
    }

    double rhs(std::size_t i) const noexcept { return a_[i][n_]; }
    double objective_value() const noexcept { return -cost_[n_]; }

    void erase_row(std::size_t i) {
        a_.erase(a_.begin() + static_cast<std::ptrdiff_t>(i));
        basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(i));
    }

private:
    std::size_t n_;
    std::vector<Vector> a_;
    std::vector<std::size_t> basis_;
    Vector cost_;
};

} // namespace detail

/**
 * Two-phase dense-tableau primal simplex with Bland's anti-cycling rule.
 *
 * Variables are shifted to a zero lower bound (free variables are split into
 * a difference of two nonnegative ones); finite upper bounds become explicit
 * rows. Phase one minimises the sum of artificials, redundant equality rows
 * are dropped, then phase two optimises the real objective.
 */
inline LpResult simplex_solve(const LinearProgram& lp, const SimplexOptions& opt = {}) {
    lp.validate();
    const std::size_t n = lp.num_vars();
    constexpr double inf = std::numeric_limits<double>::infinity();

    // Column mapping: original x_j = shift_j + sum_k sign_k * x'_k.
    struct Part { std::size_t col; double sign; };
    std::vector<std::vector<Part>> parts(n);
    Vector shift(n, 0.0);
    std::size_t num_cols = 0;
    struct Row { Vector coeffs; Relation rel; double rhs; };
    std::vector<Row> rows;

    for (std::size_t j = 0; j < n; ++j) {
        if (std::isfinite(lp.lower[j])) {
            shift[j] = lp.lower[j];
            parts[j].push_back({num_cols++, 1.0});
        } else if (std::isfinite(lp.upper[j])) {
            shift[j] = lp.upper[j];
            parts[j].push_back({num_cols++, -1.0});
        } else {
            parts[j].push_back({num_cols++, 1.0});
            parts[j].push_back({num_cols++, -1.0});
        }
    }
    auto expand = [&](const Vector& c, double& constant) {
        Vector out(num_cols, 0.0);
        constant = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            constant += c[j] * shift[j];
            for (const Part& p : parts[j]) out[p.col] += p.sign * c[j];
        }
        return out;
    };
    for (const auto& c : lp.constraints) {
        double k = 0.0;
        Vector e = expand(c.coeffs, k);
        rows.push_back({std::move(e), c.relation, c.rhs - k});
    }
    for (std::size_t j = 0; j < n; ++j)
        if (std::isfinite(lp.lower[j]) && lp.upper[j] < inf) {
            Vector e(num_cols, 0.0);
            e[parts[j][0].col] = 1.0;
            rows.push_back({std::move(e), Relation::LessEqual, lp.upper[j] - lp.lower[j]});
        }
    double obj_constant = 0.0;
    const Vector obj = expand(lp.objective, obj_constant);

    for (Row& r : rows)
        if (r.rhs < 0.0) {
            for (double& x : r.coeffs) x = -x;
            r.rhs = -r.rhs;
            if (r.rel == Relation::LessEqual) r.rel = Relation::GreaterEqual;
            else if (r.rel == Relation::GreaterEqual) r.rel = Relation::LessEqual;
        }

    std::size_t num_slack = 0, num_art = 0;
    for (const Row& r : rows) {
        if (r.rel != Relation::Equal) ++num_slack;
        if (r.rel != Relation::LessEqual) ++num_art;
    }
    const std::size_t first_slack = num_cols;
    const std::size_t first_art = num_cols + num_slack;
    const std::size_t total = first_art + num_art;

    detail::Tableau t(rows.size(), total);
    std::size_t slack = first_slack, art = first_art;
    double rhs_scale = 1.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        Vector& tr = t[i];
        std::copy(rows[i].coeffs.begin(), rows[i].coeffs.end(), tr.begin());
        tr[total] = rows[i].rhs;
        rhs_scale = std::max(rhs_scale, rows[i].rhs);
        switch (rows[i].rel) {
        case Relation::LessEqual:
            tr[slack] = 1.0;
            t.basis()[i] = slack++;
            break;
        case Relation::GreaterEqual:
            tr[slack++] = -1.0;
            tr[art] = 1.0;
            t.basis()[i] = art++;
            break;
        case Relation::Equal:
            tr[art] = 1.0;
            t.basis()[i] = art++;
            break;
        }
    }

    LpResult result;
    std::vector<bool> allowed(total, true);

    if (num_art > 0) {
        Vector phase1(total, 0.0);
        for (std::size_t j = first_art; j < total; ++j) phase1[j] = -1.0;
        t.set_cost(phase1);
        t.run(allowed, opt, result.pivots);
        if (t.objective_value() < -kFeasibilityTol * rhs_scale) {
            result.status = LpStatus::Infeasible;
            return result;
        }
        // Drive remaining artificials out of the basis or drop redundant rows.
        for (std::size_t i = 0; i < t.rows();) {
            if (t.basis()[i] < first_art) { ++i; continue; }
            std::size_t c = first_art;
            double best = opt.pivot_tol;
            for (std::size_t j = 0; j < first_art; ++j)
                if (std::abs(t[i][j]) > best) { best = std::abs(t[i][j]); c = j; }
            if (c == first_art) {
                t.erase_row(i);
            } else {
                t.pivot(i, c);
                ++i;
            }
        }
        for (std::size_t j = first_art; j < total; ++j) allowed[j] = false;
    }

    Vector phase2(total, 0.0);
    std::copy(obj.begin(), obj.end(), phase2.begin());
    t.set_cost(phase2);
    if (t.run(allowed, opt, result.pivots) == detail::Tableau::Outcome::Unbounded) {
        result.status = LpStatus::Unbounded;
        return result;
    }

    Vector xs(total, 0.0);
    for (std::size_t i = 0; i < t.rows(); ++i) xs[t.basis()[i]] = std::max(t.rhs(i), 0.0);
    result.x.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double v = shift[j];
        for (const Part& p : parts[j]) v += p.sign * xs[p.col];
        result.x[j] = v;
    }
    result.value = dot(lp.objective, result.x);
    result.status = LpStatus::Optimal;
    return result;
}

/// Largest violation of any constraint or bound at x (0 when feasible).
inline double lp_violation(const LinearProgram& lp, std::span<const double> x) {
    double worst = 0.0;
    for (const auto& c : lp.constraints) {
        const double lhs = dot(c.coeffs, x);
        double v = 0.0;
        switch (c.relation) {
        case Relation::LessEqual: v = lhs - c.rhs; break;
        case Relation::GreaterEqual: v = c.rhs - lhs; break;
        case Relation::Equal: v = std::abs(lhs - c.rhs); break;
        }
        worst = std::max(worst, v);
    }
    for (std::size_t j = 0; j < x.size(); ++j) {
        worst = std::max(worst, lp.lower[j] - x[j]);
        worst = std::max(worst, x[j] - lp.upper[j]);
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Random numbers

/**
 * SplitMix64 generator. The whole state is one 64-bit word and the output
 * function uses only integer arithmetic, so a given seed produces the same
 * stream on every platform and compiler.
 */
class Rng {
public:
    static constexpr std::string_view algorithm = "splitmix64";

    explicit Rng(std::uint64_t seed = 0) noexcept : state_(seed), seed_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t state() const noexcept { return state_; }

    std::uint64_t next_u64() noexcept {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double next_float() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n) without modulo bias.
    std::size_t next_index(std::size_t n) {
        if (n == 0) throw BadDistribution("next_index needs n > 0");
        const std::uint64_t bound = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t x;
        do { x = next_u64(); } while (x >= limit);
        return static_cast<std::size_t>(x % bound);
    }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * next_float(); }

    /// Exponential(1) variate.
    double exponential() noexcept { return -std::log1p(-next_float()); }

    /// Samples an index according to `probs`.
    std::size_t choice(std::span<const double> probs) {
        if (probs.empty()) throw BadDistribution("empty distribution");
        double total = 0.0;
        for (double p : probs) {
            if (!(p >= 0.0) || !std::isfinite(p)) throw BadDistribution("negative or non-finite probability");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-9) throw BadDistribution("probabilities sum to " + std::to_string(total));
        const double u = next_float();
        double cum = 0.0;
        std::size_t last_positive = 0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            if (probs[i] <= 0.0) continue;
            cum += probs[i];
            last_positive = i;
            if (u < cum) return i;
        }
        return last_positive;
    }

    /// Independent generator for a numbered sub-stream (e.g. a worker index).
    Rng derive(std::uint64_t stream) const noexcept {
        Rng tmp(seed_ ^ (0xD1B54A32D192ED03ULL * (stream + 1)));
        return Rng(tmp.next_u64());
    }

private:
    std::uint64_t state_;
    std::uint64_t seed_;
};

} // namespace fairmo
