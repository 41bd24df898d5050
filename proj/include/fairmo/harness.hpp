#pragma once

// Train-then-test experiments: per-seed training, test rollouts of the final
// policy, welfare and inequality metrics, and deterministic CSV output.
//
// Output files (written to ExperimentConfig::output_dir):
//   runs.csv     seed,rollout,obj_0,...,obj_{D-1}   one row per test rollout
//   summary.csv  seed,ggf_score,cv,min,max,mean     one row per seed
//   config.json  the configuration echo
// Floats are printed in shortest round-trip form, so re-reading runs.csv and
// recomputing the metrics reproduces summary.csv exactly.

#include "fairmo/agents.hpp"
#include "fairmo/envs.hpp"
#include "fairmo/errors.hpp"
#include "fairmo/ggf.hpp"
#include "fairmo/momdp.hpp"
#include "fairmo/numkit.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fairmo {

// ---------------------------------------------------------------------------
// Metrics

/// Componentwise mean of a list of return vectors.
inline Vector mean_vector(std::span<const Vector> returns) {
    if (returns.empty()) throw Empty("need at least one return vector");
    Vector m(returns.front().size(), 0.0);
    for (const auto& r : returns) {
        if (r.size() != m.size()) throw DimensionMismatch("return vectors differ in length");
        for (std::size_t d = 0; d < m.size(); ++d) m[d] += r[d];
    }
    for (double& x : m) x /= static_cast<double>(returns.size());
    return m;
}

/// GGF of the average return vector (average first, welfare second).
inline double ggf_score(std::span<const Vector> returns, const GgfWeights& w) { return ggf(w, mean_vector(returns)); }

inline double mean_of(std::span<const double> v) {
    if (v.empty()) throw Empty("mean of an empty vector");
    double total = 0.0;
    for (double x : v) total += x;
    return total / static_cast<double>(v.size());
}

inline double min_of(std::span<const double> v) {
    if (v.empty()) throw Empty("min of an empty vector");
    return *std::min_element(v.begin(), v.end());
}

inline double max_of(std::span<const double> v) {
    if (v.empty()) throw Empty("max of an empty vector");
    return *std::max_element(v.begin(), v.end());
}

/// Population standard deviation over mean.
inline double cv(std::span<const double> v) {
    const double m = mean_of(v);
    if (m == 0.0) throw ZeroMean("coefficient of variation is undefined for zero mean");
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size())) / m;
}

struct Metrics {
    double ggf_score = 0.0;
    double cv = 0.0;
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
};

inline Metrics compute_metrics(std::span<const Vector> returns, const GgfWeights& w) {
    const Vector avg = mean_vector(returns);
    Metrics m{ggf(w, avg), 0.0, min_of(avg), max_of(avg), mean_of(avg)};
    m.cv = m.mean == 0.0 ? std::numeric_limits<double>::quiet_NaN() : cv(avg);
    return m;
}

/// Shortest decimal string that parses back to exactly `x`.
inline std::string format_double(double x) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, p);
}

// ---------------------------------------------------------------------------
// Experiments

struct ExperimentConfig {
    std::string env = "species:5x5";
    double env_gamma = 0.99;
    std::string agent = "ggf-a2c";
    std::string weights = "geo2";
    TrainConfig train;
    std::size_t rollouts = 50;
    bool discounted_test = false;  ///< test returns are sum gamma^t r_t instead of sum r_t / horizon
    std::vector<std::uint64_t> seeds{0};
    std::string output_dir;        ///< empty: write nothing
    std::size_t threads = 1;

    void validate() const {
        if (rollouts == 0) throw BadParams("rollout count must be at least 1");
        if (seeds.empty()) throw BadParams("need at least one seed");
        if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
            throw BadParams("seeds must be distinct");
        if (threads == 0) throw BadParams("threads must be at least 1");
        parse_agent_id(agent);
        parse_weight_preset(weights);
        train.validate();
    }
};

inline nlohmann::json to_json(const ExperimentConfig& c) {
    nlohmann::json train = to_json(c.train);
    train.erase("seed");
    train.erase("weights");
    return {{"env", c.env},         {"env_gamma", c.env_gamma},           {"agent", c.agent},
            {"weights", c.weights}, {"train", train},                     {"rollouts", c.rollouts},
            {"discounted_test", c.discounted_test}, {"seeds", c.seeds}};
}

/**
 * Schema: {"env", "env_gamma", "agent", "weights", "train": {TrainConfig
 * fields}, "rollouts", "discounted_test", "seeds", "output_dir", "threads"};
 * every key is optional. The train seed and weights come from the top level.
 */
inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j, ExperimentConfig base = {}) {
    if (!j.is_object()) throw ParseError("experiment config must be a JSON object");
    try {
        for (const auto& [k, v] : j.items()) {
            if (k == "env") base.env = v.get<std::string>();
            else if (k == "env_gamma") base.env_gamma = v.get<double>();
            else if (k == "agent") base.agent = v.get<std::string>();
            else if (k == "weights") base.weights = v.get<std::string>();
            else if (k == "train") base.train = train_config_from_json(v, base.train);
            else if (k == "rollouts") base.rollouts = v.get<std::size_t>();
            else if (k == "discounted_test") base.discounted_test = v.get<bool>();
            else if (k == "seeds") base.seeds = v.get<std::vector<std::uint64_t>>();
            else if (k == "output_dir") base.output_dir = v.get<std::string>();
            else if (k == "threads") base.threads = v.get<std::size_t>();
            else throw ParseError("unknown experiment config key '" + k + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("experiment config: ") + e.what());
    }
    base.validate();
    return base;
}

struct RunRecord {
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::vector<Vector> train_returns;
    std::vector<Vector> test_returns;
    StochasticPolicy policy = StochasticPolicy::uniform(1, 1);
    Metrics metrics;
    std::string error;  ///< non-empty when this seed failed

    bool ok() const noexcept { return error.empty(); }
};

/// FNV-1a of the canonical config JSON.
inline std::uint64_t config_hash(const ExperimentConfig& c) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : to_json(c).dump()) h = (h ^ ch) * 1099511628211ull;
    return h;
}

/// Test-phase return of each of `n` rollouts of `pi`.
inline std::vector<Vector> test_returns(const Momdp& m, const StochasticPolicy& pi, std::size_t n,
                                        std::size_t horizon, bool discounted, double gamma, Rng& rng) {
    std::vector<Vector> out;
    for (std::size_t k = 0; k < n; ++k) {
        const Trajectory tr = rollout(m, pi, horizon, rng);
        Vector r(m.num_objectives, 0.0);
        double disc = 1.0;
        for (const Step& st : tr.steps) {
            for (std::size_t d = 0; d < r.size(); ++d) r[d] += (discounted ? disc : 1.0) * st.reward[d];
            disc *= gamma;
        }
        if (!discounted)
            for (double& x : r) x /= static_cast<double>(horizon);
        out.push_back(std::move(r));
    }
    return out;
}

inline RunRecord run_seed(const ExperimentConfig& cfg, const Momdp& m, std::uint64_t seed) {
    RunRecord rec;
    rec.config_hash = config_hash(cfg);
    rec.seed = seed;
    try {
        TrainConfig tc = cfg.train;
        tc.seed = seed;
        tc.weights = cfg.weights;
        TrainResult tr = train(m, parse_agent_id(cfg.agent), tc);
        rec.train_returns = std::move(tr.episode_returns);
        rec.policy = std::move(tr.policy);
        Rng test_rng = Rng(seed).derive(0x7e57);
        rec.test_returns = test_returns(m, rec.policy, cfg.rollouts, tc.horizon, cfg.discounted_test, tc.gamma, test_rng);
        rec.metrics = compute_metrics(rec.test_returns, make_weights(cfg.weights, m.num_objectives));
    } catch (const Error& e) {
        rec.error = e.what();
    }
    return rec;
}

namespace detail {

inline void write_atomically(const std::filesystem::path& path, const std::string& text) {
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw Error("cannot write " + tmp.string());
        out << text;
        if (!out) throw Error("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

} // namespace detail

inline std::string runs_csv(const std::vector<RunRecord>& records, std::size_t dims) {
    std::ostringstream out;
    out << "seed,rollout";
    for (std::size_t d = 0; d < dims; ++d) out << ",obj_" << d;
    out << '\n';
    for (const auto& r : records)
        for (std::size_t k = 0; k < r.test_returns.size(); ++k) {
            out << r.seed << ',' << k;
            for (double x : r.test_returns[k]) out << ',' << format_double(x);
            out << '\n';
        }
    return out.str();
}

inline std::string summary_csv(const std::vector<RunRecord>& records) {
    std::ostringstream out;
    out << "seed,ggf_score,cv,min,max,mean\n";
    for (const auto& r : records) {
        if (!r.ok()) continue;
        const Metrics& m = r.metrics;
        out << r.seed << ',' << format_double(m.ggf_score) << ',' << format_double(m.cv) << ','
            << format_double(m.min) << ',' << format_double(m.max) << ',' << format_double(m.mean) << '\n';
    }
    return out.str();
}

/**
 * Trains and tests one agent per seed. Seeds run on up to `cfg.threads`
 * workers with no shared mutable state; records come back in seed-list order,
 * so the output is identical for any thread count. A failing seed is recorded
 * with its error and the remaining seeds still run.
 */
inline std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const Momdp m = make_env(cfg.env, cfg.env_gamma).model;
    std::vector<RunRecord> records(cfg.seeds.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < cfg.seeds.size();) records[i] = run_seed(cfg, m, cfg.seeds[i]);
    };
    const std::size_t n = std::min(cfg.threads, cfg.seeds.size());
    if (n <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    }

    if (!cfg.output_dir.empty()) {
        const std::filesystem::path dir(cfg.output_dir);
        std::filesystem::create_directories(dir);
        detail::write_atomically(dir / "runs.csv", runs_csv(records, m.num_objectives));
        detail::write_atomically(dir / "summary.csv", summary_csv(records));
        detail::write_atomically(dir / "config.json", to_json(cfg).dump(2) + "\n");
    }
    return records;
}

/// Parses runs.csv back into per-seed return lists, in file order.
inline std::vector<std::pair<std::uint64_t, std::vector<Vector>>> parse_runs_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("runs.csv is empty");
    std::vector<std::pair<std::uint64_t, std::vector<Vector>>> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
        if (cells.size() < 3) throw ParseError("runs.csv line " + std::to_string(lineno) + " has too few columns");
        std::uint64_t seed = 0;
        std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), seed);
        Vector r;
        for (std::size_t c = 2; c < cells.size(); ++c) {
            double x = 0.0;
            auto [p, ec] = std::from_chars(cells[c].data(), cells[c].data() + cells[c].size(), x);
            if (ec != std::errc{}) throw ParseError("runs.csv line " + std::to_string(lineno) + ": bad number");
            r.push_back(x);
        }
        if (out.empty() || out.back().first != seed) out.push_back({seed, {}});
        out.back().second.push_back(std::move(r));
    }
    return out;
}

} // namespace fairmo
