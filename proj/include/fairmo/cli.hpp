#pragma once

// Command-line front end. `run_cli` is the whole program so tests can drive it
// in-process; tools/fairmo.cpp only forwards argv.
//
// Exit codes: 0 success, 1 runtime error, 2 usage error.

#include "fairmo/agents.hpp"
#include "fairmo/bounds.hpp"
#include "fairmo/envs.hpp"
#include "fairmo/errors.hpp"
#include "fairmo/exact.hpp"
#include "fairmo/ggf.hpp"
#include "fairmo/harness.hpp"
#include "fairmo/momdp.hpp"
#include "fairmo/optimal.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fairmo {

namespace cli_detail {

struct ModelSource {
    std::string instance;
    std::string env;
    std::optional<double> gamma;

    void add_to(CLI::App& app) {
        auto* i = app.add_option("--instance", instance, "MOMDP instance JSON file");
        auto* e = app.add_option("--env", env, "environment id, e.g. species:5x5 or garnet:8,3,2,3,7");
        i->excludes(e);
        app.add_option("--gamma", gamma, "override the discount factor");
    }

    Momdp load() const {
        if (instance.empty() && env.empty()) throw BadParams("give --instance or --env");
        Momdp m = instance.empty() ? make_env(env, gamma.value_or(0.99)).model : load_instance(instance);
        if (gamma) m = m.with_gamma(*gamma);
        return m;
    }
};

inline std::string num(double x) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(6) << x;
    return s.str();
}

inline std::string join(std::span<const double> v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + num(v[i]);
    return out;
}

inline void print_policy(std::ostream& out, const StochasticPolicy& pi) {
    for (std::size_t s = 0; s < pi.num_states(); ++s) out << "  s" << s << ' ' << join(pi.probabilities(s)) << '\n';
}

/// "3", "0-19" or "1,4,9" (ranges allowed inside lists).
inline std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(text);
    for (std::string part; std::getline(ss, part, ',');) {
        const auto dash = part.find('-');
        auto parse = [&](const std::string& s) {
            std::uint64_t x = 0;
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
            if (ec != std::errc{} || p != s.data() + s.size() || s.empty())
                throw BadParams("cannot parse seed '" + s + "'");
            return x;
        };
        if (dash == std::string::npos) {
            out.push_back(parse(part));
        } else {
            const auto lo = parse(part.substr(0, dash)), hi = parse(part.substr(dash + 1));
            if (hi < lo) throw BadParams("empty seed range '" + part + "'");
            for (auto s = lo; s <= hi; ++s) out.push_back(s);
        }
    }
    if (out.empty()) throw BadParams("empty seed list");
    return out;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const std::string& path, const std::string& text) { detail::write_atomically(path, text); }

inline void print_table(std::ostream& out, const InconsistencyTable& t) {
    out << "weights " << join(t.weights) << '\n';
    out << "  from s1: plan, J, GGF\n";
    for (std::size_t k = 0; k < t.from_s1.size(); ++k) {
        const auto& r = t.from_s1[k];
        out << "    " << std::left << std::setw(10) << r.plan << join(r.J) << "  " << num(r.ggf)
            << (k == t.best_plan_s1 ? "  <- optimal from s1" : "") << '\n';
    }
    out << "  from s2: action, J, GGF\n";
    for (std::size_t a = 0; a < 2; ++a) {
        const auto& r = t.from_s2[a];
        out << "    " << std::left << std::setw(10) << r.plan << join(r.J) << "  " << num(r.ggf)
            << (a == t.best_action_s2 ? "  <- preferred from s2" : "") << '\n';
    }
    out << "  inconsistent: " << (t.inconsistent ? "yes" : "no") << '\n';
}

} // namespace cli_detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    using namespace cli_detail;
    CLI::App app{"Fair multiobjective MDP toolkit: GGF-optimal planning, exact evaluation, bounds and learning agents"};
    app.name("fairmo");
    app.require_subcommand(1);

    // solve
    auto* solve = app.add_subcommand("solve", "GGF-optimal stationary policy by linear programming");
    ModelSource solve_src;
    solve_src.add_to(*solve);
    std::string solve_weights = "geo2", solve_criterion = "discounted", solve_policy_out;
    solve->add_option("--weights", solve_weights, "weights id: geo2, geo10, utilitarian, maxmin, custom:[..]");
    solve->add_option("--criterion", solve_criterion, "discounted or average")
        ->check(CLI::IsMember({"discounted", "average"}));
    solve->add_option("--policy-out", solve_policy_out, "write the optimal policy as JSON");

    // evaluate
    auto* evaluate_cmd = app.add_subcommand("evaluate", "exact evaluation of a stationary policy");
    ModelSource eval_src;
    eval_src.add_to(*evaluate_cmd);
    std::string eval_policy, eval_weights = "geo2";
    std::vector<std::size_t> eval_actions;
    auto* pol_opt = evaluate_cmd->add_option("--policy", eval_policy, "policy JSON file");
    auto* act_opt = evaluate_cmd->add_option("--actions", eval_actions, "deterministic action per state")
                        ->delimiter(',');
    pol_opt->excludes(act_opt);
    evaluate_cmd->add_option("--weights", eval_weights, "weights id for the GGF lines");

    // train
    auto* train_cmd = app.add_subcommand("train", "train agents and test their final policies");
    std::string tr_agent, tr_env, tr_weights, tr_config, tr_out = "out", tr_seeds;
    std::optional<std::uint64_t> tr_seed;
    std::optional<std::size_t> tr_episodes, tr_threads, tr_rollouts;
    bool tr_discounted = false;
    train_cmd->add_option("--agent", tr_agent, "ggf-ql, ggf-a2c, ggf-ppo, mean-ql, mean-a2c or mean-ppo");
    train_cmd->add_option("--env", tr_env, "environment id");
    train_cmd->add_option("--weights", tr_weights, "weights id");
    train_cmd->add_option("--config", tr_config, "experiment config JSON");
    auto* seed_opt = train_cmd->add_option("--seed", tr_seed, "single seed");
    auto* seeds_opt = train_cmd->add_option("--seeds", tr_seeds, "seed list such as 0-19 or 1,5,9");
    seed_opt->excludes(seeds_opt);
    train_cmd->add_option("--episodes", tr_episodes, "override training episodes");
    train_cmd->add_option("--rollouts", tr_rollouts, "test rollouts per seed");
    train_cmd->add_option("--threads", tr_threads, "worker threads over seeds");
    train_cmd->add_flag("--discounted-test", tr_discounted, "test returns are discounted sums");
    train_cmd->add_option("--out", tr_out, "output directory");

    // bounds
    auto* bounds_cmd = app.add_subcommand("bounds", "check the discounted-versus-average GGF bound over gammas");
    ModelSource bounds_src;
    bounds_src.add_to(*bounds_cmd);
    std::string bounds_weights = "geo2", bounds_out;
    std::vector<double> bounds_gammas;
    bounds_cmd->add_option("--weights", bounds_weights, "weights id");
    bounds_cmd->add_option("--gammas", bounds_gammas, "comma-separated discount factors")
        ->delimiter(',')
        ->required();
    bounds_cmd->add_option("--out", bounds_out, "CSV output file (default stdout)");

    // demo-inconsistency
    auto* demo = app.add_subcommand("demo-inconsistency", "enumerate the example1 plans from both start states");
    double demo_gamma = 0.7;
    demo->add_option("--gamma", demo_gamma, "discount factor in (0,1)");

    // gen-instance
    auto* gen = app.add_subcommand("gen-instance", "write an environment as instance JSON");
    std::string gen_env, gen_out;
    double gen_gamma = 0.99;
    gen->add_option("--env", gen_env, "environment id")->required();
    gen->add_option("--gamma", gen_gamma, "discount factor");
    gen->add_option("--out", gen_out, "output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n" << "run 'fairmo --help' for usage\n";
        return 2;
    }

    try {
        if (*solve) {
            const Momdp m = solve_src.load();
            const GgfWeights w = make_weights(solve_weights, m.num_objectives);
            const GgfSolution sol = solve_ggf(m, w, parse_criterion(solve_criterion));
            out << "criterion " << solve_criterion << '\n'
                << "ggf_value " << num(sol.ggf_value) << '\n'
                << "J " << join(sol.J) << '\n'
                << "policy\n";
            print_policy(out, sol.policy);
            if (sol.criterion == Criterion::Average)
                out << "not_unichain " << (sol.not_unichain ? "true" : "false") << '\n';
            if (!solve_policy_out.empty()) write_file(solve_policy_out, policy_to_json(sol.policy).dump(2) + "\n");
        } else if (*evaluate_cmd) {
            const Momdp m = eval_src.load();
            StochasticPolicy pi = !eval_policy.empty()     ? load_policy(eval_policy)
                                  : !eval_actions.empty() ? StochasticPolicy::deterministic(eval_actions, m.num_actions)
                                                          : StochasticPolicy::uniform(m.num_states, m.num_actions);
            if (eval_actions.size() && eval_actions.size() != m.num_states)
                throw ShapeMismatch("--actions needs one action per state");
            const ExactEvaluation ev = evaluate(m, pi);
            const GgfWeights w = make_weights(eval_weights, m.num_objectives);
            const Vector jd = ev.discounted_objectives(m.mu0), ja = ev.average_objectives(m.mu0);
            out << "discounted_J " << join(jd) << '\n'
                << "discounted_ggf " << num(ggf(w, jd)) << '\n'
                << "gain_J " << join(ja) << '\n'
                << "gain_ggf " << num(ggf(w, ja)) << '\n'
                << "sigma_H " << num(ev.sigma_H) << '\n'
                << "laurent_threshold " << num(laurent_threshold(ev.sigma_H)) << '\n';
        } else if (*train_cmd) {
            ExperimentConfig cfg;
            if (!tr_config.empty()) {
                try {
                    cfg = experiment_config_from_json(nlohmann::json::parse(read_file(tr_config)));
                } catch (const nlohmann::json::parse_error& e) {
                    throw ParseError(tr_config + ": " + e.what());
                }
            }
            if (!tr_agent.empty()) cfg.agent = tr_agent;
            if (!tr_env.empty()) cfg.env = tr_env;
            if (!tr_weights.empty()) cfg.weights = tr_weights;
            if (tr_seed) cfg.seeds = {*tr_seed};
            if (!tr_seeds.empty()) cfg.seeds = parse_seed_list(tr_seeds);
            if (tr_episodes) cfg.train.episodes = *tr_episodes;
            if (tr_rollouts) cfg.rollouts = *tr_rollouts;
            if (tr_threads) cfg.threads = *tr_threads;
            if (tr_discounted) cfg.discounted_test = true;
            cfg.output_dir = tr_out;
            const auto records = run_experiment(cfg);

            const std::filesystem::path dir(tr_out);
            const std::size_t D = make_env(cfg.env, cfg.env_gamma).model.num_objectives;
            const GgfWeights w = make_weights(cfg.weights, D);
            std::ostringstream ep;
            ep << "seed,episode";
            for (std::size_t d = 0; d < D; ++d) ep << ",obj_" << d;
            ep << ",ggf_running\n";
            int failures = 0;
            for (const auto& r : records) {
                if (!r.ok()) {
                    err << "seed " << r.seed << " failed: " << r.error << '\n';
                    ++failures;
                    continue;
                }
                Vector running(D, 0.0);
                for (std::size_t e = 0; e < r.train_returns.size(); ++e) {
                    ep << r.seed << ',' << e;
                    for (std::size_t d = 0; d < D; ++d) {
                        ep << ',' << format_double(r.train_returns[e][d]);
                        running[d] += r.train_returns[e][d];
                    }
                    Vector avg = running;
                    for (double& x : avg) x /= static_cast<double>(e + 1);
                    ep << ',' << format_double(ggf(w, avg)) << '\n';
                }
                write_file((dir / ("policy_" + std::to_string(r.seed) + ".json")).string(),
                           policy_to_json(r.policy).dump(2) + "\n");
                out << "seed " << r.seed << " ggf_score " << num(r.metrics.ggf_score) << " cv " << num(r.metrics.cv)
                    << " mean " << num(r.metrics.mean) << '\n';
            }
            write_file((dir / "episodes.csv").string(), ep.str());
            if (failures) return 1;
        } else if (*bounds_cmd) {
            const Momdp m = bounds_src.load();
            const GgfWeights w = make_weights(bounds_weights, m.num_objectives);
            const auto sweep = gamma_sweep(m, w, bounds_gammas);
            std::ostringstream csv;
            csv << "gamma,sigma_H_gamma,sigma_H_avg,gamma_threshold,R_bar,rho_gamma,rho_avg,bound,"
                   "ggf_gain_gamma,ggf_gain_avg,gap,holds\n";
            bool failed = false;
            for (const auto& e : sweep) {
                if (!e.report) {
                    err << "gamma " << e.gamma << ": " << e.error << '\n';
                    failed = true;
                    continue;
                }
                const BoundReport& r = *e.report;
                for (double x : {r.gamma, r.sigma_H_gamma, r.sigma_H_avg, r.gamma_threshold, r.R_bar, r.rho_gamma,
                                 r.rho_avg, r.bound_value, r.ggf_gain_gamma, r.ggf_gain_avg, r.gap})
                    csv << format_double(x) << ',';
                csv << (r.holds ? "true" : "false") << '\n';
            }
            if (bounds_out.empty()) out << csv.str();
            else write_file(bounds_out, csv.str());
            if (failed) return 1;
        } else if (*demo) {
            out << "example1 at gamma " << num(demo_gamma) << "; plans list the action at s1, then at s2\n";
            print_table(out, example1_enumeration(GgfWeights(Vector{0.8, 0.2}), demo_gamma));
            print_table(out, example1_enumeration(GgfWeights(Vector{5.0 / 9.0, 4.0 / 9.0}), demo_gamma));
        } else if (*gen) {
            const Momdp m = make_env(gen_env, gen_gamma).model;
            const std::string text = instance_to_json(m).dump(2) + "\n";
            if (gen_out.empty()) out << text;
            else write_file(gen_out, text);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

} // namespace fairmo
