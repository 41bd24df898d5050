#include "fairmo/cli.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace fairmo;
using fairmo::testing::source_path;

namespace {

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult run(std::vector<std::string> args) {
    args.insert(args.begin(), "fairmo");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("fairmo_cli_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

} // namespace

TEST(Cli, SolveOneState) {
    const auto r = run({"solve", "--instance", source_path("instances/one_state.json"), "--weights", "geo2",
                        "--criterion", "discounted"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("ggf_value 5.000000"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("J 5.000000 5.000000"), std::string::npos) << r.out;
}

TEST(Cli, SolveAverageWritesPolicy) {
    const auto dir = fresh_dir("solve");
    std::filesystem::create_directories(dir);
    const auto path = (dir / "pi.json").string();
    const auto r = run({"solve", "--env", "resalloc:3x3", "--criterion", "average", "--policy-out", path});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("not_unichain false"), std::string::npos) << r.out;
    const StochasticPolicy pi = load_policy(path);
    EXPECT_EQ(pi.num_states(), 3u);

    const auto ev = run({"evaluate", "--env", "resalloc:3x3", "--policy", path});
    ASSERT_EQ(ev.code, 0) << ev.err;
    EXPECT_NE(ev.out.find("gain_ggf "), std::string::npos);
    EXPECT_NE(ev.out.find("laurent_threshold "), std::string::npos);
}

TEST(Cli, EvaluatePeriodic) {
    const auto r = run({"evaluate", "--instance", source_path("instances/periodic2.json"), "--actions", "0", "0"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("sigma_H 0.500000"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("laurent_threshold 0.333333"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("gain_J 0.500000 0.500000"), std::string::npos) << r.out;
    EXPECT_EQ(run({"evaluate", "--env", "periodic", "--actions", "0"}).code, 1);
}

TEST(Cli, BoundsBelowThresholdFails) {
    const auto r = run({"bounds", "--instance", source_path("instances/garnet.json"), "--gammas", "0.5"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("GammaBelowThreshold"), std::string::npos) << r.err;
}

TEST(Cli, BoundsCsv) {
    const auto r = run({"bounds", "--instance", source_path("instances/periodic2.json"), "--gammas", "0.9,0.99"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream in(r.out);
    std::string header, row1, row2;
    std::getline(in, header);
    std::getline(in, row1);
    std::getline(in, row2);
    EXPECT_EQ(header,
              "gamma,sigma_H_gamma,sigma_H_avg,gamma_threshold,R_bar,rho_gamma,rho_avg,bound,ggf_gain_gamma,"
              "ggf_gain_avg,gap,holds");
    EXPECT_EQ(row1.substr(0, 4), "0.9,");
    EXPECT_EQ(row1.substr(row1.size() - 4), "true");
    EXPECT_EQ(row2.substr(0, 5), "0.99,");
}

TEST(Cli, DemoInconsistency) {
    const auto r = run({"demo-inconsistency"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("0.8"), std::string::npos);
    EXPECT_NE(r.out.find("0.555556"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("Up-Up"), std::string::npos);
    EXPECT_NE(r.out.find("Up-Down"), std::string::npos);
    EXPECT_NE(r.out.find("inconsistent: yes"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("inconsistent: no"), std::string::npos) << r.out;
}

TEST(Cli, GenInstanceRoundTrips) {
    const auto dir = fresh_dir("gen");
    std::filesystem::create_directories(dir);
    const auto path = (dir / "g.json").string();
    ASSERT_EQ(run({"gen-instance", "--env", "garnet:6,2,2,3,1", "--gamma", "0.9", "--out", path}).code, 0);
    EXPECT_EQ(load_instance(path), load_instance(source_path("instances/garnet.json")));
    const auto r = run({"gen-instance", "--env", "example1", "--gamma", "0.7"});
    EXPECT_EQ(r.out, slurp(source_path("instances/example1.json")));
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run({"frobnicate"}).code, 2);
    EXPECT_EQ(run({"solve", "--bogus-flag"}).code, 2);
    EXPECT_EQ(run({"bounds", "--env", "periodic"}).code, 2);  // --gammas is required
    EXPECT_EQ(run({"solve", "--env", "periodic", "--instance", "x.json"}).code, 2);
    EXPECT_EQ(run({"solve", "--env", "periodic", "--criterion", "total"}).code, 2);
    EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, RuntimeErrors) {
    EXPECT_EQ(run({"solve", "--instance", "/nonexistent.json"}).code, 1);
    EXPECT_EQ(run({"solve", "--env", "nope"}).code, 1);
    EXPECT_EQ(run({"solve", "--env", "periodic", "--weights", "custom:[1,2]"}).code, 1);
}

TEST(Cli, TrainIsReproducible) {
    const auto d1 = fresh_dir("train1"), d2 = fresh_dir("train2");
    const std::vector<std::string> common{"train",     "--agent",    "ggf-a2c", "--env",      "species:3x3",
                                          "--seeds",   "0-2",        "--episodes", "20",      "--rollouts", "3"};
    auto a1 = common, a2 = common;
    a1.insert(a1.end(), {"--out", d1.string()});
    a2.insert(a2.end(), {"--out", d2.string(), "--threads", "2"});
    const auto r1 = run(a1), r2 = run(a2);
    ASSERT_EQ(r1.code, 0) << r1.err;
    ASSERT_EQ(r2.code, 0) << r2.err;
    EXPECT_EQ(r1.out, r2.out);
    for (const char* f : {"runs.csv", "summary.csv", "config.json", "episodes.csv", "policy_0.json", "policy_2.json"}) {
        ASSERT_TRUE(std::filesystem::exists(d1 / f)) << f;
        EXPECT_EQ(slurp(d1 / f), slurp(d2 / f)) << f;
    }
    const std::string episodes = slurp(d1 / "episodes.csv");
    EXPECT_EQ(episodes.substr(0, episodes.find('\n')), "seed,episode,obj_0,obj_1,ggf_running");
}

TEST(Cli, TrainFromConfig) {
    const auto dir = fresh_dir("train_cfg");
    const auto r = run({"train", "--config", source_path("configs/one_state.json"), "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("seed 0 ggf_score "), std::string::npos) << r.out;
    EXPECT_EQ(run({"train", "--config", "/nonexistent.json"}).code, 1);
    EXPECT_EQ(run({"train", "--agent", "ggf-dqn", "--out", dir.string()}).code, 1);
}

TEST(Cli, SeedLists) {
    EXPECT_EQ(cli_detail::parse_seed_list("0-3"), (std::vector<std::uint64_t>{0, 1, 2, 3}));
    EXPECT_EQ(cli_detail::parse_seed_list("1,5,9"), (std::vector<std::uint64_t>{1, 5, 9}));
    EXPECT_EQ(cli_detail::parse_seed_list("1,3-4"), (std::vector<std::uint64_t>{1, 3, 4}));
    EXPECT_THROW(cli_detail::parse_seed_list("4-1"), BadParams);
    EXPECT_THROW(cli_detail::parse_seed_list("x"), BadParams);
}
