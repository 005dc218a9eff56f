#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "noisy_sqp/config.hpp"

using namespace noisy_sqp;

TEST(ConfigFromJson, OverridesOnlyGivenFields) {
  const auto doc = nlohmann::json::parse(R"({"beta": 20, "nu": 0.2})");
  const LoadedConfig lc = config_from_json(doc);
  EXPECT_EQ(lc.config.beta, 20.0);
  EXPECT_EQ(lc.config.nu, 0.2);
  EXPECT_EQ(lc.config.tau, SolverConfig{}.tau);
  EXPECT_FALSE(lc.has_estimates);
}

TEST(ConfigFromJson, Estimates) {
  const auto doc = nlohmann::json::parse(R"({"eps_f_est": 1e-4})");
  const LoadedConfig lc = config_from_json(doc);
  EXPECT_TRUE(lc.has_estimates);
  EXPECT_EQ(lc.config.eps_f_est, 1e-4);
}

TEST(ConfigFromJson, Rejects) {
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"betta": 1})")),
               ContractViolation);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"tau": 1.5})")),
               ContractViolation);
  EXPECT_THROW(config_from_json(nlohmann::json::parse("[1, 2]")),
               ContractViolation);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"beta": "x"})")),
               nlohmann::json::exception);
}

TEST(ConfigFromJson, RoundTrip) {
  SolverConfig c;
  c.beta = 12.5;
  c.relaxation_enabled = false;
  c.max_iters = 77;
  c.eps_J_est = 3e-3;
  const SolverConfig back = config_from_json(config_to_json(c)).config;
  EXPECT_EQ(back.beta, 12.5);
  EXPECT_FALSE(back.relaxation_enabled);
  EXPECT_EQ(back.max_iters, 77);
  EXPECT_EQ(back.eps_J_est, 3e-3);
}

TEST(LoadConfigFile, ReadsAndReportsErrors) {
  const auto path = std::filesystem::temp_directory_path() / "noisy_sqp_cfg.json";
  {
    std::ofstream f(path);
    f << R"({"pi_init": 4})";
  }
  EXPECT_EQ(load_config_file(path.string()).config.pi_init, 4.0);
  {
    std::ofstream f(path);
    f << "{not json";
  }
  EXPECT_THROW(load_config_file(path.string()), ContractViolation);
  std::filesystem::remove(path);
  EXPECT_THROW(load_config_file(path.string()), std::runtime_error);
}
