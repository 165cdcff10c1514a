#include <map>

#include "doctest.h"
#include "sdex/config.hpp"
#include "sdex/errors.hpp"

using namespace sdex;

TEST_CASE("defaults") {
  const ExperimentConfig c;
  CHECK(c.crossbar.rows == 8);
  CHECK(c.crossbar.r_line == 5.0);
  CHECK(c.crossbar.dac_bits == 16);
  CHECK(c.device.g_lrs == 1e-4);
  CHECK(c.device.write_perturbation == 0.05);
  CHECK(c.pulse.writes_per_program == 100);
  CHECK(c.n_vectors == 500);
  CHECK(c.vector_len == 16);
  CHECK(c.rng_rows == 32);
  CHECK(c.m_trajectories == 1000);
  CHECK(c.n_steps == 100);
  CHECK(c.bs.r == 0.1);
  CHECK(c.bs.sigma == 0.2);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("text parsing") {
  ExperimentConfig c;
  apply_config_text(c,
                    "# comment line\n"
                    "crossbar.r_line = 20   # trailing comment\n"
                    "\n"
                    "  bs.sigma=0.3\n"
                    "run.master_seed = 18446744073709551615\n"
                    "check.skew_excess = yes\n"
                    "run.out_dir = results/a b\n");
  CHECK(c.crossbar.r_line == 20.0);
  CHECK(c.bs.sigma == 0.3);
  CHECK(c.master_seed == 18446744073709551615ULL);
  CHECK(c.check.skew_excess);
  CHECK(c.out_dir == "results/a b");
}

TEST_CASE("parse errors name the line") {
  ExperimentConfig c;
  CHECK_THROWS_AS(apply_config_text(c, "crossbar.nope = 1\n"), ConfigError);
  CHECK_THROWS_AS(apply_config_text(c, "crossbar.rows = 8.5\n"), ConfigError);
  CHECK_THROWS_AS(apply_config_text(c, "bs.r = fast\n"), ConfigError);
  CHECK_THROWS_AS(apply_config_text(c, "just words\n"), ConfigError);
  try {
    apply_config_text(c, "bs.r = 0.1\n\nbs.zzz = 2\n", "cfg.txt");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("cfg.txt:3") != std::string::npos);
  }
  CHECK_THROWS_AS(apply_config_file(c, "/nonexistent/sdex.cfg"), IoError);
}

TEST_CASE("environment overrides") {
  CHECK(env_name("crossbar.r_line") == "SDEX_CROSSBAR_R_LINE");
  std::map<std::string, std::string> env{{"SDEX_CROSSBAR_R_LINE", "0"}, {"SDEX_BS_M_TRAJECTORIES", "42"}};
  ExperimentConfig c;
  apply_env(c, [&](const std::string& k) -> std::optional<std::string> {
    auto it = env.find(k);
    if (it == env.end()) return std::nullopt;
    return it->second;
  });
  CHECK(c.crossbar.r_line == 0.0);
  CHECK(c.m_trajectories == 42);
  env["SDEX_BS_R"] = "x";
  CHECK_THROWS_AS(apply_env(c,
                            [&](const std::string& k) -> std::optional<std::string> {
                              auto it = env.find(k);
                              if (it == env.end()) return std::nullopt;
                              return it->second;
                            }),
                  ConfigError);
}

TEST_CASE("dump round-trips") {
  ExperimentConfig a;
  a.crossbar.r_line = 12.5;
  a.device.hrs_variability = 0.3;
  a.master_seed = 99;
  ExperimentConfig b;
  apply_config_text(b, dump_config(a));
  CHECK(dump_config(b) == dump_config(a));
  CHECK(config_keys().size() > 40);
}

TEST_CASE("validation of experiment fields") {
  ExperimentConfig c;
  c.n_vectors = 0;
  CHECK_THROWS_AS(c.validate(), UsageError);
  c = {};
  c.rng_cols = 16;  // 16 pairs need 32 bit lines
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.calib_n = 10;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
