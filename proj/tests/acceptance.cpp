// End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
// the exit status is nonzero if any criterion fails. Seeds are fixed.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "sdex/experiments.hpp"
#include "sdex/io.hpp"
#include "support/dense_mna.hpp"

using namespace sdex;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::vector<double> col0(const Eigen::MatrixXd& m) { return {m.data(), m.data() + m.rows()}; }

// ---------------------------------------------------------------------------

Verdict circuit_oracle() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> ug(1e-5, 1e-4);
  double worst = 0.0;
  int solves = 0;
  for (int k = 0; k < 100; ++k) {
    Eigen::MatrixXd g(8, 8);
    for (auto& v : g.reshaped()) v = ug(rng);
    std::uniform_real_distribution<double> uv(-0.2, 0.2);
    std::vector<double> wl(8);
    for (auto& v : wl) v = uv(rng);
    for (double r_line : {0.0, 5.0, 20.0}) {
      CrossbarConfig cfg;
      cfg.r_line = r_line;
      CrossbarTile tile(cfg, make_device(DeviceSpec{}, 1e-5, DeviceClass::Weight));
      for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) tile.at(r, c).g_actual = g(r, c);
      const auto got = solve_tile(tile, wl).bitline_currents;
      const auto want = oracle::solve_crossbar(g, r_line, cfg.r_in, cfg.r_out, wl, {}).bitline;
      for (int c = 0; c < 8; ++c) {
        const double rel = std::abs(got[c] - want[c]) / std::abs(want[c]);
        worst = std::max(worst, rel);
      }
      ++solves;
    }
  }
  return {worst < 1e-9, fmt::format("{} solves, max relative error {:.3g} (limit 1e-9)", solves, worst)};
}

Verdict ideal_vmm() {
  std::mt19937_64 rng(77);
  CrossbarConfig cfg;
  cfg.r_line = cfg.r_in = cfg.r_out = 0.0;
  DeviceSpec spec;
  spec.write_perturbation = 0.0;
  const double x_max = 1.0;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  // Bound as stated for the sign-magnitude encoding: w_max * x_max * cols * 2^(1 - bits).
  double worst_ratio = 0.0;
  for (int k = 0; k < 100; ++k) {
    Eigen::MatrixXd w(4, 8);
    for (auto& v : w.reshaped()) v = u(rng);
    const double w_max = w.cwiseAbs().maxCoeff();
    const auto mapping = MappingParams::from(spec, w_max, x_max);
    CrossbarTile tile(cfg, make_device(spec, spec.g_hrs, DeviceClass::Unused));
    const auto cells = place_weights(tile, w, mapping);
    Rng prog(static_cast<std::uint64_t>(k));
    for (const auto& a : cells) tile.at(a) = program_weight(spec, tile.at(a), tile.at(a).g_target, prog).state;
    std::vector<double> x(8);
    for (auto& v : x) v = u(rng);
    const auto y = vmm_read(tile, x, mapping);
    const Eigen::VectorXd exact = w * Eigen::Map<const Eigen::VectorXd>(x.data(), 8);
    const double bound = w_max * x_max * cfg.cols * std::ldexp(1.0, 1 - cfg.dac_bits);
    for (int p = 0; p < 4; ++p) worst_ratio = std::max(worst_ratio, std::abs(y.values[p] - exact[p]) / bound);
  }
  return {worst_ratio <= 1.0, fmt::format("100 instances, max error / bound = {:.3g}", worst_ratio)};
}

Verdict rng_position_independence() {
  const ExperimentConfig cfg;  // 32x32, r_line 5, 500 x 16, master seed 1
  const auto rc = characterize_rng(cfg);
  double worst_moment = 0.0;
  for (const auto& m : rc.per_pair) worst_moment = std::max({worst_moment, std::abs(m.skew), std::abs(m.excess_kurtosis)});
  const bool moments_ok = worst_moment < 0.6;
  const bool trend_ok = rc.kurtosis_trend.contains(0.0);
  const bool mean_ok = rc.mean_diff_se < 3.0;
  const bool ratio_ok = rc.std_ratio >= 0.95 && rc.std_ratio <= 1.05;
  return {moments_ok && trend_ok && mean_ok && ratio_ok,
          fmt::format("max |moment| {:.3f}; kurtosis slope CI [{:.4f}, {:.4f}]; mean diff {:.2f} SE; std ratio {:.4f}",
                      worst_moment, rc.kurtosis_trend.ci_low, rc.kurtosis_trend.ci_high, rc.mean_diff_se,
                      rc.std_ratio)};
}

Verdict bs_weak() {
  const BlackScholesParams p;
  // Brute-force oracle for the targets: 1e6 exact lognormal draws from an
  // RNG unrelated to the solver's.
  std::mt19937 orng(123456);
  std::normal_distribution<double> nd;
  const int n_or = 1000000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n_or; ++i) {
    const double x = p.x0 * std::exp(p.sigma * nd(orng) + (p.r - 0.5 * p.sigma * p.sigma));
    s1 += x;
    s2 += x * x;
  }
  const double o_mean = s1 / n_or;
  const double o_var = s2 / n_or - o_mean * o_mean;
  const bool oracle_ok = std::abs(o_mean - bs_mean(p, 1.0)) < 3.0 * std::sqrt(o_var / n_or) &&
                         std::abs(o_var / bs_var(p, 1.0) - 1.0) < 0.01;

  EnsembleOptions o;
  o.m = 10000;
  o.seed = 1;
  o.mode = RunMode::digital();
  const auto res = simulate_ensemble(make_black_scholes(p, 1.0, 100), o);
  const auto xs = col0(res.finals);
  const auto m = moments(xs);
  const double n = static_cast<double>(xs.size());
  const double var = m.std * m.std * n / (n - 1.0);
  const double se = std::sqrt(var / n);
  const double mean_err = std::abs(m.mean - bs_mean(p, 1.0)) / se;
  const double var_err = std::abs(var - bs_var(p, 1.0)) / bs_var(p, 1.0);
  return {oracle_ok && mean_err < 3.0 && var_err < 0.10 && res.diverged == 0,
          fmt::format("oracle mean {:.5f} var {:.5f}; ensemble mean {:.5f} ({:.2f} SE), var {:.5f} ({:.1f}% off)", o_mean,
                      o_var, m.mean, mean_err, var, 100.0 * var_err)};
}

Verdict noise_only_ks() {
  const BlackScholesParams p;
  const auto prob = make_black_scholes(p, 1.0, 100);
  EnsembleOptions o;
  o.m = 1000;
  o.seed = 1;
  o.mode = RunMode::noise_only();
  const auto xb = simulate_ensemble(prob, o);
  o.mode = RunMode::digital();
  const auto dg = simulate_ensemble(prob, o);
  const auto a = col0(xb.finals);
  const auto b = col0(dg.finals);
  const double ks2 = ks_statistic(a, b);
  const double ks1 = ks_statistic(a, [&](double x) { return bs_cdf(p, 1.0, x); });
  return {ks2 < 0.08 && ks1 < 0.08 && xb.diverged == 0,
          fmt::format("KS vs digital {:.4f}, KS vs lognormal {:.4f} (limit 0.08)", ks2, ks1)};
}

// Trajectory count for the skew comparison, fixed before the first run.
constexpr int kSkewM = 50000;

Verdict skew_effect() {
  const auto prob = make_black_scholes(BlackScholesParams{}, 1.0, 100);
  auto skew_of = [&](RunMode mode, double perturbation) {
    EnsembleOptions o;
    o.m = kSkewM;
    o.seed = 1;
    o.mode = mode;
    o.crossbar.spec.write_perturbation = perturbation;
    const auto r = simulate_ensemble(prob, o);
    return moments(col0(r.finals)).skew;
  };
  const double dig = skew_of(RunMode::digital(), 0.05);
  const double full5 = skew_of(RunMode::full_crossbar(), 0.05);
  const double full0 = skew_of(RunMode::full_crossbar(), 0.0);
  // Not part of the verdict: noise-only mode with the same seed reuses the
  // same crossbar draws, so this difference isolates the coefficient writes.
  const double noise = skew_of(RunMode::noise_only(), 0.05);
  const bool exceeds = full5 > dig;
  const bool vanishes = std::abs(full0 - dig) < 0.15;
  return {exceeds && vanishes,
          fmt::format("m={}: digital {:.4f}, full-crossbar 5% {:.4f} (diff {:+.4f}), 0% {:.4f} (|diff| {:.4f} < 0.15); "
                      "info: full-crossbar 5% minus noise-only on shared draws {:+.4f}",
                      kSkewM, dig, full5, full5 - dig, full0, std::abs(full0 - dig), full5 - noise)};
}

Verdict strong_order() {
  std::vector<double> dts;
  for (int k = 4; k <= 8; ++k) dts.push_back(std::ldexp(1.0, -k));
  const auto r = estimate_strong_order(make_black_scholes(BlackScholesParams{}), dts, 2000, 1);
  return {r.slope >= 0.4 && r.slope <= 0.6, fmt::format("slope {:.4f} (range [0.4, 0.6])", r.slope)};
}

Verdict energy_figures() {
  const ExperimentConfig cfg;
  const auto res = simulate_ensemble(make_black_scholes(cfg.bs, cfg.t1, cfg.n_steps),
                                     ensemble_options(cfg, RunMode::full_crossbar(), 1));
  const auto s = report(res.ledger);
  auto within2 = [](double v, double t) { return v >= t / 2.0 && v <= t * 2.0; };
  const bool prog = within2(s.per_program_j, 0.8e-6);
  const bool total = within2(s.total_j, 0.16);
  const bool ops = std::abs(static_cast<double>(s.programs) - 200000.0) <= 20000.0;
  const bool read = within2(s.read_energy_j, 3e-6);
  return {prog && total && ops && read,
          fmt::format("per program {:.3g} J, total {:.4g} J, write operations {}, vmm read total {:.3g} J",
                      s.per_program_j, s.total_j, s.programs, s.read_energy_j)};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SDEX_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

Verdict determinism() {
  const fs::path root = fs::temp_directory_path() / "sdex_acceptance_determinism";
  fs::remove_all(root);
  const std::vector<std::string> cmds{"rng-characterize", "solve-bs --mode digital", "solve-bs --mode noise-only",
                                      "solve-bs --mode full-crossbar", "energy-report"};
  const std::vector<std::string> runs{"t1", "t4", "t1again"};
  const std::vector<int> threads{1, 4, 1};
  for (std::size_t r = 0; r < runs.size(); ++r) {
    for (const auto& c : cmds) {
      const int code = run_cli(fmt::format("--seed 7 --threads {} --dump-trajectories --dump-nodal --out-dir {} {}",
                                           threads[r], (root / runs[r]).string(), c));
      if (code != 0 && code != 1) return {false, fmt::format("'{}' exited with {}", c, code)};
    }
  }
  int files = 0;
  for (const auto& e : fs::recursive_directory_iterator(root / "t1")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), root / "t1");
    const auto ref = read_text_file(e.path());
    for (const char* other : {"t4", "t1again"}) {
      const auto p = root / other / rel;
      if (!fs::exists(p) || read_text_file(p) != ref) {
        return {false, fmt::format("{} differs in run {}", rel.string(), other)};
      }
    }
    ++files;
  }
  fs::remove_all(root);
  return {files > 0, fmt::format("{} output files identical across 1, 4 and 1 threads", files)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"circuit-oracle-equivalence", circuit_oracle},
      {"ideal-vmm-reduction", ideal_vmm},
      {"rng-position-independence", rng_position_independence},
      {"black-scholes-weak-accuracy", bs_weak},
      {"analog-noise-agreement", noise_only_ks},
      {"write-perturbation-skew", skew_effect},
      {"convergence-order", strong_order},
      {"energy-figures", energy_figures},
      {"determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    fmt::print("{} {}: {} [{:.1f} s]\n", v.pass ? "PASS" : "FAIL", name, v.detail, secs);
    std::fflush(stdout);
    failed += v.pass ? 0 : 1;
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
