#include "sdex/experiments.hpp"

#include <fmt/format.h>

#include <cmath>
#include <sstream>

#include "json.hpp"
#include "sdex/errors.hpp"
#include "sdex/io.hpp"

namespace sdex {

using Json = nlohmann::ordered_json;

bool CommandOutcome::ok() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

namespace {

std::string num(double v) { return fmt::format("{}", v); }

const char* class_name(DeviceClass c) {
  switch (c) {
    case DeviceClass::Weight: return "weight";
    case DeviceClass::RandomSource: return "random";
    case DeviceClass::Unused: return "unused";
  }
  return "unknown";
}

const char* fault_name(Fault f) {
  switch (f) {
    case Fault::None: return "none";
    case Fault::StuckOn: return "stuck_on";
    case Fault::StuckOff: return "stuck_off";
  }
  return "unknown";
}

std::string tile_csv(const CrossbarTile& tile) {
  std::string out = "row,col,class,fault,g_target_S,g_actual_S\n";
  for (int r = 0; r < tile.rows(); ++r) {
    for (int c = 0; c < tile.cols(); ++c) {
      const auto& d = tile.at(r, c);
      out += fmt::format("{},{},{},{},{},{}\n", r, c, class_name(d.cls), fault_name(d.fault), num(d.g_target),
                         num(d.g_actual));
    }
  }
  return out;
}

Json energy_json(const EnergyLedger& ledger) {
  const auto s = report(ledger);
  Json j;
  j["write_pulses"] = s.write_pulses;
  j["verify_reads"] = s.verify_reads;
  j["vmm_reads"] = s.vmm_reads;
  j["write_energy_j"] = s.write_energy_j;
  j["verify_energy_j"] = s.verify_energy_j;
  j["read_energy_j"] = s.read_energy_j;
  j["total_j"] = s.total_j;
  return j;
}

Json checks_json(const std::vector<Check>& checks) {
  Json arr = Json::array();
  for (const auto& c : checks) {
    arr.push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"detail", c.detail}});
  }
  return arr;
}

class Writer {
 public:
  Writer(const std::filesystem::path& dir, CommandOutcome& outcome) : dir_(dir), outcome_(outcome) {
    ensure_directory(dir_);
  }
  void text(const std::string& name, const std::string& body) {
    write_text_file(dir_ / name, body);
    outcome_.files.push_back(dir_ / name);
  }
  void json(const std::string& name, const Json& j) { text(name, j.dump(2) + "\n"); }

 private:
  std::filesystem::path dir_;
  CommandOutcome& outcome_;
};

Check within_factor(const std::string& name, double value, double target, double factor) {
  const bool pass = value >= target / factor && value <= target * factor;
  return {name, pass, value, fmt::format("within a factor of {} of {}", num(factor), num(target))};
}

std::string trace_csv(const std::vector<ReadTrace>& trace) {
  std::string out = "read_index,kind,col,current_A\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& t = trace[i];
    for (std::size_t c = 0; c < t.bitline_currents.size(); ++c) {
      out += fmt::format("{},{},{},{}\n", i, t.kind, c, num(t.bitline_currents[c]));
    }
  }
  return out;
}

std::string mode_dir(RunMode mode) { return "bs-" + mode.name(); }

}  // namespace

// ---------------------------------------------------------------------------

RngCharacterization characterize_rng(const ExperimentConfig& cfg) {
  cfg.validate();
  CrossbarConfig xc = cfg.crossbar;
  xc.rows = cfg.rng_rows;
  xc.cols = cfg.rng_cols;
  xc.validate();

  CrossbarTile tile(xc, make_device(cfg.device, cfg.device.g_lrs, DeviceClass::Unused));
  Rng tile_rng(derive_seed(cfg.master_seed, Stream::Tile));
  populate_background(tile, cfg.device, tile_rng);

  GaussianSource::Params gp;
  gp.g_target = cfg.device.g_hrs;
  gp.variability = cfg.device.variability_for(gp.g_target);
  gp.calib_n = cfg.calib_n;
  gp.g_reset = cfg.device.g_lrs;
  gp.pulses = cfg.pulse;
  GaussianSource src(tile, pairs_on_row(0, cfg.vector_len), gp, derive_seed(cfg.master_seed, Stream::Calibration));
  src.calibrate();

  RngCharacterization out;
  out.z = src.sample_unit_normal(cfg.n_vectors, out.raw);
  out.calibration = src.calibration();
  out.ledger = src.ledger();
  out.tile = src.tile();

  const int d = cfg.vector_len;
  std::vector<double> idx;
  std::vector<double> kurt;
  for (int p = 0; p < d; ++p) {
    const Eigen::VectorXd col = out.z.col(p);
    out.per_pair.push_back(moments(std::span<const double>(col.data(), static_cast<std::size_t>(col.size()))));
    idx.push_back(p);
    kurt.push_back(out.per_pair.back().excess_kurtosis);
  }
  if (d >= 3) out.kurtosis_trend = trend_slope(idx, kurt);

  // Position independence is judged on the physical currents, before the
  // per-pair calibration could hide an IR-drop effect.
  if (cfg.n_vectors >= 4) {
    const Eigen::VectorXd first = out.raw.col(0);
    const Eigen::VectorXd last = out.raw.col(d - 1);
    const auto a = moments(std::span<const double>(first.data(), static_cast<std::size_t>(first.size())));
    const auto b = moments(std::span<const double>(last.data(), static_cast<std::size_t>(last.size())));
    const double n = static_cast<double>(cfg.n_vectors);
    const double pooled = std::sqrt((a.std * a.std + b.std * b.std) / 2.0);
    out.mean_diff_se = std::abs(a.mean - b.mean) / (pooled * std::sqrt(2.0 / n));
    out.std_ratio = a.std / b.std;
  }
  return out;
}

CommandOutcome cmd_rng_characterize(const ExperimentConfig& cfg, const RunControls& ctl) {
  if (cfg.n_vectors < 1) throw UsageError("rng.n_vectors must be >= 1");
  const auto rc = characterize_rng(cfg);
  const auto& th = cfg.check;

  CommandOutcome outcome;
  const int d = cfg.vector_len;
  for (int p = 0; p < d; ++p) {
    const auto& m = rc.per_pair[static_cast<std::size_t>(p)];
    const double worst = std::max(std::abs(m.skew), std::abs(m.excess_kurtosis));
    outcome.checks.push_back({fmt::format("pair_{}_moments", p), worst < th.moment_abs_max, worst,
                              fmt::format("max(|skew|, |excess kurtosis|) < {}", num(th.moment_abs_max))});
  }
  outcome.checks.push_back({"kurtosis_trend_ci_contains_zero", d >= 3 && rc.kurtosis_trend.contains(0.0),
                            rc.kurtosis_trend.slope,
                            fmt::format("95% CI [{}, {}]", num(rc.kurtosis_trend.ci_low), num(rc.kurtosis_trend.ci_high))});
  outcome.checks.push_back({"first_last_mean_difference", rc.mean_diff_se < th.mean_diff_se, rc.mean_diff_se,
                            fmt::format("pooled standard errors < {}", num(th.mean_diff_se))});
  outcome.checks.push_back({"first_last_std_ratio",
                            rc.std_ratio >= th.std_ratio_lo && rc.std_ratio <= th.std_ratio_hi, rc.std_ratio,
                            fmt::format("in [{}, {}]", num(th.std_ratio_lo), num(th.std_ratio_hi))});

  Writer w(std::filesystem::path(cfg.out_dir) / "rng", outcome);
  std::string samples = "pair_index,draw_index,raw_current_diff_A,z_value\n";
  for (int p = 0; p < d; ++p)
    for (int i = 0; i < cfg.n_vectors; ++i) samples += fmt::format("{},{},{},{}\n", p, i, num(rc.raw(i, p)), num(rc.z(i, p)));
  w.text("samples.csv", samples);

  std::string mom = "pair_index,mean,std,skew,excess_kurtosis\n";
  for (int p = 0; p < d; ++p) {
    const auto& m = rc.per_pair[static_cast<std::size_t>(p)];
    mom += fmt::format("{},{},{},{},{}\n", p, num(m.mean), num(m.std), num(m.skew), num(m.excess_kurtosis));
  }
  w.text("moments.csv", mom);

  std::string cal = "pair_index,mu_A,sigma_A\n";
  for (int p = 0; p < d; ++p) {
    cal += fmt::format("{},{},{}\n", p, num(rc.calibration.mu[static_cast<std::size_t>(p)]),
                       num(rc.calibration.sigma[static_cast<std::size_t>(p)]));
  }
  w.text("calibration.csv", cal);
  w.text("tile_conductance.csv", tile_csv(*rc.tile));

  Json trend;
  trend["statistic"] = "excess_kurtosis";
  trend["slope"] = rc.kurtosis_trend.slope;
  trend["intercept"] = rc.kurtosis_trend.intercept;
  trend["ci_low"] = rc.kurtosis_trend.ci_low;
  trend["ci_high"] = rc.kurtosis_trend.ci_high;
  trend["ci_contains_zero"] = rc.kurtosis_trend.contains(0.0);
  trend["first_last_mean_diff_se"] = rc.mean_diff_se;
  trend["first_last_std_ratio"] = rc.std_ratio;
  trend["checks"] = checks_json(outcome.checks);
  trend["ok"] = outcome.ok();
  w.json("trend.json", trend);
  w.json("energy_report.json", energy_json(rc.ledger));

  if (ctl.dump_nodal) {
    std::vector<double> wl(static_cast<std::size_t>(cfg.rng_rows), 0.0);
    wl[0] = cfg.crossbar.v_read;
    std::ostringstream os;
    dump_nodal_system(os, *rc.tile, wl);
    w.text("nodal_system.txt", os.str());
  }
  return outcome;
}

// ---------------------------------------------------------------------------

EnsembleOptions ensemble_options(const ExperimentConfig& cfg, RunMode mode, int threads) {
  EnsembleOptions o;
  o.m = cfg.m_trajectories;
  o.seed = cfg.master_seed;
  o.mode = mode;
  o.threads = threads;
  o.crossbar.config = cfg.crossbar;
  o.crossbar.spec = cfg.device;
  o.crossbar.pulses = cfg.pulse;
  o.crossbar.calib_n = cfg.calib_n;
  o.crossbar.x_max = cfg.x_max;
  return o;
}

BsComparison compare_to_analytic(const ExperimentConfig& cfg, const Eigen::MatrixXd& finals) {
  BsComparison c;
  const std::span<const double> xs(finals.data(), static_cast<std::size_t>(finals.rows()));
  c.finals = moments(xs);
  c.analytic_mean = bs_mean(cfg.bs, cfg.t1);
  c.analytic_var = bs_var(cfg.bs, cfg.t1);
  const double n = static_cast<double>(c.finals.n);
  // Sample (n - 1) variance for the comparison against the law.
  const double var = c.finals.std * c.finals.std * n / (n - 1.0);
  c.mean_error_se = std::abs(c.finals.mean - c.analytic_mean) / (std::sqrt(var) / std::sqrt(n));
  c.var_rel_error = std::abs(var - c.analytic_var) / c.analytic_var;
  const auto p = cfg.bs;
  const double t = cfg.t1;
  c.ks_analytic = ks_statistic(xs, [&](double x) { return bs_cdf(p, t, x); });
  return c;
}

CommandOutcome cmd_solve_bs(const ExperimentConfig& cfg, RunMode mode, const RunControls& ctl) {
  cfg.validate();
  const auto problem = make_black_scholes(cfg.bs, cfg.t1, cfg.n_steps);
  auto opt = ensemble_options(cfg, mode, ctl.threads);
  opt.keep_paths = ctl.dump_trajectories;
  const auto res = simulate_ensemble(problem, opt);
  const auto cmp = compare_to_analytic(cfg, res.finals);
  const auto& th = cfg.check;
  const std::span<const double> xs(res.finals.data(), static_cast<std::size_t>(res.finals.rows()));

  CommandOutcome outcome;
  outcome.checks.push_back({"no_diverged_trajectories", res.diverged == 0, static_cast<double>(res.diverged),
                            "trajectories flagged as diverged or out of input range"});

  std::optional<MomentStats> digital_moments;
  std::optional<double> ks_digital;
  if (mode.noise == NoiseSource::Digital && mode.params == ParamSource::Digital) {
    outcome.checks.push_back({"mean_vs_analytic", cmp.mean_error_se < th.mean_se, cmp.mean_error_se,
                              fmt::format("standard errors < {}", num(th.mean_se))});
    outcome.checks.push_back({"variance_vs_analytic", cmp.var_rel_error < th.var_rel, cmp.var_rel_error,
                              fmt::format("relative error < {}", num(th.var_rel))});
    outcome.checks.push_back({"ks_vs_analytic", cmp.ks_analytic < th.ks_max, cmp.ks_analytic,
                              fmt::format("< {}", num(th.ks_max))});
  } else {
    const auto dres = simulate_ensemble(problem, ensemble_options(cfg, RunMode::digital(), ctl.threads));
    const std::span<const double> ds(dres.finals.data(), static_cast<std::size_t>(dres.finals.rows()));
    digital_moments = moments(ds);
    ks_digital = ks_statistic(xs, ds);
    if (mode.params == ParamSource::Digital) {
      outcome.checks.push_back({"ks_vs_analytic", cmp.ks_analytic < th.ks_max, cmp.ks_analytic,
                                fmt::format("< {}", num(th.ks_max))});
      outcome.checks.push_back({"ks_vs_digital", *ks_digital < th.ks_max, *ks_digital,
                                fmt::format("< {}", num(th.ks_max))});
    } else if (th.skew_excess) {
      const double diff = cmp.finals.skew - digital_moments->skew;
      outcome.checks.push_back({"skew_exceeds_digital", diff > 0.0, diff, "skew(crossbar) - skew(digital) > 0"});
    }
  }

  Writer w(std::filesystem::path(cfg.out_dir) / mode_dir(mode), outcome);
  std::string finals = "trajectory_id,seed,final_value\n";
  for (Eigen::Index i = 0; i < res.finals.rows(); ++i) {
    const int id = res.final_ids[static_cast<std::size_t>(i)];
    finals += fmt::format("{},{},{}\n", id, res.seeds[static_cast<std::size_t>(id)], num(res.finals(i, 0)));
  }
  w.text("finals.csv", finals);

  Rng ref_rng(derive_seed(cfg.master_seed, Stream::Reference));
  std::string ref = "sample_id,w,final_value\n";
  const double sd = std::sqrt(cfg.t1);
  for (int i = 0; i < cfg.m_trajectories; ++i) {
    const double wv = sd * standard_normal(ref_rng);
    ref += fmt::format("{},{},{}\n", i, num(wv), num(bs_analytic_final(cfg.bs, cfg.t1, wv)));
  }
  w.text("reference.csv", ref);

  Json j;
  j["mode"] = mode.name();
  j["r"] = cfg.bs.r;
  j["sigma"] = cfg.bs.sigma;
  j["t"] = cfg.t1;
  j["x0"] = cfg.bs.x0;
  j["n_steps"] = cfg.n_steps;
  j["m"] = cfg.m_trajectories;
  j["master_seed"] = cfg.master_seed;
  j["diverged"] = res.diverged;
  j["mean"] = cmp.finals.mean;
  j["std"] = cmp.finals.std;
  j["skew"] = cmp.finals.skew;
  j["excess_kurtosis"] = cmp.finals.excess_kurtosis;
  j["analytic_mean"] = cmp.analytic_mean;
  j["analytic_var"] = cmp.analytic_var;
  j["mean_error_se"] = cmp.mean_error_se;
  j["var_rel_error"] = cmp.var_rel_error;
  j["ks_vs_analytic"] = cmp.ks_analytic;
  if (ks_digital) {
    j["ks_vs_digital"] = *ks_digital;
    j["digital_skew"] = digital_moments->skew;
    j["digital_excess_kurtosis"] = digital_moments->excess_kurtosis;
  }
  if (res.calibration) {
    j["calibration_mu_A"] = res.calibration->mu;
    j["calibration_sigma_A"] = res.calibration->sigma;
  }
  j["checks"] = checks_json(outcome.checks);
  j["ok"] = outcome.ok();
  w.json("comparison.json", j);
  w.json("energy_report.json", energy_json(res.ledger));

  if (res.tile) {
    w.text("tile_conductance.csv", tile_csv(*res.tile));
    w.text("bitline_trace.csv", trace_csv(res.trace));
  }
  if (ctl.dump_trajectories) {
    std::string tr = "trajectory_id,step,t,x\n";
    for (std::size_t i = 0; i < res.paths.size(); ++i) {
      const auto& p = res.paths[i];
      for (std::size_t s = 0; s < p.times.size(); ++s) {
        if (s >= static_cast<std::size_t>(p.states.rows())) break;
        tr += fmt::format("{},{},{},{}\n", i, s, num(p.times[s]), num(p.states(static_cast<Eigen::Index>(s), 0)));
      }
    }
    w.text("trajectories.csv", tr);
  }
  if (ctl.dump_nodal && res.tile) {
    const auto layout = SolverLayout::make(cfg.crossbar, 1);
    std::vector<double> wl(static_cast<std::size_t>(cfg.crossbar.rows), 0.0);
    for (const auto& p : layout.noise_pairs) wl[static_cast<std::size_t>(p.row)] = cfg.crossbar.v_read;
    std::ostringstream os;
    dump_nodal_system(os, *res.tile, wl);
    w.text("nodal_system.txt", os.str());
  }
  return outcome;
}

// ---------------------------------------------------------------------------

CommandOutcome cmd_energy_report(const ExperimentConfig& cfg, const RunControls& ctl) {
  cfg.validate();
  const auto problem = make_black_scholes(cfg.bs, cfg.t1, cfg.n_steps);
  const auto res = simulate_ensemble(problem, ensemble_options(cfg, RunMode::full_crossbar(), ctl.threads));
  const auto s = report(res.ledger);
  const auto& th = cfg.check;

  CommandOutcome outcome;
  outcome.checks.push_back(within_factor("program_energy", s.per_program_j, th.program_energy_j, th.energy_factor));
  outcome.checks.push_back(within_factor("total_energy", s.total_j, th.total_energy_j, th.energy_factor));
  outcome.checks.push_back(within_factor("vmm_read_energy", s.read_energy_j, th.read_energy_j, th.energy_factor));
  const double ops = static_cast<double>(s.programs);
  outcome.checks.push_back({"write_operations", std::abs(ops - th.write_ops) <= th.write_ops_rel * th.write_ops, ops,
                            fmt::format("within {} of {}", num(th.write_ops_rel), num(th.write_ops))});

  Writer w(std::filesystem::path(cfg.out_dir) / "energy", outcome);
  w.json("energy_report.json", energy_json(res.ledger));

  EnergyLedger traj = res.ledger;
  const auto& cal = res.calibration_ledger;
  traj.programs -= cal.programs;
  traj.write_pulses -= cal.write_pulses;
  traj.verify_reads -= cal.verify_reads;
  traj.vmm_reads -= cal.vmm_reads;
  traj.gaussian_draws -= cal.gaussian_draws;
  traj.write_energy_j -= cal.write_energy_j;
  traj.verify_energy_j -= cal.verify_energy_j;
  traj.read_energy_j -= cal.read_energy_j;

  auto section = [](const EnergyLedger& l) {
    const auto r = report(l);
    Json j = energy_json(l);
    j["programs"] = r.programs;
    j["gaussian_draws"] = r.gaussian_draws;
    j["per_program_j"] = r.per_program_j;
    j["per_draw_j"] = r.per_draw_j;
    return j;
  };
  Json b;
  b["mode"] = RunMode::full_crossbar().name();
  b["m"] = cfg.m_trajectories;
  b["n_steps"] = cfg.n_steps;
  b["total"] = section(res.ledger);
  b["calibration"] = section(cal);
  b["trajectories"] = section(traj);
  b["noise_write_pulses"] = traj.gaussian_draws * 2U * static_cast<std::uint64_t>(cfg.pulse.writes_per_program);
  b["checks"] = checks_json(outcome.checks);
  b["ok"] = outcome.ok();
  w.json("energy_breakdown.json", b);
  return outcome;
}

std::string failure_json(const std::string& command, const CommandOutcome& outcome) {
  Json j;
  j["ok"] = false;
  j["command"] = command;
  Json failed = Json::array();
  for (const auto& c : outcome.checks) {
    if (!c.pass) failed.push_back({{"name", c.name}, {"value", c.value}, {"detail", c.detail}});
  }
  j["failed"] = failed;
  return j.dump(2);
}

}  // namespace sdex
