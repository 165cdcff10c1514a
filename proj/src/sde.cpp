#include "sdex/sde.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

#include "sdex/errors.hpp"
#include "sdex/stats.hpp"

namespace sdex {

void SdeProblem::validate() const {
  if (dim < 1) throw UsageError("SDE dimension must be >= 1");
  if (!drift || !diffusion) throw UsageError("SDE needs drift and diffusion callables");
  if (x0.size() != dim) throw UsageError("x0 length does not match the SDE dimension");
  if (!(t1 > t0)) throw RangeError("SDE needs t1 > t0");
  if (n_steps < 1) throw RangeError("SDE needs n_steps >= 1");
  if (linear) {
    const auto& l = *linear;
    if (l.drift_matrix.rows() != dim || l.drift_matrix.cols() != dim || l.diffusion_matrix.rows() != dim ||
        l.diffusion_matrix.cols() != dim) {
      throw UsageError("linear coefficient matrices must be dim x dim");
    }
  }
}

void BlackScholesParams::validate() const {
  if (!(sigma >= 0.0)) throw RangeError("Black-Scholes sigma must be >= 0");
  if (!(x0 > 0.0)) throw RangeError("Black-Scholes x0 must be positive");
}

double bs_analytic_final(const BlackScholesParams& p, double t, double w) {
  return p.x0 * std::exp(p.sigma * w + (p.r - 0.5 * p.sigma * p.sigma) * t);
}

double bs_mean(const BlackScholesParams& p, double t) { return p.x0 * std::exp(p.r * t); }

double bs_var(const BlackScholesParams& p, double t) {
  return p.x0 * p.x0 * std::exp(2.0 * p.r * t) * std::expm1(p.sigma * p.sigma * t);
}

double bs_cdf(const BlackScholesParams& p, double t, double x) {
  if (x <= 0.0) return 0.0;
  const double mu = std::log(p.x0) + (p.r - 0.5 * p.sigma * p.sigma) * t;
  const double s = p.sigma * std::sqrt(t);
  if (s == 0.0) return x >= std::exp(mu) ? 1.0 : 0.0;
  return normal_cdf((std::log(x) - mu) / s);
}

SdeProblem make_black_scholes(const BlackScholesParams& p, double t1, int n_steps) {
  p.validate();
  SdeProblem prob;
  prob.dim = 1;
  const double r = p.r;
  const double s = p.sigma;
  prob.drift = [r](double, const Eigen::VectorXd& x) -> Eigen::VectorXd { return r * x; };
  prob.diffusion = [s](double, const Eigen::VectorXd& x) -> Eigen::VectorXd { return -s * x; };
  prob.x0 = Eigen::VectorXd::Constant(1, p.x0);
  prob.t0 = 0.0;
  prob.t1 = t1;
  prob.n_steps = n_steps;
  prob.linear = LinearCoefficients{Eigen::MatrixXd::Constant(1, 1, r), Eigen::MatrixXd::Constant(1, 1, -s)};
  // The diffusion term carries a minus sign, so X(t) depends on -W(t).
  prob.exact = [p](double t, const Eigen::VectorXd& w) -> Eigen::VectorXd {
    return Eigen::VectorXd::Constant(1, bs_analytic_final(p, t, -w[0]));
  };
  return prob;
}

SdeProblem make_wiener(int dim, double t1, int n_steps) {
  SdeProblem prob;
  prob.dim = dim;
  prob.drift = [dim](double, const Eigen::VectorXd&) -> Eigen::VectorXd { return Eigen::VectorXd::Zero(dim); };
  prob.diffusion = [dim](double, const Eigen::VectorXd&) -> Eigen::VectorXd { return Eigen::VectorXd::Ones(dim); };
  prob.x0 = Eigen::VectorXd::Zero(dim);
  prob.t1 = t1;
  prob.n_steps = n_steps;
  prob.exact = [](double, const Eigen::VectorXd& w) -> Eigen::VectorXd { return w; };
  return prob;
}

Eigen::VectorXd em_update(const Eigen::VectorXd& x, const Eigen::VectorXd& drift, const Eigen::VectorXd& diffusion,
                          double dt, const Eigen::VectorXd& dw) {
  return x + drift * dt + diffusion.cwiseProduct(dw);
}

namespace {

[[noreturn]] void non_finite(const char* what, double t, const Eigen::VectorXd& x) {
  std::ostringstream os;
  os << what << " is not finite at t=" << t << ", x=[" << x.transpose() << "]";
  throw NumericalError(os.str());
}

}  // namespace

Eigen::VectorXd em_step(const Eigen::VectorXd& x, double t, double dt, const Eigen::VectorXd& dw,
                        const SdeProblem& problem) {
  if (!(dt > 0.0)) throw RangeError("em_step needs dt > 0");
  const Eigen::VectorXd r = problem.drift(t, x);
  const Eigen::VectorXd s = problem.diffusion(t, x);
  if (r.size() != x.size() || s.size() != x.size() || dw.size() != x.size()) {
    throw UsageError("drift, diffusion and dw must match the state dimension");
  }
  if (!r.allFinite()) non_finite("drift", t, x);
  if (!s.allFinite()) non_finite("diffusion", t, x);
  return em_update(x, r, s, dt, dw);
}

std::string RunMode::name() const {
  if (noise == NoiseSource::Digital && params == ParamSource::Digital) return "digital";
  if (noise == NoiseSource::Crossbar && params == ParamSource::Digital) return "noise-only";
  if (noise == NoiseSource::Crossbar && params == ParamSource::Crossbar) return "full-crossbar";
  return "digital-noise-crossbar-params";
}

SolverLayout SolverLayout::make(const CrossbarConfig& config, int dim) {
  if (config.rows < dim + 1 || config.cols < 6 * dim) {
    throw UsageError("a " + std::to_string(dim) + "-dimensional solver does not fit in a " +
                     std::to_string(config.rows) + "x" + std::to_string(config.cols) + " tile");
  }
  SolverLayout l;
  l.dim = dim;
  l.noise_pairs = pairs_on_row(dim, dim, 4 * dim);
  return l;
}

// ---------------------------------------------------------------------------

namespace {

struct CrossbarContext {
  SolverLayout layout;
  std::optional<GaussianSource> source;  // calibrated template
  MappingParams mapping;
  Eigen::MatrixXd weights;               // [drift; diffusion], 2d x d
  std::vector<CellAddr> weight_cells;
};

struct Slot {
  Eigen::VectorXd final_state;
  bool ok = true;
  EnergyLedger ledger;
  Trajectory path;
  std::vector<ReadTrace> trace;
  std::optional<CrossbarTile> tile;
};

CrossbarContext build_context(const SdeProblem& problem, const EnsembleOptions& opt) {
  const auto& xs = opt.crossbar;
  xs.config.validate();
  xs.spec.validate();
  const int d = problem.dim;

  CrossbarContext ctx;
  ctx.layout = SolverLayout::make(xs.config, d);

  Rng tile_rng(derive_seed(opt.seed, Stream::Tile));
  CrossbarTile tile(xs.config, make_device(xs.spec, xs.spec.g_lrs, DeviceClass::Unused));
  populate_background(tile, xs.spec, tile_rng);

  std::vector<double> targets;
  if (opt.mode.params == ParamSource::Crossbar) {
    if (!problem.linear) throw UsageError("crossbar coefficient mode needs linear drift and diffusion");
    ctx.weights.resize(2 * d, d);
    ctx.weights << problem.linear->drift_matrix, problem.linear->diffusion_matrix;
    double w_max = ctx.weights.cwiseAbs().maxCoeff();
    if (!(w_max > 0.0)) w_max = 1.0;
    ctx.mapping = MappingParams::from(xs.spec, w_max, xs.x_max);
    // Mark the coefficient cells; they start unprogrammed and are written
    // per trajectory.
    CrossbarTile probe = tile;
    ctx.weight_cells = place_weights(probe, ctx.weights, ctx.mapping, ctx.layout.weight_row0, ctx.layout.weight_col0);
    for (const auto& a : ctx.weight_cells) {
      targets.push_back(probe.at(a).g_target);
      auto& dev = tile.at(a);
      dev.cls = DeviceClass::Weight;
      dev.g_target = probe.at(a).g_target;
    }
  }

  GaussianSource::Params gp;
  gp.g_target = xs.spec.g_hrs;
  gp.variability = xs.spec.variability_for(gp.g_target);
  gp.calib_n = xs.calib_n;
  gp.g_reset = xs.spec.g_lrs;
  gp.pulses = xs.pulses;
  GaussianSource src(tile, ctx.layout.noise_pairs, gp, derive_seed(opt.seed, Stream::Calibration), ctx.weight_cells);

  if (!ctx.weight_cells.empty()) {
    // Calibrate against the nominal (target) coefficient state.
    for (std::size_t k = 0; k < ctx.weight_cells.size(); ++k) {
      DeviceState dev = src.tile().at(ctx.weight_cells[k]);
      if (!dev.faulted()) dev.g_actual = targets[k];
      src.set_device(ctx.weight_cells[k], dev, false);
    }
    ctx.mapping.gains = twin_gains(src.current_operator(), xs.config, ctx.weights, ctx.mapping,
                                   ctx.layout.weight_row0, ctx.layout.weight_col0);
  }
  src.calibrate();
  ctx.source = std::move(src);
  return ctx;
}

void run_trajectory(int index, const SdeProblem& problem, const EnsembleOptions& opt, const CrossbarContext* ctx,
                    Slot& slot) {
  const int d = problem.dim;
  const double dt = problem.dt();
  const double sqrt_dt = std::sqrt(dt);
  const std::uint64_t seed = derive_seed(opt.seed, Stream::Trajectory, static_cast<std::uint64_t>(index));
  const bool tracing = index == 0 && opt.trace_reads > 0;
  auto trace = [&](const char* kind, const Eigen::VectorXd& currents) {
    if (!tracing || static_cast<int>(slot.trace.size()) >= opt.trace_reads) return;
    slot.trace.push_back({kind, std::vector<double>(currents.data(), currents.data() + currents.size())});
  };

  std::optional<GaussianSource> src;
  Rng rng(seed);
  if (opt.mode.noise == NoiseSource::Crossbar || opt.mode.params == ParamSource::Crossbar) {
    src = ctx->source;
    src->reseed(seed);
    src->ledger() = EnergyLedger{};
  }
  if (opt.mode.params == ParamSource::Crossbar) {
    Rng wrng(derive_seed(opt.seed, Stream::Weights, static_cast<std::uint64_t>(index)));
    for (const auto& a : ctx->weight_cells) {
      const DeviceState cur = src->tile().at(a);
      const auto prog = program_weight(opt.crossbar.spec, cur, cur.g_target, wrng);
      src->set_device(a, prog.state, true);
    }
  }
  if (index == 0 && src) slot.tile = src->tile();

  Eigen::VectorXd x = problem.x0;
  double t = problem.t0;
  if (opt.keep_paths) {
    slot.path.times.resize(static_cast<std::size_t>(problem.n_steps) + 1);
    slot.path.states.resize(problem.n_steps + 1, d);
    slot.path.times[0] = t;
    slot.path.states.row(0) = x.transpose();
  }

  Eigen::VectorXd dw(d);
  std::vector<double> z(static_cast<std::size_t>(d));
  std::vector<double> raw(static_cast<std::size_t>(d));
  const auto& cfg = opt.crossbar.config;
  std::vector<double> xin(static_cast<std::size_t>(cfg.rows), 0.0);
  std::vector<Eigen::VectorXd> planes;

  for (int step = 0; step < problem.n_steps; ++step) {
    if (opt.mode.noise == NoiseSource::Crossbar) {
      src->draw(z, raw);
      trace("noise", src->last_bitline_currents());
      // The calibrated offset carries sampling error shared by every draw of
      // the run; summed over n_steps it would shift W(t1) coherently.
      // Alternating the read polarity cancels it pairwise, and since the
      // draws are independent and symmetric the increments keep their law.
      const double polarity = (step % 2 == 0) ? 1.0 : -1.0;
      for (int j = 0; j < d; ++j) dw[j] = polarity * z[static_cast<std::size_t>(j)] * sqrt_dt;
    } else {
      for (int j = 0; j < d; ++j) dw[j] = standard_normal(rng) * sqrt_dt;
    }

    Eigen::VectorXd drift;
    Eigen::VectorXd diffusion;
    if (opt.mode.params == ParamSource::Crossbar) {
      bool in_range = true;
      for (int j = 0; j < d; ++j) {
        if (!(std::abs(x[j]) <= ctx->mapping.x_max)) in_range = false;
        xin[static_cast<std::size_t>(ctx->layout.weight_row0 + j)] = x[j];
      }
      if (!in_range) {
        slot.ok = false;
        break;
      }
      planes.clear();
      const auto out = vmm_read(src->current_operator(), cfg, xin, ctx->mapping, tracing ? &planes : nullptr);
      charge_vmm_read(src->ledger(), out.events);
      for (const auto& p : planes) trace("vmm", p);
      drift.resize(d);
      diffusion.resize(d);
      const int p0 = ctx->layout.weight_col0 / 2;
      for (int j = 0; j < d; ++j) {
        drift[j] = out.values[static_cast<std::size_t>(p0 + j)];
        diffusion[j] = out.values[static_cast<std::size_t>(p0 + d + j)];
      }
      x = em_update(x, drift, diffusion, dt, dw);
    } else {
      x = em_step(x, t, dt, dw, problem);
    }
    t = problem.t0 + (step + 1) * dt;

    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > opt.divergence_limit) {
      slot.ok = false;
      break;
    }
    if (opt.keep_paths) {
      slot.path.times[static_cast<std::size_t>(step) + 1] = t;
      slot.path.states.row(step + 1) = x.transpose();
    }
  }
  slot.final_state = x;
  if (src) slot.ledger = src->ledger();
}

}  // namespace

EnsembleResult simulate_ensemble(const SdeProblem& problem, const EnsembleOptions& options) {
  problem.validate();
  if (options.m < 1) throw UsageError("ensemble needs m >= 1");

  std::optional<CrossbarContext> ctx;
  const bool crossbar = options.mode.noise == NoiseSource::Crossbar || options.mode.params == ParamSource::Crossbar;
  if (crossbar) ctx = build_context(problem, options);

  std::vector<Slot> slots(static_cast<std::size_t>(options.m));
  const int workers = std::clamp(options.threads, 1, options.m);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  auto work = [&](int w) {
    try {
      for (int i = w; i < options.m; i += workers) {
        run_trajectory(i, problem, options, ctx ? &*ctx : nullptr, slots[static_cast<std::size_t>(i)]);
      }
    } catch (...) {
      errors[static_cast<std::size_t>(w)] = std::current_exception();
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  EnsembleResult res;
  if (ctx) {
    res.calibration_ledger = ctx->source->ledger();
    res.calibration = ctx->source->calibration();
  }
  res.ledger = res.calibration_ledger;
  int ok = 0;
  for (const auto& s : slots) ok += s.ok ? 1 : 0;
  res.finals.resize(ok, problem.dim);
  int row = 0;
  for (int i = 0; i < options.m; ++i) {
    auto& s = slots[static_cast<std::size_t>(i)];
    res.seeds.push_back(derive_seed(options.seed, Stream::Trajectory, static_cast<std::uint64_t>(i)));
    res.ledger.merge(s.ledger);
    if (s.ok) {
      res.finals.row(row++) = s.final_state.transpose();
      res.final_ids.push_back(i);
    } else {
      ++res.diverged;
    }
    if (options.keep_paths) res.paths.push_back(std::move(s.path));
  }
  res.trace = std::move(slots[0].trace);
  res.tile = std::move(slots[0].tile);
  return res;
}

// ---------------------------------------------------------------------------

StrongOrderResult estimate_strong_order(const SdeProblem& problem, const std::vector<double>& dts, int m,
                                        std::uint64_t seed) {
  problem.validate();
  if (m < 1) throw UsageError("estimate_strong_order needs m >= 1");
  std::vector<double> levels(dts);
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  if (levels.size() < 3) throw UsageError("estimate_strong_order needs at least 3 distinct dt values");

  const double span = problem.t1 - problem.t0;
  const double finest = problem.exact ? levels.front() : levels.front() / 8.0;
  const auto n_fine = static_cast<long>(std::llround(span / finest));
  if (std::abs(n_fine * finest - span) > 1e-9 * span) throw UsageError("dt values must divide the time span");
  std::vector<long> stride;
  for (double dt : levels) {
    const auto k = static_cast<long>(std::llround(dt / finest));
    if (k < 1 || std::abs(k * finest - dt) > 1e-9 * dt || n_fine % k != 0) {
      throw UsageError("dt values must be integer multiples of the finest dt");
    }
    stride.push_back(k);
  }

  const int d = problem.dim;
  const double sq = std::sqrt(finest);
  std::vector<double> err(levels.size(), 0.0);
  Rng rng(derive_seed(seed, Stream::Order));
  Eigen::MatrixXd inc(n_fine, d);
  for (int path = 0; path < m; ++path) {
    for (long s = 0; s < n_fine; ++s)
      for (int j = 0; j < d; ++j) inc(s, j) = standard_normal(rng) * sq;

    Eigen::VectorXd reference;
    if (problem.exact) {
      reference = problem.exact(problem.t1, inc.colwise().sum().transpose());
    } else {
      Eigen::VectorXd x = problem.x0;
      for (long s = 0; s < n_fine; ++s) x = em_step(x, problem.t0 + s * finest, finest, inc.row(s).transpose(), problem);
      reference = x;
    }
    for (std::size_t l = 0; l < levels.size(); ++l) {
      const long k = stride[l];
      const double dt = levels[l];
      Eigen::VectorXd x = problem.x0;
      for (long s = 0; s < n_fine; s += k) {
        const Eigen::VectorXd dw = inc.middleRows(s, k).colwise().sum().transpose();
        x = em_step(x, problem.t0 + (s / k) * dt, dt, dw, problem);
      }
      err[l] += (x - reference).norm();
    }
  }

  StrongOrderResult out;
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const double e = err[l] / m;
    if (!(e > 0.0)) throw NumericalError("strong error vanished; slope undefined");
    out.dts.push_back(levels[l]);
    out.errors.push_back(e);
    lx.push_back(std::log(levels[l]));
    ly.push_back(std::log(e));
  }
  out.slope = trend_slope(lx, ly).slope;
  return out;
}

}  // namespace sdex
