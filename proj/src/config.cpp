#include "sdex/config.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <variant>

#include "sdex/errors.hpp"

namespace sdex {

namespace {

using Slot = std::variant<double*, int*, std::uint64_t*, std::string*, bool*>;

struct Entry {
  const char* key;
  Slot slot;
};

std::vector<Entry> table(ExperimentConfig& c) {
  return {
      {"crossbar.rows", &c.crossbar.rows},
      {"crossbar.cols", &c.crossbar.cols},
      {"crossbar.r_line", &c.crossbar.r_line},
      {"crossbar.r_in", &c.crossbar.r_in},
      {"crossbar.r_out", &c.crossbar.r_out},
      {"crossbar.v_read", &c.crossbar.v_read},
      {"crossbar.dac_bits", &c.crossbar.dac_bits},
      {"crossbar.t_read", &c.crossbar.t_read},
      {"device.g_lrs", &c.device.g_lrs},
      {"device.g_hrs", &c.device.g_hrs},
      {"device.write_perturbation", &c.device.write_perturbation},
      {"device.lrs_variability", &c.device.lrs_variability},
      {"device.hrs_variability", &c.device.hrs_variability},
      {"device.stuck_on_rate", &c.device.stuck_on_rate},
      {"device.stuck_off_rate", &c.device.stuck_off_rate},
      {"pulse.write_v", &c.pulse.write_v},
      {"pulse.write_t", &c.pulse.write_t},
      {"pulse.writes_per_program", &c.pulse.writes_per_program},
      {"pulse.verify_v", &c.pulse.verify_v},
      {"pulse.verify_t", &c.pulse.verify_t},
      {"gauss.calib_n", &c.calib_n},
      {"rng.n_vectors", &c.n_vectors},
      {"rng.vector_len", &c.vector_len},
      {"rng.rows", &c.rng_rows},
      {"rng.cols", &c.rng_cols},
      {"bs.r", &c.bs.r},
      {"bs.sigma", &c.bs.sigma},
      {"bs.x0", &c.bs.x0},
      {"bs.t1", &c.t1},
      {"bs.n_steps", &c.n_steps},
      {"bs.m_trajectories", &c.m_trajectories},
      {"bs.x_max", &c.x_max},
      {"run.master_seed", &c.master_seed},
      {"run.out_dir", &c.out_dir},
      {"check.moment_abs_max", &c.check.moment_abs_max},
      {"check.mean_diff_se", &c.check.mean_diff_se},
      {"check.std_ratio_lo", &c.check.std_ratio_lo},
      {"check.std_ratio_hi", &c.check.std_ratio_hi},
      {"check.mean_se", &c.check.mean_se},
      {"check.var_rel", &c.check.var_rel},
      {"check.ks_max", &c.check.ks_max},
      {"check.skew_excess", &c.check.skew_excess},
      {"check.energy_factor", &c.check.energy_factor},
      {"check.program_energy_j", &c.check.program_energy_j},
      {"check.total_energy_j", &c.check.total_energy_j},
      {"check.read_energy_j", &c.check.read_energy_j},
      {"check.write_ops", &c.check.write_ops},
      {"check.write_ops_rel", &c.check.write_ops_rel},
  };
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const char* first = v.data();
  const char* last = v.data() + v.size();
  if (!v.empty() && v.front() == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last || first == last) {
    throw ConfigError("invalid value '" + v + "' for " + key);
  }
  return out;
}

bool parse_bool(const std::string& key, std::string v) {
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("invalid boolean '" + v + "' for " + key);
}

struct Assign {
  const std::string& key;
  const std::string& value;
  void operator()(double* p) const { *p = parse_number<double>(key, value); }
  void operator()(int* p) const { *p = parse_number<int>(key, value); }
  void operator()(std::uint64_t* p) const { *p = parse_number<std::uint64_t>(key, value); }
  void operator()(std::string* p) const { *p = value; }
  void operator()(bool* p) const { *p = parse_bool(key, value); }
};

struct Show {
  std::string operator()(const double* p) const { return fmt::format("{}", *p); }
  std::string operator()(const int* p) const { return fmt::format("{}", *p); }
  std::string operator()(const std::uint64_t* p) const { return fmt::format("{}", *p); }
  std::string operator()(const std::string* p) const { return *p; }
  std::string operator()(const bool* p) const { return *p ? "true" : "false"; }
};

}  // namespace

void ExperimentConfig::validate() const {
  crossbar.validate();
  device.validate();
  pulse.validate();
  bs.validate();
  if (calib_n < 100) throw ConfigError("gauss.calib_n must be >= 100");
  if (n_vectors < 1) throw UsageError("rng.n_vectors must be >= 1");
  if (vector_len < 1) throw UsageError("rng.vector_len must be >= 1");
  if (rng_rows < 1 || rng_cols < 2 * vector_len) {
    throw ConfigError("rng tile must have at least 2 * vector_len columns");
  }
  if (!(t1 > 0.0)) throw ConfigError("bs.t1 must be positive");
  if (n_steps < 1) throw ConfigError("bs.n_steps must be >= 1");
  if (m_trajectories < 1) throw UsageError("bs.m_trajectories must be >= 1");
  if (!(x_max > 0.0)) throw ConfigError("bs.x_max must be positive");
  if (out_dir.empty()) throw ConfigError("run.out_dir must not be empty");
}

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  for (auto& e : table(cfg)) {
    if (key == e.key) {
      std::visit(Assign{key, value}, e.slot);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

void apply_config_text(ExperimentConfig& cfg, const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("{}:{}: expected 'key = value'", origin, n));
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    try {
      apply_setting(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("{}:{}: {}", origin, n, e.what()));
    }
  }
}

void apply_config_file(ExperimentConfig& cfg, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read config file " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  apply_config_text(cfg, ss.str(), path);
}

std::string env_name(const std::string& key) {
  std::string out = "SDEX_";
  for (unsigned char ch : key) out.push_back(ch == '.' ? '_' : static_cast<char>(std::toupper(ch)));
  return out;
}

void apply_env(ExperimentConfig& cfg, const EnvLookup& lookup) {
  for (const auto& key : config_keys()) {
    if (auto v = lookup(env_name(key))) {
      try {
        apply_setting(cfg, key, trim(*v));
      } catch (const ConfigError& e) {
        throw ConfigError(env_name(key) + ": " + e.what());
      }
    }
  }
}

void apply_process_env(ExperimentConfig& cfg) {
  apply_env(cfg, [](const std::string& name) -> std::optional<std::string> {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
  });
}

std::vector<std::string> config_keys() {
  ExperimentConfig scratch;
  std::vector<std::string> keys;
  for (const auto& e : table(scratch)) keys.emplace_back(e.key);
  return keys;
}

std::string dump_config(const ExperimentConfig& cfg) {
  auto copy = cfg;
  std::string out;
  for (const auto& e : table(copy)) out += fmt::format("{} = {}\n", e.key, std::visit(Show{}, e.slot));
  return out;
}

}  // namespace sdex
