#include "dissoc/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dissoc {

const char* const kVersionString = "dissoc1d 1.0.0";

const char* method_name(Method m) {
  switch (m) {
    case Method::positive_p: return "positive_p";
    case Method::twa: return "twa";
    case Method::hfb: return "hfb";
    case Method::undepleted: return "undepleted";
  }
  return "?";
}

static std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out += "; ";
    out += parts[i];
  }
  return out;
}

ValidationError::ValidationError(std::vector<std::string> violations)
    : std::runtime_error("invalid configuration: " + join(violations)),
      violations_(std::move(violations)) {}

RealArray position_grid(const GridSpec& grid) {
  const Real dx = grid.box_length / static_cast<Real>(grid.num_points);
  RealArray x(grid.num_points);
  for (Eigen::Index i = 0; i < grid.num_points; ++i)
    x[i] = -0.5 * grid.box_length + static_cast<Real>(i) * dx;
  return x;
}

RealArray initial_density(const PhysicalParams& params, const GridSpec& grid) {
  const RealArray x = position_grid(grid);
  return params.n0 * (-(x * x) / (params.sigma * params.sigma)).exp();
}

DerivedQuantities derive(const PhysicalParams& params, const GridSpec& grid) {
  DerivedQuantities d;
  d.dx = grid.box_length / static_cast<Real>(grid.num_points);
  d.k0 = std::sqrt(2.0 * params.m_a * std::abs(params.delta) / params.hbar);
  d.n_m0 = d.dx * initial_density(params, grid).sum();
  d.k_grid.resize(grid.num_points);
  for (Eigen::Index j = 0; j < grid.num_points; ++j) {
    const Eigen::Index shifted = (j < (grid.num_points + 1) / 2) ? j : j - grid.num_points;
    d.k_grid[j] = 2.0 * M_PI * static_cast<Real>(shifted) / grid.box_length;
  }
  d.total_number = 2.0 * d.n_m0;
  return d;
}

static bool power_of_two(Eigen::Index n) { return n >= 1 && (n & (n - 1)) == 0; }

ValidatedConfig validate(const PhysicalParams& params, const GridSpec& grid,
                         const RunConfig& run) {
  std::vector<std::string> bad;
  auto require = [&bad](bool ok, const char* msg) {
    if (!ok) bad.emplace_back(msg);
  };

  require(std::isfinite(params.m_a) && params.m_a > 0, "m_a must be positive");
  require(std::isfinite(params.m_m) &&
              std::abs(params.m_m - 2.0 * params.m_a) <= 1e-12 * params.m_m,
          "m_m must equal 2*m_a");
  require(std::isfinite(params.chi_1d) && params.chi_1d >= 0,
          "chi_1d must be nonnegative");
  require(std::isfinite(params.delta) && params.delta < 0, "delta must be negative");
  require(std::isfinite(params.u_aa), "u_aa must be finite");
  require(std::isfinite(params.u_am), "u_am must be finite");
  require(std::isfinite(params.u_mm), "u_mm must be finite");
  require(std::isfinite(params.n0) && params.n0 >= 0, "n0 must be nonnegative");
  require(std::isfinite(params.sigma) && params.sigma > 0, "sigma must be positive");
  require(std::isfinite(params.hbar) && params.hbar > 0, "hbar must be positive");

  require(std::isfinite(grid.box_length) && grid.box_length > 0,
          "box_length must be positive");
  require(power_of_two(grid.num_points), "num_points must be a power of two");
  require(std::isfinite(grid.dt) && grid.dt > 0, "dt must be positive");
  require(std::isfinite(grid.t_final) && grid.t_final >= grid.dt,
          "t_final must be at least dt");
  require(grid.save_stride >= 1, "save_stride must be at least 1");

  if (params.m_a > 0 && params.hbar > 0 && grid.box_length > 0 &&
      power_of_two(grid.num_points)) {
    const Real dx = grid.box_length / static_cast<Real>(grid.num_points);
    const Real k0 = std::sqrt(2.0 * params.m_a * std::abs(params.delta) / params.hbar);
    require(k0 <= 0.7 * (M_PI / dx),
            "k0 must satisfy k0 <= 0.7*k_max (resonant momentum too close to the "
            "grid edge)");
  }

  require(run.trajectories >= 1, "trajectories must be at least 1");
  if (run.method == Method::hfb || run.method == Method::undepleted)
    require(run.trajectories == 1, "trajectories must be 1 for hfb and undepleted");
  require(std::isfinite(run.divergence_threshold) && run.divergence_threshold > 0,
          "divergence_threshold must be positive");
  require(run.n_batches >= 1, "n_batches must be at least 1");
  require(std::isfinite(run.signal_floor) && run.signal_floor >= 0,
          "signal_floor must be nonnegative");
  require(run.g2_bin_halfwidth >= 0, "g2_bin_halfwidth must be nonnegative");
  for (Real t : run.snapshot_times)
    if (!(t >= 0 && t <= grid.t_final)) {
      bad.emplace_back("snapshot_times must lie within [0, t_final]");
      break;
    }

  if (!bad.empty()) throw ValidationError(std::move(bad));

  ValidatedConfig cfg{params, grid, run, derive(params, grid)};
  return cfg;
}

// ---------------------------------------------------------------------------
// Config text parsing

namespace {

struct FieldParser {
  std::vector<std::string> errors;

  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
  }

  bool parse_real(const std::string& key, const std::string& value, Real& out) {
    char* end = nullptr;
    const std::string v = trim(value);
    const double parsed = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size()) {
      errors.push_back("bad value for " + key + ": '" + value + "'");
      return false;
    }
    out = parsed;
    return true;
  }

  bool parse_int(const std::string& key, const std::string& value, long long& out) {
    char* end = nullptr;
    const std::string v = trim(value);
    const long long parsed = std::strtoll(v.c_str(), &end, 10);
    if (v.empty() || end != v.c_str() + v.size()) {
      errors.push_back("bad value for " + key + ": '" + value + "'");
      return false;
    }
    out = parsed;
    return true;
  }

  bool parse_u64(const std::string& key, const std::string& value, std::uint64_t& out) {
    char* end = nullptr;
    const std::string v = trim(value);
    const unsigned long long parsed = std::strtoull(v.c_str(), &end, 10);
    if (v.empty() || end != v.c_str() + v.size()) {
      errors.push_back("bad value for " + key + ": '" + value + "'");
      return false;
    }
    out = parsed;
    return true;
  }

  // Applies one key=value pair; returns false for unknown keys.
  bool apply(ConfigSource& src, const std::string& key, const std::string& value) {
    auto real_field = [&](Real& field) { parse_real(key, value, field); };
    long long i = 0;

    if (key == "m_a") real_field(src.params.m_a);
    else if (key == "m_m") real_field(src.params.m_m);
    else if (key == "chi_1d") real_field(src.params.chi_1d);
    else if (key == "delta") real_field(src.params.delta);
    else if (key == "u_aa") real_field(src.params.u_aa);
    else if (key == "u_am") real_field(src.params.u_am);
    else if (key == "u_mm") real_field(src.params.u_mm);
    else if (key == "n0") real_field(src.params.n0);
    else if (key == "sigma") real_field(src.params.sigma);
    else if (key == "hbar") real_field(src.params.hbar);
    else if (key == "box_length") real_field(src.grid.box_length);
    else if (key == "num_points") {
      if (parse_int(key, value, i)) src.grid.num_points = static_cast<Eigen::Index>(i);
    } else if (key == "dt") real_field(src.grid.dt);
    else if (key == "t_final") real_field(src.grid.t_final);
    else if (key == "save_stride") {
      if (parse_int(key, value, i)) src.grid.save_stride = static_cast<int>(i);
    } else if (key == "method") {
      const std::string v = trim(value);
      if (v == "positive_p") src.run.method = Method::positive_p;
      else if (v == "twa") src.run.method = Method::twa;
      else if (v == "hfb") src.run.method = Method::hfb;
      else if (v == "undepleted") src.run.method = Method::undepleted;
      else errors.push_back("bad value for method: '" + value +
                            "' (expected positive_p, twa, hfb, or undepleted)");
    } else if (key == "trajectories") {
      if (parse_int(key, value, i)) src.run.trajectories = static_cast<int>(i);
    } else if (key == "master_seed") {
      parse_u64(key, value, src.run.master_seed);
    } else if (key == "output_dir") {
      src.run.output_dir = trim(value);
    } else if (key == "divergence_threshold") {
      real_field(src.run.divergence_threshold);
    } else if (key == "n_batches") {
      if (parse_int(key, value, i)) src.run.n_batches = static_cast<int>(i);
    } else if (key == "signal_floor") {
      real_field(src.run.signal_floor);
    } else if (key == "g2_bin_halfwidth") {
      if (parse_int(key, value, i)) src.run.g2_bin_halfwidth = static_cast<int>(i);
    } else if (key == "snapshot_times") {
      src.run.snapshot_times.clear();
      std::stringstream ss(trim(value));
      std::string item;
      while (std::getline(ss, item, ',')) {
        Real t = 0;
        if (parse_real(key, item, t)) src.run.snapshot_times.push_back(t);
      }
    } else {
      return false;
    }
    return true;
  }
};

}  // namespace

ConfigSource parse_config_text(const std::string& text) {
  ConfigSource src;
  FieldParser parser;
  std::stringstream stream(text);
  std::string line;
  int lineno = 0;
  while (std::getline(stream, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = FieldParser::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      parser.errors.push_back("line " + std::to_string(lineno) +
                              ": expected key = value, got '" + line + "'");
      continue;
    }
    const std::string key = FieldParser::trim(line.substr(0, eq));
    const std::string value = line.substr(eq + 1);
    if (src.explicit_keys.count(key)) {
      parser.errors.push_back("duplicate key: " + key);
      continue;
    }
    if (!parser.apply(src, key, value)) {
      parser.errors.push_back("unknown key: " + key);
      continue;
    }
    src.explicit_keys.insert(key);
  }
  if (!parser.errors.empty()) throw ValidationError(std::move(parser.errors));
  return src;
}

ConfigSource parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError({"cannot read config file: " + path});
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

void apply_override(ConfigSource& src, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ValidationError({"--set expects key=value, got '" + assignment + "'"});
  const std::string key = FieldParser::trim(assignment.substr(0, eq));
  const std::string value = assignment.substr(eq + 1);
  FieldParser parser;
  if (!parser.apply(src, key, value))
    throw ValidationError({"unknown key: " + key});
  if (!parser.errors.empty()) throw ValidationError(std::move(parser.errors));
  src.explicit_keys.insert(key);
}

ValidatedConfig finalize(const ConfigSource& src) {
  ConfigSource s = src;
  const bool deterministic =
      s.run.method == Method::hfb || s.run.method == Method::undepleted;
  if (deterministic && !s.explicit_keys.count("trajectories"))
    s.run.trajectories = 1;
  // m_m tracks m_a unless the user pinned it (validate still enforces 2:1).
  if (s.explicit_keys.count("m_a") && !s.explicit_keys.count("m_m"))
    s.params.m_m = 2.0 * s.params.m_a;
  return validate(s.params, s.grid, s.run);
}

static std::string fmt_real(Real v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::map<std::string, std::string> resolved_entries(const ValidatedConfig& cfg) {
  std::map<std::string, std::string> m;
  m["m_a"] = fmt_real(cfg.params.m_a);
  m["m_m"] = fmt_real(cfg.params.m_m);
  m["chi_1d"] = fmt_real(cfg.params.chi_1d);
  m["delta"] = fmt_real(cfg.params.delta);
  m["u_aa"] = fmt_real(cfg.params.u_aa);
  m["u_am"] = fmt_real(cfg.params.u_am);
  m["u_mm"] = fmt_real(cfg.params.u_mm);
  m["n0"] = fmt_real(cfg.params.n0);
  m["sigma"] = fmt_real(cfg.params.sigma);
  m["hbar"] = fmt_real(cfg.params.hbar);
  m["box_length"] = fmt_real(cfg.grid.box_length);
  m["num_points"] = std::to_string(cfg.grid.num_points);
  m["dt"] = fmt_real(cfg.grid.dt);
  m["t_final"] = fmt_real(cfg.grid.t_final);
  m["save_stride"] = std::to_string(cfg.grid.save_stride);
  m["method"] = method_name(cfg.run.method);
  m["trajectories"] = std::to_string(cfg.run.trajectories);
  m["master_seed"] = std::to_string(cfg.run.master_seed);
  m["divergence_threshold"] = fmt_real(cfg.run.divergence_threshold);
  m["n_batches"] = std::to_string(cfg.run.n_batches);
  m["signal_floor"] = fmt_real(cfg.run.signal_floor);
  m["g2_bin_halfwidth"] = std::to_string(cfg.run.g2_bin_halfwidth);
  std::string times;
  for (size_t i = 0; i < cfg.run.snapshot_times.size(); ++i) {
    if (i) times += ",";
    times += fmt_real(cfg.run.snapshot_times[i]);
  }
  m["snapshot_times"] = times;
  m["version"] = kVersionString;
  return m;
}

std::uint64_t manifest_hash(const ValidatedConfig& cfg) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a 64 offset basis
  auto mix = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
  };
  for (const auto& [key, value] : resolved_entries(cfg)) {
    mix(key);
    mix("=");
    mix(value);
    mix("\n");
  }
  return h;
}

}  // namespace dissoc
