#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

namespace vjsim {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& origin, const std::string& key,
                            const std::string& value, const char* expected) {
  throw ConfigError(origin + ": key '" + key + "' has value '" + value + "', expected " +
                    expected);
}

double parse_double(const std::string& origin, const std::string& key, const std::string& value) {
  std::string low = value;
  std::transform(low.begin(), low.end(), low.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (low == "inf" || low == "infinity") return kOmegaInfinite;
  double out = 0.0;
  const char* first = value.data();
  const char* last = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) bad_value(origin, key, value, "a number or 'inf'");
  return out;
}

long long parse_int(const std::string& origin, const std::string& key, const std::string& value) {
  long long out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size())
    bad_value(origin, key, value, "an integer");
  return out;
}

std::uint64_t parse_u64(const std::string& origin, const std::string& key,
                        const std::string& value) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size())
    bad_value(origin, key, value, "a non-negative integer");
  return out;
}

std::string format_int(long long v) { return std::to_string(v); }

// One row per config key.  Parsing and serialization walk the same table, so
// a key cannot exist in one direction and not the other.
struct Field {
  const char* key;
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"speed_m_per_s",
       [](ExperimentConfig& c, const std::string& v, const std::string& o) {
         c.phys.s = parse_double(o, "speed_m_per_s", v);
       },
       [](const ExperimentConfig& c) { return format_double(c.phys.s); }},
      {"turn_rate_per_s",
       [](ExperimentConfig& c, const std::string& v, const std::string& o) {
         c.phys.lambda0 = parse_double(o, "turn_rate_per_s", v);
       },
       [](const ExperimentConfig& c) { return format_double(c.phys.lambda0); }},
      {"turn_speed_rad_per_s",
       [](ExperimentConfig& c, const std::string& v, const std::string& o) {
         c.phys.omega = parse_double(o, "turn_speed_rad_per_s", v);
       },
       [](const ExperimentConfig& c) { return format_double(c.phys.omega); }},
      {"body_diameter_m",
       [](ExperimentConfig& c, const std::string& v, const std::string& o) {
         c.phys.epsilon = parse_double(o, "body_diameter_m", v);
       },
       [](const ExperimentConfig& c) { return format_double(c.phys.epsilon); }},
      {"signal_gain",
       [](ExperimentConfig& c, const std::string& v, const std::string& o) {
         c.phys.alpha = parse_double(o, "signal_gain", v);
       },
       [](const ExperimentConfig& c) { return format_double(c.phys.alpha); }},
      {"adaptation_time_s",
       [](ExperimentConfig& c, const std::string& v, const std::string& o) {
         c.phys.t_a = parse_double(o, "adaptation_time_s", v);
       },
       [](const ExperimentConfig& c) { return format_double(c.phys.t_a); }},
      {"arena_length_m",
       [](ExperimentConfig& c, const std::string& v, const std::string& o) {
         c.arena.Lx = parse_double(o, "arena_length_m", v);
       },
       [](const ExperimentConfig& c) { return format_double(c.arena.Lx); }},
      {"arena_width_m",
       [](ExperimentConfig& c, const std::string& v, const std::string& o) {
         c.arena.Ly = parse_double(o, "arena_width_m", v);
       },
       [](const ExperimentConfig& c) { return format_double(c.arena.Ly); }},
      {"pen_edge_m",
       [](ExperimentConfig& c, const std::string& v, const std::string& o) {
         c.arena.L0 = parse_double(o, "pen_edge_m", v);
       },
       [](const ExperimentConfig& c) { return format_double(c.arena.L0); }},
      {"target_edge",
       [](ExperimentConfig& c, const std::string& v, const std::string& o) {
         if (v == "open")
           c.arena.target_open = true;
         else if (v == "closed")
           c.arena.target_open = false;
         else
           bad_value(o, "target_edge", v, "'open' or 'closed'");
       },
       [](const ExperimentConfig& c) {
         return std::string(c.arena.target_open ? "open" : "closed");
       }},
      {"pen_x_min_m",
       [](ExperimentConfig& c, const std::string& v, const std::string& o) {
         c.arena.pen_x.lo = parse_double(o, "pen_x_min_m", v);
       },
       [](const ExperimentConfig& c) { return format_double(c.arena.pen_x.lo); }},
      {"pen_x_max_m",
       [](ExperimentConfig& c, const std::string& v, const std::string& o) {
         c.arena.pen_x.hi = parse_double(o, "pen_x_max_m", v);
       },
       [](const ExperimentConfig& c) { return format_double(c.arena.pen_x.hi); }},
      {"pen_y_min_m",
       [](ExperimentConfig& c, const std::string& v, const std::string& o) {
         c.arena.pen_y.lo = parse_double(o, "pen_y_min_m", v);
       },
       [](const ExperimentConfig& c) { return format_double(c.arena.pen_y.lo); }},
      {"pen_y_max_m",
       [](ExperimentConfig& c, const std::string& v, const std::string& o) {
         c.arena.pen_y.hi = parse_double(o, "pen_y_max_m", v);
       },
       [](const ExperimentConfig& c) { return format_double(c.arena.pen_y.hi); }},
      {"dt_s",
       [](ExperimentConfig& c, const std::string& v, const std::string& o) {
         c.num.dt = parse_double(o, "dt_s", v);
       },
       [](const ExperimentConfig& c) { return format_double(c.num.dt); }},
      {"dx_m",
       [](ExperimentConfig& c, const std::string& v, const std::string& o) {
         c.num.dx = parse_double(o, "dx_m", v);
       },
       [](const ExperimentConfig& c) { return format_double(c.num.dx); }},
      {"n_theta",
       [](ExperimentConfig& c, const std::string& v, const std::string& o) {
         c.num.n_theta = static_cast<int>(parse_int(o, "n_theta", v));
       },
       [](const ExperimentConfig& c) { return format_int(c.num.n_theta); }},
      {"turn_slot_s",
       [](ExperimentConfig& c, const std::string& v, const std::string& o) {
         c.num.d_eta = parse_double(o, "turn_slot_s", v);
       },
       [](const ExperimentConfig& c) { return format_double(c.num.d_eta); }},
      {"t_end_s",
       [](ExperimentConfig& c, const std::string& v, const std::string& o) {
         c.num.t_end = parse_double(o, "t_end_s", v);
       },
       [](const ExperimentConfig& c) { return format_double(c.num.t_end); }},
      {"solver_tol",
       [](ExperimentConfig& c, const std::string& v, const std::string& o) {
         c.num.solver_tol = parse_double(o, "solver_tol", v);
       },
       [](const ExperimentConfig& c) { return format_double(c.num.solver_tol); }},
      {"max_iters",
       [](ExperimentConfig& c, const std::string& v, const std::string& o) {
         c.num.max_iters = parse_int(o, "max_iters", v);
       },
       [](const ExperimentConfig& c) { return format_int(c.num.max_iters); }},
      {"collisions",
       [](ExperimentConfig& c, const std::string& v, const std::string& o) {
         if (v == "point")
           c.mode.collisions = CollisionMode::Point;
         else if (v == "hard_sphere")
           c.mode.collisions = CollisionMode::HardSphere;
         else
           bad_value(o, "collisions", v, "'point' or 'hard_sphere'");
       },
       [](const ExperimentConfig& c) {
         return std::string(c.mode.collisions == CollisionMode::Point ? "point" : "hard_sphere");
       }},
      {"turning",
       [](ExperimentConfig& c, const std::string& v, const std::string& o) {
         if (v == "instant")
           c.mode.turning = TurningMode::Instant;
         else if (v == "finite")
           c.mode.turning = TurningMode::FiniteOmega;
         else
           bad_value(o, "turning", v, "'instant' or 'finite'");
       },
       [](const ExperimentConfig& c) {
         return std::string(c.mode.turning == TurningMode::Instant ? "instant" : "finite");
       }},
      {"signal",
       [](ExperimentConfig& c, const std::string& v, const std::string& o) {
         if (v == "none")
           c.mode.signal = SignalMode::None;
         else if (v == "gradient_approx")
           c.mode.signal = SignalMode::GradientApprox;
         else if (v == "internal_variable")
           c.mode.signal = SignalMode::InternalVariable;
         else
           bad_value(o, "signal", v, "'none', 'gradient_approx' or 'internal_variable'");
       },
       [](const ExperimentConfig& c) {
         switch (c.mode.signal) {
           case SignalMode::GradientApprox: return std::string("gradient_approx");
           case SignalMode::InternalVariable: return std::string("internal_variable");
           default: return std::string("none");
         }
       }},
      {"signal_intercept",
       [](ExperimentConfig& c, const std::string& v, const std::string& o) {
         c.signal.intercept = parse_double(o, "signal_intercept", v);
       },
       [](const ExperimentConfig& c) { return format_double(c.signal.intercept); }},
      {"signal_slope_per_m",
       [](ExperimentConfig& c, const std::string& v, const std::string& o) {
         c.signal.slope = parse_double(o, "signal_slope_per_m", v);
       },
       [](const ExperimentConfig& c) { return format_double(c.signal.slope); }},
      {"n_agents",
       [](ExperimentConfig& c, const std::string& v, const std::string& o) {
         c.n_agents = static_cast<int>(parse_int(o, "n_agents", v));
       },
       [](const ExperimentConfig& c) { return format_int(c.n_agents); }},
      {"n_runs",
       [](ExperimentConfig& c, const std::string& v, const std::string& o) {
         c.n_runs = static_cast<int>(parse_int(o, "n_runs", v));
       },
       [](const ExperimentConfig& c) { return format_int(c.n_runs); }},
      {"seed",
       [](ExperimentConfig& c, const std::string& v, const std::string& o) {
         c.seed = parse_u64(o, "seed", v);
       },
       [](const ExperimentConfig& c) { return std::to_string(c.seed); }},
      {"warmup_s",
       [](ExperimentConfig& c, const std::string& v, const std::string& o) {
         c.warmup = parse_double(o, "warmup_s", v);
       },
       [](const ExperimentConfig& c) { return format_double(c.warmup); }},
      {"horizon_s",
       [](ExperimentConfig& c, const std::string& v, const std::string& o) {
         c.horizon = parse_double(o, "horizon_s", v);
       },
       [](const ExperimentConfig& c) { return format_double(c.horizon); }},
      {"mass_sample_dt_s",
       [](ExperimentConfig& c, const std::string& v, const std::string& o) {
         c.mass_sample_dt = parse_double(o, "mass_sample_dt_s", v);
       },
       [](const ExperimentConfig& c) { return format_double(c.mass_sample_dt); }},
      {"out_dir",
       [](ExperimentConfig& c, const std::string& v, const std::string& o) {
         (void)o;
         c.out_dir = v;
       },
       [](const ExperimentConfig& c) { return c.out_dir; }},
  };
  return table;
}

}  // namespace

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

void ExperimentConfig::validate() const {
  phys.validate();
  arena.validate();
  num.validate(phys);
  if (n_agents < 1) throw ConfigError("n_agents must be at least 1");
  if (n_runs < 1) throw ConfigError("n_runs must be at least 1");
  if (warmup < 0.0) throw ConfigError("warmup_s must not be negative");
  if (!(horizon > 0.0)) throw ConfigError("horizon_s must be positive");
  if (!(mass_sample_dt > 0.0)) throw ConfigError("mass_sample_dt_s must be positive");
  if (mode.signal != SignalMode::None) signal.validate(arena);
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value', got '" +
                        line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key or value");
    const std::string where = origin + ":" + std::to_string(lineno);
    bool found = false;
    for (const Field& f : fields()) {
      if (key == f.key) {
        f.set(cfg, value, where);
        found = true;
        break;
      }
    }
    if (!found) throw ConfigError(where + ": unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const Field& f : fields()) {
    out += f.key;
    out += " = ";
    out += f.get(cfg);
    out += '\n';
  }
  return out;
}

std::string config_digest(const ExperimentConfig& cfg) {
  std::uint64_t h = 1469598103934665603ULL;
  std::istringstream in(serialize_config(cfg));
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("out_dir ", 0) == 0) continue;  // where files land is not identity
    for (char ch : line) {
      h ^= static_cast<unsigned char>(ch);
      h *= 1099511628211ULL;
    }
    h ^= static_cast<unsigned char>('\n');
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace vjsim
