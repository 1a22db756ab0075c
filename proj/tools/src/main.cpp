// Command line front end: simulate (stochastic runs), solve (deterministic
// solvers), compare (cross-check prior outputs), report (regenerate plots).
// Every command drops a summary.json in its output directory; on failure the
// summary carries an error code instead of results and the exit status is
// nonzero.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "config.hpp"
#include "outputs.hpp"
#include "vjsim/agents.hpp"
#include "vjsim/exit_time.hpp"
#include "vjsim/stats.hpp"
#include "vjsim/transport_fvm.hpp"

namespace fs = std::filesystem;
using njson = nlohmann::ordered_json;
using namespace vjsim;

namespace {

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

const char* error_code(const std::exception& e) {
  if (dynamic_cast<const CflError*>(&e)) return "CflError";
  if (dynamic_cast<const PackingError*>(&e)) return "PackingError";
  if (dynamic_cast<const NoConvergence*>(&e)) return "NoConvergence";
  if (dynamic_cast<const NonPositiveRate*>(&e)) return "NonPositiveRate";
  if (dynamic_cast<const DegenerateFit*>(&e)) return "DegenerateFit";
  if (dynamic_cast<const EmptySample*>(&e)) return "EmptySample";
  if (dynamic_cast<const SchemaError*>(&e)) return "SchemaError";
  if (dynamic_cast<const ConfigError*>(&e)) return "ConfigError";
  return "InternalError";
}

int error_exit_status(const std::exception& e) {
  const std::string code = error_code(e);
  if (code == "ConfigError") return 2;
  if (code == "CflError") return 3;
  if (code == "PackingError") return 4;
  if (code == "NoConvergence") return 5;
  if (code == "NonPositiveRate") return 6;
  if (code == "DegenerateFit") return 7;
  if (code == "EmptySample") return 8;
  if (code == "SchemaError") return 9;
  return 1;
}

// json numbers go through nlohmann's shortest-round-trip dtoa, which keeps
// summaries byte-stable across identical runs
void write_summary(const std::string& out_dir, const njson& summary) {
  write_text_file((fs::path(out_dir) / "summary.json").string(), summary.dump(2) + "\n");
}

std::vector<double> time_grid(double t_end, double dt) {
  std::vector<double> grid;
  const long n = std::lround(std::floor(t_end / dt + 1e-9));
  grid.reserve(static_cast<std::size_t>(n) + 1);
  for (long i = 0; i <= n; ++i) grid.push_back(static_cast<double>(i) * dt);
  return grid;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const ExperimentConfig& cfg, int threads) {
  Timer timer;
  ensure_dir(cfg.out_dir);
  const std::string digest = config_digest(cfg);

  ExperimentSetup setup;
  setup.phys = cfg.phys;
  setup.arena = cfg.arena;
  setup.num = cfg.num;
  setup.mode = cfg.mode;
  setup.signal = cfg.signal;
  setup.n_agents = cfg.n_agents;
  setup.warmup = cfg.warmup;
  setup.config_digest = digest;

  const std::vector<RunRecord> records = run_exit_experiment(setup, cfg.n_runs, cfg.seed, threads);
  const double t_run = timer.seconds();
  const auto positions = final_positions(setup, cfg.n_runs, cfg.seed, threads);

  // one JSON object per run; agents are (index, exit time) pairs
  std::string jsonl;
  long n_exited = 0, n_censored = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    njson rec;
    rec["run"] = i;
    rec["seed"] = records[i].seed;
    rec["config_digest"] = records[i].config_digest;
    njson exits = njson::array();
    for (const auto& [agent, t] : records[i].exit_times) exits.push_back({agent, t});
    rec["exit_times_s"] = exits;
    rec["censored"] = records[i].censored;
    jsonl += rec.dump() + "\n";
    n_exited += static_cast<long>(records[i].exit_times.size());
    n_censored += records[i].censored;
  }
  write_text_file((fs::path(cfg.out_dir) / "records.jsonl").string(), jsonl);

  std::vector<std::vector<std::string>> exit_rows;
  for (std::size_t i = 0; i < records.size(); ++i)
    for (const auto& [agent, t] : records[i].exit_times)
      exit_rows.push_back({std::to_string(i), std::to_string(agent), format_double(t)});
  write_csv((fs::path(cfg.out_dir) / "exit_times.csv").string(),
            {"run", "agent", "exit_time_s"}, exit_rows);

  std::vector<std::vector<std::string>> pos_rows;
  for (const auto& [x, y] : positions) pos_rows.push_back({format_double(x), format_double(y)});
  write_csv((fs::path(cfg.out_dir) / "positions.csv").string(), {"x_m", "y_m"}, pos_rows);

  const std::vector<double> grid = time_grid(cfg.num.t_end, cfg.mass_sample_dt);
  const MassCurve remaining = empirical_mass_curve(records, grid);
  std::vector<std::vector<std::string>> mass_rows;
  Series mass_series{"remaining", {}};
  for (const auto& [t, m] : remaining.samples) {
    mass_rows.push_back({format_double(t), format_double(m)});
    mass_series.points.emplace_back(t, m);
  }
  write_csv((fs::path(cfg.out_dir) / "mass_curve.csv").string(), {"t_s", "fraction_remaining"},
            mass_rows);
  write_text_file((fs::path(cfg.out_dir) / "mass_curve.svg").string(),
                  svg_line_chart("fraction still inside", "time [s]", "fraction", {mass_series}));

  njson summary;
  summary["command"] = "simulate";
  summary["status"] = "ok";
  summary["config_digest"] = digest;
  summary["rng"] = "splitmix64";
  summary["seed"] = cfg.seed;
  summary["n_runs"] = cfg.n_runs;
  summary["n_agents"] = cfg.n_agents;
  summary["n_exited"] = n_exited;
  summary["n_censored"] = n_censored;
  if (n_exited > 0) {
    try {
      const CensoredMeanResult cm = censored_mean_exit(records, cfg.num.t_end);
      summary["mean_exit_time_s"] = cm.mean;
      summary["tail_fit_rate_per_s"] = cm.fit_rate;
    } catch (const DegenerateFit& e) {
      summary["mean_exit_time_s"] = nullptr;
      summary["tail_fit_error"] = e.what();
    }
  } else {
    summary["mean_exit_time_s"] = nullptr;
  }
  summary["outputs"] = {{"records", "records.jsonl"},
                        {"exit_times", "exit_times.csv"},
                        {"positions", "positions.csv"},
                        {"mass_curve", "mass_curve.csv"},
                        {"mass_curve_plot", "mass_curve.svg"}};
  summary["config_text"] = serialize_config(cfg);
  summary["timing_s"] = {{"runs", t_run}, {"total", timer.seconds()}};
  write_summary(cfg.out_dir, summary);
  return 0;
}

// ------------------------------------------------------------------- solve

void write_mass_outputs(const ExperimentConfig& cfg, const ForwardResult& fr, njson& summary) {
  std::vector<std::vector<std::string>> rows;
  Series total{"total", {}}, running{"running", {}};
  for (std::size_t i = 0; i < fr.mass.samples.size(); ++i) {
    const auto& [t, m] = fr.mass.samples[i];
    const double mr = fr.running_mass.samples[i].second;
    rows.push_back({format_double(t), format_double(m), format_double(mr)});
    total.points.emplace_back(t, m);
    running.points.emplace_back(t, mr);
  }
  write_csv((fs::path(cfg.out_dir) / "mass_curve.csv").string(),
            {"t_s", "mass_total", "mass_running"}, rows);
  const bool split = fr.rest.n_eta > 0;
  std::vector<Series> series = split ? std::vector<Series>{total, running}
                                     : std::vector<Series>{total};
  write_text_file((fs::path(cfg.out_dir) / "mass_curve.svg").string(),
                  svg_line_chart("density mass over time", "time [s]", "mass", series));

  double drift = 0.0, final_mass = 0.0;
  for (const auto& [t, m] : fr.mass.samples) {
    drift = std::max(drift, std::abs(m - 1.0));
    final_mass = m;
  }
  summary["steps"] = fr.steps;
  summary["dt_actual_s"] = fr.dt;
  summary["final_mass"] = final_mass;
  if (!cfg.arena.target_open) summary["max_abs_mass_drift"] = drift;
  summary["outputs"] = {{"mass_curve", "mass_curve.csv"}, {"mass_curve_plot", "mass_curve.svg"}};
}

void write_tau_outputs(const ExperimentConfig& cfg, const ExitTimeGrid& grid, njson& summary) {
  std::vector<std::vector<std::string>> rows;
  Series prof{"tau", {}};
  for (int i = 0; i <= grid.nx; ++i) {
    const double x = static_cast<double>(i) * grid.dx;
    const double tau = grid.angle_mean(i);
    rows.push_back({format_double(x), format_double(tau)});
    prof.points.emplace_back(x, tau);
  }
  write_csv((fs::path(cfg.out_dir) / "tau_profile.csv").string(), {"x_m", "tau_mean_s"}, rows);
  write_text_file(
      (fs::path(cfg.out_dir) / "tau_profile.svg").string(),
      svg_line_chart("mean exit time by release position", "x [m]", "tau [s]", {prof}));
  summary["pen_mean_exit_time_s"] = pen_average(grid, cfg.arena);
  summary["iterations"] = grid.iterations;
  summary["outputs"] = {{"tau_profile", "tau_profile.csv"}, {"tau_profile_plot", "tau_profile.svg"}};
}

int cmd_solve(const ExperimentConfig& cfg, const std::string& which) {
  Timer timer;
  ensure_dir(cfg.out_dir);
  njson summary;
  summary["command"] = "solve";
  summary["which"] = which;
  summary["status"] = "ok";
  summary["config_digest"] = config_digest(cfg);

  if (which == "classical" || which == "resting") {
    NumericalParams num = cfg.num;
    if (which == "resting" && num.d_eta == 0.0) num.d_eta = num.derived_d_eta(cfg.phys);
    const ForwardResult fr = (which == "classical")
                                 ? solve_classical(cfg.phys, cfg.arena, num, cfg.horizon,
                                                   cfg.mass_sample_dt)
                                 : solve_resting_state(cfg.phys, cfg.arena, num, cfg.horizon,
                                                       cfg.mass_sample_dt);
    write_mass_outputs(cfg, fr, summary);
  } else if (which == "met-classical") {
    write_tau_outputs(cfg, solve_met_classical(cfg.phys, cfg.arena, cfg.num), summary);
  } else if (which == "met-delayed") {
    write_tau_outputs(cfg, solve_met_delayed(cfg.phys, cfg.arena, cfg.num), summary);
  } else if (which == "met-signal") {
    const OmegaMode mode = (cfg.mode.turning == TurningMode::Instant) ? OmegaMode::Instant
                                                                      : OmegaMode::Finite;
    write_tau_outputs(cfg, solve_met_signal(cfg.phys, cfg.arena, cfg.num, cfg.signal, mode),
                      summary);
  } else {
    throw ConfigError("unknown solver '" + which +
                      "', expected classical, resting, met-classical, met-delayed or met-signal");
  }

  summary["config_text"] = serialize_config(cfg);
  summary["timing_s"] = {{"total", timer.seconds()}};
  write_summary(cfg.out_dir, summary);
  return 0;
}

// ----------------------------------------------------------------- compare

struct PriorOutput {
  std::string dir;
  njson summary;
  ExperimentConfig cfg;
};

PriorOutput load_prior(const std::string& dir) {
  const fs::path p = fs::path(dir) / "summary.json";
  std::ifstream in(p);
  if (!in) throw SchemaError("'" + dir + "' has no summary.json");
  njson summary;
  try {
    in >> summary;
  } catch (const std::exception& e) {
    throw SchemaError("could not parse " + p.string() + ": " + e.what());
  }
  if (!summary.contains("config_text") || !summary["config_text"].is_string())
    throw SchemaError(p.string() + " carries no config_text");
  PriorOutput out;
  out.dir = dir;
  out.summary = summary;
  out.cfg = parse_config(summary["config_text"].get<std::string>(), p.string());
  return out;
}

Sample2D load_positions(const std::string& dir) {
  const fs::path p = fs::path(dir) / "positions.csv";
  std::ifstream in(p);
  if (!in) throw SchemaError("'" + dir + "' has no positions.csv");
  Sample2D sample;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos) throw SchemaError("malformed row in " + p.string());
    sample.points.emplace_back(std::strtod(line.c_str(), nullptr),
                               std::strtod(line.c_str() + comma + 1, nullptr));
  }
  return sample;
}

int cmd_compare(const std::vector<std::string>& dirs, const std::string& out_dir) {
  Timer timer;
  ensure_dir(out_dir);
  std::vector<PriorOutput> inputs;
  for (const std::string& d : dirs) inputs.push_back(load_prior(d));

  // comparisons only make sense between runs of the same geometry
  for (std::size_t i = 1; i < inputs.size(); ++i) {
    const Arena &a = inputs[0].cfg.arena, &b = inputs[i].cfg.arena;
    if (a.Lx != b.Lx || a.Ly != b.Ly || a.L0 != b.L0 || a.target_open != b.target_open)
      throw SchemaError("'" + inputs[0].dir + "' and '" + inputs[i].dir +
                        "' describe different arenas");
  }

  njson summary;
  summary["command"] = "compare";
  summary["status"] = "ok";
  njson in_list = njson::array();
  for (const PriorOutput& p : inputs)
    in_list.push_back({{"dir", p.dir},
                       {"command", p.summary.value("command", "")},
                       {"config_digest", p.summary.value("config_digest", "")}});
  summary["inputs"] = in_list;

  std::vector<std::vector<std::string>> rows;

  // pen-mean gaps between any two solver outputs that reported one
  njson gaps = njson::array();
  for (std::size_t i = 0; i < inputs.size(); ++i)
    for (std::size_t j = i + 1; j < inputs.size(); ++j) {
      const njson &si = inputs[i].summary, &sj = inputs[j].summary;
      if (si.contains("pen_mean_exit_time_s") && sj.contains("pen_mean_exit_time_s")) {
        const double gi = si["pen_mean_exit_time_s"].get<double>();
        const double gj = sj["pen_mean_exit_time_s"].get<double>();
        gaps.push_back({{"a", inputs[i].dir}, {"b", inputs[j].dir}, {"gap_s", gj - gi}});
        rows.push_back({"pen_mean_gap_s", inputs[i].dir, inputs[j].dir, format_double(gj - gi)});
      }
    }
  summary["pen_mean_gaps"] = gaps;

  // two-sample distribution distance between any two position clouds
  njson ks = njson::array();
  for (std::size_t i = 0; i < inputs.size(); ++i)
    for (std::size_t j = i + 1; j < inputs.size(); ++j) {
      const bool pi = fs::exists(fs::path(inputs[i].dir) / "positions.csv");
      const bool pj = fs::exists(fs::path(inputs[j].dir) / "positions.csv");
      if (!pi || !pj) continue;
      const Sample2D sa = load_positions(inputs[i].dir);
      const Sample2D sb = load_positions(inputs[j].dir);
      if (sa.points.empty() || sb.points.empty()) continue;
      const double d = ks2d_peacock(sa, sb);
      ks.push_back({{"a", inputs[i].dir},
                    {"b", inputs[j].dir},
                    {"d_stat", d},
                    {"n_a", sa.points.size()},
                    {"n_b", sb.points.size()}});
      rows.push_back({"ks_d_stat", inputs[i].dir, inputs[j].dir, format_double(d)});
    }
  summary["ks_position_tests"] = ks;
  summary["peacock_corner_cap"] = kKsCornerCap;

  write_csv((fs::path(out_dir) / "comparison.csv").string(), {"metric", "a", "b", "value"}, rows);

  // overlay whatever mass curves the inputs have, first mass column of each
  std::vector<Series> curves;
  for (const PriorOutput& p : inputs) {
    const fs::path mc = fs::path(p.dir) / "mass_curve.csv";
    if (!fs::exists(mc)) continue;
    std::ifstream in(mc);
    std::string line;
    std::getline(in, line);
    Series s{fs::path(p.dir).filename().string(), {}};
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const std::size_t comma = line.find(',');
      if (comma == std::string::npos) continue;
      s.points.emplace_back(std::strtod(line.c_str(), nullptr),
                            std::strtod(line.c_str() + comma + 1, nullptr));
    }
    if (!s.points.empty()) curves.push_back(std::move(s));
  }
  if (!curves.empty())
    write_text_file((fs::path(out_dir) / "mass_compare.svg").string(),
                    svg_line_chart("mass curves", "time [s]", "mass", curves));

  summary["outputs"] = {{"comparison", "comparison.csv"}};
  if (!curves.empty()) summary["outputs"]["mass_compare_plot"] = "mass_compare.svg";
  summary["timing_s"] = {{"total", timer.seconds()}};
  write_summary(out_dir, summary);
  return 0;
}

// ------------------------------------------------------------------ report

// header plus numeric columns; short rows are an error in our own outputs
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;
};

CsvTable read_csv_table(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(path.string() + " is empty");
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) table.header.push_back(cell);
  table.columns.resize(table.header.size());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream rs(line);
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      if (!std::getline(rs, cell, ','))
        throw SchemaError(path.string() + " has a row with too few cells");
      table.columns[c].push_back(std::strtod(cell.c_str(), nullptr));
    }
  }
  return table;
}

Series column_series(const CsvTable& t, std::size_t ycol, const std::string& name) {
  Series s{name, {}};
  for (std::size_t i = 0; i < t.columns[0].size(); ++i)
    s.points.emplace_back(t.columns[0][i], t.columns[ycol][i]);
  return s;
}

int cmd_report(const std::string& out_dir) {
  Timer timer;
  if (!fs::is_directory(out_dir)) throw ConfigError("'" + out_dir + "' is not a directory");

  std::vector<fs::path> csvs;
  for (const auto& entry : fs::recursive_directory_iterator(out_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name == "mass_curve.csv" || name == "tau_profile.csv") csvs.push_back(entry.path());
  }
  std::sort(csvs.begin(), csvs.end());

  std::vector<std::string> plots;
  for (const fs::path& csv : csvs) {
    const CsvTable table = read_csv_table(csv);
    std::string svg_text;
    if (csv.filename() == "tau_profile.csv") {
      svg_text = svg_line_chart("mean exit time by release position", "x [m]", "tau [s]",
                                {column_series(table, 1, "tau")});
    } else if (table.header.size() > 1 && table.header[1] == "fraction_remaining") {
      svg_text = svg_line_chart("fraction still inside", "time [s]", "fraction",
                                {column_series(table, 1, "remaining")});
    } else {
      // solver curves: plot the running component only where it separates
      std::vector<Series> series{column_series(table, 1, "total")};
      if (table.header.size() > 2) {
        const Series running = column_series(table, 2, "running");
        for (std::size_t i = 0; i < series[0].points.size(); ++i)
          if (series[0].points[i].second != running.points[i].second) {
            series.push_back(running);
            break;
          }
      }
      svg_text = svg_line_chart("density mass over time", "time [s]", "mass", series);
    }
    fs::path svg = csv;
    svg.replace_extension(".svg");
    write_text_file(svg.string(), svg_text);
    plots.push_back(fs::relative(svg, out_dir).string());
  }

  std::string html = "<!DOCTYPE html>\n<html><head><title>run report</title></head><body>\n";
  html += "<h1>run report</h1>\n";
  for (const std::string& p : plots)
    html += "<div><h2>" + p + "</h2><img src=\"" + p + "\" alt=\"" + p + "\"/></div>\n";
  html += "</body></html>\n";
  write_text_file((fs::path(out_dir) / "index.html").string(), html);

  njson summary;
  summary["command"] = "report";
  summary["status"] = "ok";
  summary["plots"] = plots;
  summary["outputs"] = {{"index", "index.html"}};
  summary["timing_s"] = {{"total", timer.seconds()}};
  write_summary(out_dir, summary);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"velocity-jump arena simulator"};
  app.require_subcommand(1);

  std::string config_path, out_flag, which = "classical";
  std::uint64_t seed_flag = 0;
  bool seed_given = false;
  int threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;
  std::vector<std::string> compare_dirs;

  CLI::App* sim = app.add_subcommand("simulate", "run stochastic agent trajectories");
  sim->add_option("--config", config_path, "experiment config file")->required();
  sim->add_option("--seed", seed_flag, "override the config seed")
      ->each([&](const std::string&) { seed_given = true; });
  sim->add_option("--out", out_flag, "output directory (overrides config)");
  sim->add_option("--threads", threads, "worker threads");

  CLI::App* slv = app.add_subcommand("solve", "run a deterministic solver");
  slv->add_option("--config", config_path, "experiment config file")->required();
  slv->add_option("--which", which,
                  "classical | resting | met-classical | met-delayed | met-signal")
      ->required();
  slv->add_option("--out", out_flag, "output directory (overrides config)");

  CLI::App* cmp = app.add_subcommand("compare", "compare prior output directories");
  cmp->add_option("dirs", compare_dirs, "two or more output directories")
      ->required()
      ->expected(2, -1);
  cmp->add_option("--out", out_flag, "where to write the comparison");

  CLI::App* rep = app.add_subcommand("report", "regenerate plots and an index page");
  rep->add_option("--out", out_flag, "directory holding prior outputs")->required();

  CLI11_PARSE(app, argc, argv);

  std::string out_dir = out_flag;
  try {
    if (sim->parsed() || slv->parsed()) {
      ExperimentConfig cfg = load_config(config_path);
      if (seed_given) cfg.seed = seed_flag;
      if (!out_flag.empty()) cfg.out_dir = out_flag;
      out_dir = cfg.out_dir;
      return sim->parsed() ? cmd_simulate(cfg, threads) : cmd_solve(cfg, which);
    }
    if (cmp->parsed()) {
      if (out_dir.empty()) out_dir = "compare_out";
      return cmd_compare(compare_dirs, out_dir);
    }
    return cmd_report(out_dir);
  } catch (const std::exception& e) {
    njson err;
    err["status"] = "error";
    err["error_code"] = error_code(e);
    err["message"] = e.what();
    std::cerr << err.dump() << "\n";
    if (!out_dir.empty()) {
      try {
        ensure_dir(out_dir);
        write_summary(out_dir, err);
      } catch (...) {
        // the primary error already went to stderr
      }
    }
    return error_exit_status(e);
  }
}
