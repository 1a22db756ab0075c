#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "config.hpp"

namespace fs = std::filesystem;
using namespace vjsim;
using njson = nlohmann::ordered_json;

#ifndef VJSIM_CLI_PATH
#error "VJSIM_CLI_PATH must point at the command line binary"
#endif

namespace {

const fs::path kScratch = fs::path("cli_scratch");

struct CliResult {
  int status = -1;
  std::string err;
};

CliResult run_cli(const std::string& args) {
  static int call = 0;
  const fs::path err_file = kScratch / ("stderr_" + std::to_string(call++) + ".txt");
  const std::string cmd =
      std::string("\"") + VJSIM_CLI_PATH + "\" " + args + " 2>" + err_file.string();
  const int rc = std::system(cmd.c_str());
  CliResult res;
  res.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  std::ifstream in(err_file);
  std::stringstream ss;
  ss << in.rdbuf();
  res.err = ss.str();
  return res;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

njson read_summary(const fs::path& dir) { return njson::parse(slurp(dir / "summary.json")); }

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
  REQUIRE(out.good());
}

// closed-arena short experiment: cheap, deterministic, nonempty positions
const char* kClosedSim =
    "target_edge = closed\n"
    "n_runs = 2\n"
    "n_agents = 4\n"
    "t_end_s = 20\n"
    "dt_s = 0.1\n"
    "dx_m = 0.01\n"
    "n_theta = 8\n"
    "warmup_s = 2\n"
    "horizon_s = 20\n"
    "mass_sample_dt_s = 0.5\n"
    "seed = 5\n";

}  // namespace

TEST_CASE("scratch area starts clean") {
  fs::remove_all(kScratch);
  fs::create_directories(kScratch);
  CHECK(fs::exists(kScratch));
}

TEST_CASE("the default configuration round-trips through text") {
  const ExperimentConfig cfg;
  const std::string text = serialize_config(cfg);
  const ExperimentConfig back = parse_config(text, "roundtrip");
  CHECK(serialize_config(back) == text);
}

TEST_CASE("partial files override only the keys they name") {
  const ExperimentConfig cfg =
      parse_config("# comment line\n\nseed = 42\nn_agents = 3\n", "partial");
  CHECK(cfg.seed == 42);
  CHECK(cfg.n_agents == 3);
  CHECK(cfg.phys.s == ExperimentConfig{}.phys.s);  // untouched default
}

TEST_CASE("an infinite turn speed is spelled inf and survives the trip") {
  const ExperimentConfig cfg = parse_config("turn_speed_rad_per_s = inf\n", "inf");
  CHECK(cfg.phys.omega == kOmegaInfinite);
  const std::string text = serialize_config(cfg);
  CHECK(text.find("turn_speed_rad_per_s = inf\n") != std::string::npos);
  CHECK(parse_config(text, "inf2").phys.omega == kOmegaInfinite);
}

TEST_CASE("unknown keys are refused with their location") {
  try {
    parse_config("seed = 1\nbogus_key = 2\n", "somefile.cfg");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("bogus_key") != std::string::npos);
    CHECK(msg.find("somefile.cfg:2") != std::string::npos);
  }
}

TEST_CASE("malformed numbers and enum values are refused") {
  CHECK_THROWS_AS(parse_config("seed = banana\n", "bad"), ConfigError);
  CHECK_THROWS_AS(parse_config("dt_s = 0.1x\n", "bad"), ConfigError);
  CHECK_THROWS_AS(parse_config("collisions = squishy\n", "bad"), ConfigError);
  CHECK_THROWS_AS(parse_config("target_edge = ajar\n", "bad"), ConfigError);
}

TEST_CASE("mode enums parse to the right switches") {
  const ExperimentConfig cfg = parse_config(
      "collisions = hard_sphere\nturning = finite\nsignal = internal_variable\n"
      "target_edge = closed\n",
      "modes");
  CHECK(cfg.mode.collisions == CollisionMode::HardSphere);
  CHECK(cfg.mode.turning == TurningMode::FiniteOmega);
  CHECK(cfg.mode.signal == SignalMode::InternalVariable);
  CHECK(!cfg.arena.target_open);
}

TEST_CASE("the digest tracks physics but not file layout") {
  const ExperimentConfig base;
  const std::string d0 = config_digest(base);
  CHECK(d0.size() == 16);

  ExperimentConfig moved = base;
  moved.out_dir = "elsewhere";
  CHECK(config_digest(moved) == d0);

  ExperimentConfig reseeded = base;
  reseeded.seed = base.seed + 1;
  CHECK(config_digest(reseeded) != d0);

  // reordering lines in a file cannot matter: parsing normalizes
  const ExperimentConfig a = parse_config("seed = 7\nn_agents = 9\n", "a");
  const ExperimentConfig b = parse_config("n_agents = 9\nseed = 7\n", "b");
  CHECK(config_digest(a) == config_digest(b));
}

TEST_CASE("validation catches impossible numerics") {
  // parse runs full validation, so bad numerics never leave the loader
  CHECK_THROWS_AS(parse_config("dt_s = 1\n", "cfl"), CflError);  // s*dt/dx near 10
  CHECK_THROWS_AS(parse_config("n_runs = 0\n", "runs"), ConfigError);
}

TEST_CASE("simulate writes identical data wherever it lands") {
  const fs::path cfg_path = kScratch / "closed.cfg";
  write_file(cfg_path, kClosedSim);
  const fs::path a = kScratch / "sim_a";
  const fs::path b = kScratch / "sim_b";
  CHECK(run_cli("simulate --config " + cfg_path.string() + " --out " + a.string()).status == 0);
  CHECK(run_cli("simulate --config " + cfg_path.string() + " --out " + b.string()).status == 0);
  for (const char* name : {"records.jsonl", "exit_times.csv", "positions.csv", "mass_curve.csv"})
    CHECK(slurp(a / name) == slurp(b / name));
  const njson sa = read_summary(a);
  const njson sb = read_summary(b);
  CHECK(sa["config_digest"] == sb["config_digest"]);
  CHECK(sa["n_censored"] == 8);  // closed box, 2 runs of 4
  CHECK(sa["mean_exit_time_s"].is_null());

  // rerunning in place reproduces everything except the wall clock
  const std::string before = slurp(a / "records.jsonl");
  njson sum_before = read_summary(a);
  CHECK(run_cli("simulate --config " + cfg_path.string() + " --out " + a.string()).status == 0);
  CHECK(slurp(a / "records.jsonl") == before);
  njson sum_after = read_summary(a);
  sum_before.erase("timing_s");
  sum_after.erase("timing_s");
  CHECK(sum_before == sum_after);
}

TEST_CASE("a seed flag overrides the configured seed") {
  const fs::path cfg_path = kScratch / "closed.cfg";
  const fs::path c = kScratch / "sim_c";
  CHECK(run_cli("simulate --config " + cfg_path.string() + " --seed 999 --out " + c.string())
            .status == 0);
  const njson sc = read_summary(c);
  CHECK(sc["seed"] == 999);
  CHECK(slurp(c / "positions.csv") != slurp(kScratch / "sim_a" / "positions.csv"));
}

TEST_CASE("broken configs exit with the config status and a machine-readable trace") {
  const fs::path bad = kScratch / "bad.cfg";
  write_file(bad, "bogus_key = 1\n");
  const fs::path err_out = kScratch / "err_out";
  const CliResult res =
      run_cli("simulate --config " + bad.string() + " --out " + err_out.string());
  CHECK(res.status == 2);
  CHECK(res.err.find("ConfigError") != std::string::npos);
  const njson summary = read_summary(err_out);
  CHECK(summary["status"] == "error");
  CHECK(summary["error_code"] == "ConfigError");
}

TEST_CASE("asking for an unknown solver is a config error") {
  const fs::path cfg_path = kScratch / "closed.cfg";
  const CliResult res = run_cli("solve --config " + cfg_path.string() + " --which nonsense --out " +
                                (kScratch / "which_out").string());
  CHECK(res.status == 2);
  CHECK(res.err.find("unknown solver") != std::string::npos);
}

TEST_CASE("an iteration starved solve reports no convergence") {
  const fs::path cfg_path = kScratch / "starved.cfg";
  write_file(cfg_path,
             "dx_m = 0.04732\n"
             "n_theta = 8\n"
             "dt_s = 0.1\n"
             "max_iters = 1\n");
  const CliResult res = run_cli("solve --config " + cfg_path.string() + " --which met-classical" +
                                " --out " + (kScratch / "starved_out").string());
  CHECK(res.status == 5);
  CHECK(res.err.find("NoConvergence") != std::string::npos);
}

TEST_CASE("a quick closed forward solve conserves mass end to end") {
  const fs::path cfg_path = kScratch / "box.cfg";
  write_file(cfg_path,
             "arena_length_m = 0.4\n"
             "arena_width_m = 0.4\n"
             "pen_edge_m = 0.1\n"
             "target_edge = closed\n"
             "pen_x_min_m = 0\npen_x_max_m = 0.4\n"
             "pen_y_min_m = -0.2\npen_y_max_m = 0.2\n"
             "dx_m = 0.02\n"
             "n_theta = 8\n"
             "dt_s = 0.05\n"
             "horizon_s = 2\n"
             "mass_sample_dt_s = 0.5\n");
  const fs::path out = kScratch / "box_out";
  CHECK(run_cli("solve --config " + cfg_path.string() + " --which classical --out " +
                out.string())
            .status == 0);
  const njson summary = read_summary(out);
  CHECK(summary["status"] == "ok");
  CHECK(summary["final_mass"].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(summary["max_abs_mass_drift"].get<double>() <= 1e-12);
  CHECK(fs::exists(out / "mass_curve.csv"));
  CHECK(fs::exists(out / "mass_curve.svg"));
}

TEST_CASE("comparisons line up matching runs and refuse mismatched arenas") {
  const fs::path cmp = kScratch / "cmp_out";
  const CliResult ok = run_cli("compare " + (kScratch / "sim_a").string() + " " +
                               (kScratch / "sim_c").string() + " --out " + cmp.string());
  CHECK(ok.status == 0);
  CHECK(fs::exists(cmp / "comparison.csv"));
  CHECK(fs::exists(cmp / "mass_compare.svg"));
  const njson summary = read_summary(cmp);
  REQUIRE(summary["ks_position_tests"].size() == 1);
  const double d = summary["ks_position_tests"][0]["d_stat"].get<double>();
  CHECK(d > 0.0);
  CHECK(d <= 1.0);

  // different geometry in the second input
  const CliResult bad = run_cli("compare " + (kScratch / "sim_a").string() + " " +
                                (kScratch / "box_out").string() + " --out " +
                                (kScratch / "cmp_bad").string());
  CHECK(bad.status == 9);
  CHECK(bad.err.find("SchemaError") != std::string::npos);
}

TEST_CASE("report rebuilds plots and an index from prior outputs") {
  const CliResult res = run_cli("report --out " + kScratch.string());
  CHECK(res.status == 0);
  CHECK(fs::exists(kScratch / "index.html"));
  const std::string index = slurp(kScratch / "index.html");
  CHECK(index.find("mass_curve.svg") != std::string::npos);
  // regenerated charts must be byte-identical to what simulate wrote
  const njson sa = read_summary(kScratch / "sim_a");
  CHECK(sa["outputs"]["mass_curve_plot"] == "mass_curve.svg");
  CHECK(slurp(kScratch / "sim_a" / "mass_curve.svg") ==
        slurp(kScratch / "sim_b" / "mass_curve.svg"));
}
