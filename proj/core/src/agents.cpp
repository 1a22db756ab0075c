#include "vjsim/agents.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

namespace vjsim {

namespace {

// Axis-aligned domain for stepping: the arena during runs, the pen during
// warmup. open_right marks the absorbing target edge.
struct Rect {
  double xlo, xhi, ylo, yhi;
  bool open_right;
};

double specular_heading(double heading, bool x_wall) {
  return x_wall ? wrap_angle(kPi - heading) : wrap_angle(-heading);
}

// Move one agent through its time budget, consuming turn time and wall
// contacts at their exact sub-step instants.
void advance_agent(AgentState& a, double t_now, double dt, TurningMode turning,
                   const PhysicalParams& phys, const Rect& rect) {
  double budget = dt;
  int bounces = 0;
  while (budget > 0.0) {
    if (a.phase == Phase::Turning) {
      if (a.eta > budget) {
        a.eta -= budget;
        return;
      }
      budget -= a.eta;
      a.eta = 0.0;
      a.phase = Phase::Running;
      continue;
    }
    const double vx = phys.s * std::cos(a.heading);
    const double vy = phys.s * std::sin(a.heading);
    // Earliest wall contact within the remaining budget.
    double tc = budget;
    int wall = -1;  // 0 left, 1 right, 2 bottom, 3 top
    if (vx > 0.0) {
      const double t = std::max(0.0, (rect.xhi - a.x) / vx);
      if (t < tc) { tc = t; wall = 1; }
    } else if (vx < 0.0) {
      const double t = std::max(0.0, (rect.xlo - a.x) / vx);
      if (t < tc) { tc = t; wall = 0; }
    }
    if (vy > 0.0) {
      const double t = std::max(0.0, (rect.yhi - a.y) / vy);
      if (t < tc) { tc = t; wall = 3; }
    } else if (vy < 0.0) {
      const double t = std::max(0.0, (rect.ylo - a.y) / vy);
      if (t < tc) { tc = t; wall = 2; }
    }
    a.x += vx * tc;
    a.y += vy * tc;
    budget -= tc;
    if (wall < 0) return;  // budget spent in the interior
    // Pin the contact coordinate so reflections never drift off the wall.
    switch (wall) {
      case 0: a.x = rect.xlo; break;
      case 1: a.x = rect.xhi; break;
      case 2: a.y = rect.ylo; break;
      case 3: a.y = rect.yhi; break;
    }
    if (wall == 1 && rect.open_right) {
      a.exited_at = t_now + (dt - budget);
      return;
    }
    const double next = specular_heading(a.heading, wall <= 1);
    if (turning == TurningMode::FiniteOmega) {
      a.eta = delay_kernel(a.heading, next, phys.omega);
      a.heading = next;
      if (a.eta > 0.0) a.phase = Phase::Turning;
    } else {
      a.heading = next;
    }
    // Corner chatter guard; in practice two contacts per step is the most
    // geometry allows at sane CFL numbers.
    if (++bounces > 64) return;
  }
}

void clamp_into(AgentState& a, double t_now, double dt, const Rect& rect) {
  if (rect.open_right && a.x >= rect.xhi) {
    // A collision push carried the center across the target line.
    a.exited_at = t_now + dt;
    return;
  }
  a.x = std::min(std::max(a.x, rect.xlo), rect.xhi);
  a.y = std::min(std::max(a.y, rect.ylo), rect.yhi);
}

void step_in_rect(std::vector<AgentState>& agents, double t_now, double dt,
                  const SimMode& mode, const PhysicalParams& phys, const Rect& rect,
                  const SignalField* signal, SplitMix64& rng) {
  if (mode.signal != SignalMode::None && signal == nullptr)
    throw ConfigError("signal-driven mode needs a signal field");
  for (auto& a : agents) {
    if (a.exited_at) continue;
    advance_agent(a, t_now, dt, mode.turning, phys, rect);
  }
  if (mode.collisions == CollisionMode::HardSphere) {
    collide_hard_spheres(agents, phys.epsilon);
    for (auto& a : agents) {
      if (a.exited_at) continue;
      clamp_into(a, t_now, dt, rect);
    }
  }
  for (auto& a : agents) {
    if (a.exited_at) continue;
    double lam = phys.lambda0;
    switch (mode.signal) {
      case SignalMode::None:
        break;
      case SignalMode::GradientApprox:
        lam = std::max(0.0, phys.lambda0 -
                                phys.gamma() * phys.s * std::cos(a.heading) * signal->slope);
        break;
      case SignalMode::InternalVariable: {
        // The adaptation ODE runs continuously, even mid-turn.
        auto [z_next, lam_z] = signal_controller(a.z, signal->value(a.x), dt, phys);
        a.z = z_next;
        lam = lam_z;
        break;
      }
    }
    if (a.phase != Phase::Running) continue;
    if (lam * dt > 0.1) throw CflError("turn probability per step exceeds 0.1");
    if (rng.uniform() < lam * dt) {
      const double next = sample_uniform_angle(rng);
      if (mode.turning == TurningMode::FiniteOmega) {
        a.eta = delay_kernel(a.heading, next, phys.omega);
        a.heading = next;
        if (a.eta > 0.0) a.phase = Phase::Turning;
      } else {
        a.heading = next;
      }
    }
  }
}

}  // namespace

void collide_hard_spheres(std::vector<AgentState>& agents, double epsilon) {
  if (epsilon <= 0.0) return;
  const double eps2 = epsilon * epsilon;
  const int n = static_cast<int>(agents.size());
  // Chained overlaps (a push creating a new overlap) get a fresh pass. Deep
  // pileups converge geometrically but slowly, so the cap is a safety valve
  // well above anything a clearance-preserving step can produce.
  for (int pass = 0; pass < 512; ++pass) {
    bool touched = false;
    for (int i = 0; i < n; ++i) {
      if (agents[i].exited_at) continue;
      for (int j = i + 1; j < n; ++j) {
        if (agents[j].exited_at) continue;
        AgentState& A = agents[i];
        AgentState& B = agents[j];
        const double dx = B.x - A.x, dy = B.y - A.y;
        const double d2 = dx * dx + dy * dy;
        if (d2 >= eps2 || d2 == 0.0) continue;
        touched = true;
        const double d = std::sqrt(d2);
        const double nx = dx / d, ny = dy / d;
        const bool a_mobile = A.phase == Phase::Running;
        const bool b_mobile = B.phase == Phase::Running;
        const double push = epsilon - d;
        if (a_mobile && b_mobile) {
          A.x -= 0.5 * push * nx; A.y -= 0.5 * push * ny;
          B.x += 0.5 * push * nx; B.y += 0.5 * push * ny;
        } else if (a_mobile) {
          A.x -= push * nx; A.y -= push * ny;
        } else if (b_mobile) {
          B.x += push * nx; B.y += push * ny;
        }
        if (a_mobile) {
          auto [rx, ry] = reflect_velocity(std::cos(A.heading), std::sin(A.heading), nx, ny);
          A.heading = std::atan2(ry, rx);
        }
        if (b_mobile) {
          auto [rx, ry] = reflect_velocity(std::cos(B.heading), std::sin(B.heading), nx, ny);
          B.heading = std::atan2(ry, rx);
        }
      }
    }
    if (!touched) return;
  }
}

std::pair<double, double> signal_controller(double z, double S_here, double dt,
                                            const PhysicalParams& phys) {
  const double z_next = z + dt * (S_here - z) / phys.t_a;
  const double lam =
      std::max(0.0, phys.lambda0 + phys.lambda0 * (1.0 - phys.alpha * (S_here - z_next)));
  return {z_next, lam};
}

std::vector<AgentState> init_pen(const Arena& arena, int n_agents, double warmup,
                                 const PhysicalParams& phys, TurningMode turning,
                                 double dt, SplitMix64& rng) {
  arena.validate();
  phys.validate();
  if (n_agents < 1) throw ConfigError("need at least one agent");
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  const double disk = kPi * (phys.epsilon / 2.0) * (phys.epsilon / 2.0);
  if (n_agents * disk >= arena.pen_area())
    throw PackingError("agents cannot fit in the pen");

  // Uniform non-overlapping placement. The default load (16 agents of 7.5 cm
  // in a 30.5 cm pen) is near the sequential-insertion jam, so a stuck
  // configuration is restarted instead of hammered.
  constexpr int kAttemptsPerAgent = 2000;
  constexpr int kRestarts = 500;
  std::vector<AgentState> agents;
  for (int r = 0; r < kRestarts && agents.size() < static_cast<std::size_t>(n_agents); ++r) {
    agents.clear();
    for (int i = 0; i < n_agents; ++i) {
      bool placed = false;
      for (int att = 0; att < kAttemptsPerAgent; ++att) {
        const double x = rng.uniform(arena.pen_x.lo, arena.pen_x.hi);
        const double y = rng.uniform(arena.pen_y.lo, arena.pen_y.hi);
        bool clear = true;
        for (const auto& other : agents) {
          const double dx = x - other.x, dy = y - other.y;
          if (dx * dx + dy * dy < phys.epsilon * phys.epsilon) {
            clear = false;
            break;
          }
        }
        if (!clear) continue;
        AgentState a;
        a.x = x;
        a.y = y;
        a.heading = sample_uniform_angle(rng);
        agents.push_back(a);
        placed = true;
        break;
      }
      if (!placed) break;
    }
  }
  if (agents.size() < static_cast<std::size_t>(n_agents))
    throw PackingError("non-overlapping pen placement failed");

  if (warmup > 0.0) {
    const Rect pen{arena.pen_x.lo, arena.pen_x.hi, arena.pen_y.lo, arena.pen_y.hi, false};
    const SimMode warm{CollisionMode::HardSphere, turning, SignalMode::None};
    const long n_steps = std::max(1L, std::lround(warmup / dt));
    for (long s = 0; s < n_steps; ++s)
      step_in_rect(agents, s * dt, dt, warm, phys, pen, nullptr, rng);
  }
  return agents;
}

void step(std::vector<AgentState>& agents, double t_now, double dt, const SimMode& mode,
          const PhysicalParams& phys, const Arena& arena, const SignalField* signal,
          SplitMix64& rng) {
  const Rect rect{0.0, arena.Lx, -arena.Ly / 2.0, arena.Ly / 2.0, arena.target_open};
  step_in_rect(agents, t_now, dt, mode, phys, rect, signal, rng);
}

namespace {

// One full replicate: pen init, release, stepping to the horizon.
std::vector<AgentState> run_replicate(const ExperimentSetup& setup, std::uint64_t run_seed) {
  const double dt = setup.num.dt;
  const long full_steps = static_cast<long>(std::floor(setup.num.t_end / dt + 1e-9));
  const double remainder = setup.num.t_end - full_steps * dt;

  SplitMix64 rng(run_seed);
  auto agents = init_pen(setup.arena, setup.n_agents, setup.warmup, setup.phys,
                         setup.mode.turning, dt, rng);
  if (setup.mode.signal == SignalMode::InternalVariable)
    for (auto& a : agents) a.z = setup.signal.value(a.x);  // adapted at release
  auto alive = [&]() {
    return std::any_of(agents.begin(), agents.end(),
                       [](const AgentState& a) { return !a.exited_at; });
  };
  for (long s = 0; s < full_steps && alive(); ++s)
    step(agents, s * dt, dt, setup.mode, setup.phys, setup.arena, &setup.signal, rng);
  if (remainder > 1e-12 && alive())
    step(agents, full_steps * dt, remainder, setup.mode, setup.phys, setup.arena,
         &setup.signal, rng);
  return agents;
}

void validate_setup(const ExperimentSetup& setup, int n_runs) {
  setup.phys.validate();
  setup.arena.validate();
  setup.num.validate(setup.phys);
  if (setup.mode.signal != SignalMode::None) setup.signal.validate(setup.arena);
  if (n_runs < 1) throw ConfigError("need at least one run");
  if (setup.n_agents < 1) throw ConfigError("need at least one agent");
  if (setup.phys.lambda0 * setup.num.dt > 0.1)
    throw CflError("turn probability per step exceeds 0.1");
}

// Work-stealing replicate loop shared by the experiment drivers. Results are
// keyed by run index, so output never depends on scheduling.
template <typename PerRun>
void for_each_run(int n_runs, int threads, PerRun&& per_run) {
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::atomic<long> cursor{0};
  std::atomic<bool> abort{false};
  auto worker = [&]() {
    try {
      for (;;) {
        const long run = cursor.fetch_add(1);
        if (run >= n_runs || abort.load()) return;
        per_run(run);
      }
    } catch (...) {
      abort.store(true);
      std::lock_guard<std::mutex> lock(failure_mu);
      if (!failure) failure = std::current_exception();
    }
  };
  const int n_workers = std::max(1, std::min<int>(threads, n_runs));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

std::vector<RunRecord> run_exit_experiment(const ExperimentSetup& setup, int n_runs,
                                           std::uint64_t master_seed, int threads) {
  validate_setup(setup, n_runs);
  std::vector<RunRecord> records(n_runs);
  for_each_run(n_runs, threads, [&](long run) {
    const std::uint64_t run_seed = sub_seed(master_seed, static_cast<std::uint64_t>(run));
    const auto agents = run_replicate(setup, run_seed);
    RunRecord rec;
    rec.seed = run_seed;
    rec.config_digest = setup.config_digest;
    for (int i = 0; i < setup.n_agents; ++i) {
      if (agents[i].exited_at)
        rec.exit_times.emplace_back(i, *agents[i].exited_at);
      else
        ++rec.censored;
    }
    std::sort(rec.exit_times.begin(), rec.exit_times.end(),
              [](const auto& a, const auto& b) {
                return a.second != b.second ? a.second < b.second : a.first < b.first;
              });
    records[run] = std::move(rec);
  });
  return records;
}

std::vector<std::pair<double, double>> final_positions(const ExperimentSetup& setup,
                                                       int n_runs, std::uint64_t master_seed,
                                                       int threads) {
  validate_setup(setup, n_runs);
  std::vector<std::vector<std::pair<double, double>>> per_run(n_runs);
  for_each_run(n_runs, threads, [&](long run) {
    const std::uint64_t run_seed = sub_seed(master_seed, static_cast<std::uint64_t>(run));
    const auto agents = run_replicate(setup, run_seed);
    auto& out = per_run[run];
    out.reserve(agents.size());
    for (const auto& a : agents)
      if (!a.exited_at) out.emplace_back(a.x, a.y);
  });
  std::vector<std::pair<double, double>> flat;
  for (const auto& v : per_run) flat.insert(flat.end(), v.begin(), v.end());
  return flat;
}

}  // namespace vjsim
