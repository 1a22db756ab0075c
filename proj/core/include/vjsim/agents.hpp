#pragma once
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vjsim/core.hpp"

namespace vjsim {

enum class CollisionMode { Point, HardSphere };
enum class TurningMode { Instant, FiniteOmega };
enum class SignalMode { None, GradientApprox, InternalVariable };

/// One switch per physics axis; any combination is valid.
struct SimMode {
  CollisionMode collisions = CollisionMode::Point;
  TurningMode turning = TurningMode::Instant;
  SignalMode signal = SignalMode::None;
};

/// Outcome of one replicate: exit times for agents that reached the target,
/// a censoring count for those still inside at the horizon.
struct RunRecord {
  std::uint64_t seed = 0;
  std::vector<std::pair<int, double>> exit_times;  ///< (agent_id, s), ascending time
  int censored = 0;
  std::string config_digest;
};

/// Everything one experiment needs besides the replicate count and seed.
struct ExperimentSetup {
  PhysicalParams phys;
  Arena arena;
  NumericalParams num;
  SimMode mode;
  SignalField signal;  ///< read only when mode.signal != None
  int n_agents = 16;
  double warmup = 20.0;  ///< pen settling time before release, s
  std::string config_digest;
};

/// Place agents uniformly at random in the pen without overlap (rejection
/// sampling with bounded retries), headings uniform, then advance them for
/// `warmup` seconds with hard-sphere collisions inside reflective pen walls.
std::vector<AgentState> init_pen(const Arena& arena, int n_agents, double warmup,
                                 const PhysicalParams& phys, TurningMode turning,
                                 double dt, SplitMix64& rng);

/// Advance all agents by dt from time t_now. Motion is resolved sub-step:
/// wall contacts happen at their exact hit times, finite-speed turns consume
/// their exact duration, and target crossings record the exact exit time.
/// After motion, hard-sphere overlaps are resolved synchronously, then each
/// still-running agent turns with probability lambda*dt.
void step(std::vector<AgentState>& agents, double t_now, double dt, const SimMode& mode,
          const PhysicalParams& phys, const Arena& arena, const SignalField* signal,
          SplitMix64& rng);

/// Resolve all pairs closer than epsilon: reflect each mobile partner's
/// velocity about the center-line and push positions apart to distance
/// exactly epsilon. Mid-turn agents are immovable obstacles. Repeats until no
/// overlap remains so the contact guarantee holds even for chained overlaps.
void collide_hard_spheres(std::vector<AgentState>& agents, double epsilon);

/// Internal-variable controller: one explicit Euler step of the adaptation
/// ODE followed by the turning-frequency readout, clamped below at zero.
/// Returns (z_next, lambda).
std::pair<double, double> signal_controller(double z, double S_here, double dt,
                                            const PhysicalParams& phys);

/// Independent replicates of pen init, release, and stepping to the horizon.
/// Per-run seeds derive from the master seed and run index alone, so records
/// are identical for any thread count.
std::vector<RunRecord> run_exit_experiment(const ExperimentSetup& setup, int n_runs,
                                           std::uint64_t master_seed, int threads = 1);

/// Positions of all agents still inside at the horizon, pooled across the
/// same replicates run_exit_experiment would produce, ordered by run then
/// agent index. With a closed target this snapshots every agent.
std::vector<std::pair<double, double>> final_positions(const ExperimentSetup& setup,
                                                       int n_runs, std::uint64_t master_seed,
                                                       int threads = 1);

}  // namespace vjsim
