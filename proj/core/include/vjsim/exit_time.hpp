#pragma once
#include <vector>

#include "vjsim/core.hpp"

namespace vjsim {

/// Mean exit time on x-nodes x_i = i dx, i = 0..nx (x_nx = Lx), by midpoint
/// angle cell. Values are y-averaged exit times in seconds.
struct ExitTimeGrid {
  int nx = 0;  ///< cells; there are nx+1 nodes
  AngleGrid angles{2};
  double dx = 0.0;
  std::vector<double> tau;  ///< (nx+1) x n, node-major
  long iterations = 0;      ///< source iterations until convergence

  double& at(int i, int k) { return tau[static_cast<std::size_t>(i) * angles.n + k]; }
  double at(int i, int k) const { return tau[static_cast<std::size_t>(i) * angles.n + k]; }

  /// Uniform-weight angular mean at node i.
  double angle_mean(int i) const;
};

/// Wall-delay weight: the y-wall collision rate times the turn duration,
/// collapsed to a function of heading alone. Piecewise
/// -(pi+theta) sin(theta) on (-pi,-pi/2], theta sin(theta) on [-pi/2,pi/2],
/// (pi-theta) sin(theta) on [pi/2,pi].
double A_weight(double theta);

enum class OmegaMode { Instant, Finite };

/// Backward solver for the y-averaged mean exit time with instantaneous
/// turning. Source iteration over the angular integral; per-angle sweeps run
/// along each characteristic with a second-order upwind-biased stencil.
ExitTimeGrid solve_met_classical(const PhysicalParams& phys, const Arena& arena,
                                 const NumericalParams& num);

/// Same problem with finite turn times: every free turn costs pi/(2 omega) on
/// average, y-wall reflections cost A_weight(theta) collisions-weighted turn
/// time, and the x=0 wall condition carries the turn delay between the
/// incident heading and its specular partner. The infinite-omega sentinel
/// degenerates exactly to the classical solver.
ExitTimeGrid solve_met_delayed(const PhysicalParams& phys, const Arena& arena,
                               const NumericalParams& num);

/// Signal-modulated variant: lambda(x,theta) = lambda0 - gamma s cos(theta)
/// S'(x), with the classical wall conditions. OmegaMode::Finite adds the two
/// delay sources using phys.omega; OmegaMode::Instant drops both.
ExitTimeGrid solve_met_signal(const PhysicalParams& phys, const Arena& arena,
                              const NumericalParams& num, const SignalField& signal,
                              OmegaMode mode);

/// Mean of tau over theta (uniform weight) and over the x-cells intersecting
/// the pen x-range (area-fraction weighted).
double pen_average(const ExitTimeGrid& grid, const Arena& arena);

}  // namespace vjsim
