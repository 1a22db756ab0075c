#pragma once
#include <utility>
#include <vector>

#include "vjsim/core.hpp"

namespace vjsim {

/// Running-phase density p(x, y, theta) on cell centers, units 1/(m^2 rad).
/// x spans [0, Lx] with nx cells, y spans [-Ly/2, Ly/2] with ny cells; cell
/// widths are snapped so the grid covers the arena exactly.
struct DensityGrid {
  int nx = 0;
  int ny = 0;
  AngleGrid angles{2};
  double dx = 0.0;
  double dy = 0.0;
  double y_lo = 0.0;  ///< physical y of the bottom edge

  /// Layout: ((i * ny + j) * n + k), angle fastest.
  std::vector<double> p;

  double& at(int i, int j, int k) {
    return p[(static_cast<std::size_t>(i) * ny + j) * angles.n + k];
  }
  double at(int i, int j, int k) const {
    return p[(static_cast<std::size_t>(i) * ny + j) * angles.n + k];
  }
  double x_center(int i) const { return (i + 0.5) * dx; }
  double y_center(int j) const { return y_lo + (j + 0.5) * dy; }
  double cell_measure() const { return dx * dy * angles.dtheta(); }
  double mass() const;

  /// Spatial marginal per cell, integrated over angle: column-major-free
  /// vector of nx*ny cell masses (units: plain mass).
  std::vector<double> xy_cell_mass() const;
};

/// Resting-phase density r(x, y, theta, eta) for agents mid-turn, units
/// 1/(m^2 rad s). Slot q covers remaining turn time in (q d_eta, (q+1) d_eta];
/// the grid spans eta in (0, pi/omega] with n_eta = n_theta/2 slots.
struct RestingGrid {
  int nx = 0;
  int ny = 0;
  int n_eta = 0;
  AngleGrid angles{2};
  double dx = 0.0;
  double dy = 0.0;
  double d_eta = 0.0;

  /// Layout: (((i * ny + j) * n + k) * n_eta + q), slot fastest.
  std::vector<double> r;

  double& at(int i, int j, int k, int q) {
    return r[((static_cast<std::size_t>(i) * ny + j) * angles.n + k) *
                 static_cast<std::size_t>(n_eta) +
             q];
  }
  double at(int i, int j, int k, int q) const {
    return r[((static_cast<std::size_t>(i) * ny + j) * angles.n + k) *
                 static_cast<std::size_t>(n_eta) +
             q];
  }
  double cell_measure() const { return dx * dy * angles.dtheta() * d_eta; }
  double mass() const;
};

/// Total-mass samples (t, M(t)), either from a forward solve or from the
/// empirical survival of agent runs.
struct MassCurve {
  std::vector<std::pair<double, double>> samples;
};

/// Uniform density over the pen rectangle, zero elsewhere, with area-fraction
/// weights for straddling cells; normalized so the total mass is exactly 1.
DensityGrid initial_condition(const Arena& arena, const NumericalParams& num);

struct ForwardResult {
  DensityGrid p;
  RestingGrid rest;        ///< empty (n_eta = 0) when turning is instant
  MassCurve mass;          ///< running + resting mass
  MassCurve running_mass;  ///< running-phase mass only
  long steps = 0;
  double dt = 0.0;  ///< actual step used (may be snapped, see solver notes)
};

/// First-order upwind transport with instantaneous uniform turning.
/// Reflective walls pair each angle with its exact specular partner; the
/// x = Lx edge absorbs (zero inflow) when the target is open.
ForwardResult solve_classical(const PhysicalParams& phys, const Arena& arena,
                              const NumericalParams& num, double horizon,
                              double mass_sample_dt = 0.1);

/// Same transport plus an explicit resting phase: every turn parks density in
/// the eta grid for its exact duration (shortest-arc angle over omega, snapped
/// to whole eta slots), and reflective walls route outgoing flux into resting
/// slots toward the specular heading instead of reflecting instantly. Requires
/// d_eta = dtheta/omega; dt is snapped down to an exact divisor of d_eta so
/// slot shifts land on step boundaries. The infinite-omega sentinel falls back
/// to solve_classical.
ForwardResult solve_resting_state(const PhysicalParams& phys, const Arena& arena,
                                  const NumericalParams& num, double horizon,
                                  double mass_sample_dt = 0.1);

}  // namespace vjsim
