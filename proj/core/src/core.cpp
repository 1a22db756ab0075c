#include "vjsim/core.hpp"

#include <algorithm>
#include <cmath>

namespace vjsim {

void PhysicalParams::validate() const {
  if (!(s > 0.0)) throw ConfigError("speed must be positive");
  if (!(lambda0 > 0.0)) throw ConfigError("turning frequency must be positive");
  if (!(omega > 0.0)) throw ConfigError("angular speed must be positive or infinite");
  if (epsilon < 0.0) throw ConfigError("robot diameter must be non-negative");
  if (!(t_a > 0.0)) throw ConfigError("adaptation time must be positive");
}

void Arena::validate() const {
  if (!(Lx > 0.0) || !(Ly > 0.0)) throw ConfigError("arena sides must be positive");
  if (!(L0 > 0.0) || L0 > Lx || L0 > Ly)
    throw ConfigError("pen edge must satisfy 0 < L0 <= min(Lx, Ly)");
  if (pen_x.lo < 0.0 || pen_x.hi > Lx || pen_x.width() <= 0.0)
    throw ConfigError("pen x-range must lie inside [0, Lx]");
  if (pen_y.lo < -Ly / 2.0 || pen_y.hi > Ly / 2.0 || pen_y.width() <= 0.0)
    throw ConfigError("pen y-range must lie inside [-Ly/2, Ly/2]");
}

void SignalField::validate(const Arena& arena) const {
  const double a = value(0.0);
  const double b = value(arena.Lx);
  if (std::min(a, b) < 0.0 || std::max(a, b) > 1.0)
    throw ConfigError("signal must stay within [0,1] across the arena");
}

void NumericalParams::validate(const PhysicalParams& phys) const {
  if (!(dt > 0.0) || !(dx > 0.0)) throw ConfigError("dt and dx must be positive");
  if (n_theta < 2 || n_theta % 2 != 0) throw ConfigError("n_theta must be even and >= 2");
  if (!(t_end > 0.0)) throw ConfigError("t_end must be positive");
  if (!(solver_tol > 0.0)) throw ConfigError("solver_tol must be positive");
  if (max_iters < 1) throw ConfigError("max_iters must be at least 1");
  if (phys.s * dt / dx > 1.0 + 1e-12)
    throw CflError("CFL violated: s*dt/dx exceeds 1");
  if (d_eta != 0.0 && !phys.instant_turning()) {
    const double want = derived_d_eta(phys);
    if (std::abs(d_eta - want) > 1e-12 * want)
      throw ConfigError("d_eta must equal (2pi/n_theta)/omega when delays are active");
  }
}

}  // namespace vjsim
