#pragma once
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "vjsim/rng.hpp"

namespace vjsim {

inline constexpr double kPi = 3.14159265358979323846;

/// Sentinel for instant turning; finite-delay code paths test std::isinf.
inline constexpr double kOmegaInfinite = std::numeric_limits<double>::infinity();

struct ConfigError : std::runtime_error { using std::runtime_error::runtime_error; };
struct CflError : std::runtime_error { using std::runtime_error::runtime_error; };
struct PackingError : std::runtime_error { using std::runtime_error::runtime_error; };
struct NoConvergence : std::runtime_error { using std::runtime_error::runtime_error; };
struct NonPositiveRate : std::runtime_error { using std::runtime_error::runtime_error; };
struct DegenerateFit : std::runtime_error { using std::runtime_error::runtime_error; };
struct EmptySample : std::runtime_error { using std::runtime_error::runtime_error; };
struct SchemaError : std::runtime_error { using std::runtime_error::runtime_error; };

/// Robot physics: run speed, turning statistics, signal response.
struct PhysicalParams {
  double s = 5.8e-2;       ///< run speed, m/s
  double lambda0 = 0.25;   ///< base turning frequency, 1/s
  double omega = 4.65;     ///< turn angular speed, rad/s; kOmegaInfinite = instant
  double epsilon = 0.075;  ///< robot diameter, m
  double alpha = 8.0;      ///< signal gain, dimensionless
  double t_a = 10.0;       ///< signal adaptation time, s

  bool instant_turning() const { return std::isinf(omega); }

  /// Drift gain of the gradient form of the turning frequency,
  /// alpha t_a lambda0 / (1 + lambda0 t_a). Always derived, never supplied.
  double gamma() const { return alpha * t_a * lambda0 / (1.0 + lambda0 * t_a); }

  void validate() const;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
  bool contains(double v) const { return v >= lo && v <= hi; }
};

/// Effective arena: the rectangle accessible to robot centers. x in [0, Lx],
/// y in [-Ly/2, Ly/2]. The target is the whole x = Lx edge when open; every
/// other edge reflects.
struct Arena {
  double Lx = 1.183;  ///< m
  double Ly = 1.145;  ///< m
  double L0 = 0.305;  ///< pen edge length, m
  Interval pen_x{0.075, 0.380};
  Interval pen_y{-0.1525, 0.1525};
  bool target_open = true;

  double pen_area() const { return pen_x.width() * pen_y.width(); }
  void validate() const;
};

/// Linear signal profile S(x) = intercept + slope x across the arena.
struct SignalField {
  double intercept = 0.0;
  double slope = 0.0;  ///< 1/m

  double value(double x) const { return intercept + slope * x; }
  void validate(const Arena& arena) const;
};

/// Discretization knobs shared by the forward and backward solvers.
struct NumericalParams {
  double dt = 1e-2;          ///< forward time step, s
  double dx = 1.183 / 200.0; ///< spatial cell, m (also used for dy)
  int n_theta = 40;          ///< angular cells, must be even
  double d_eta = 0.0;        ///< delay cell, s; 0 = derive as (2pi/n_theta)/omega
  double t_end = 300.0;      ///< horizon, s
  double solver_tol = 1e-10; ///< relative tolerance of the backward solvers
  long max_iters = 100000;   ///< iteration cap of the backward solvers

  /// Delay cell consistent with the angular grid: the time to turn one cell.
  double derived_d_eta(const PhysicalParams& phys) const {
    return phys.instant_turning() ? 0.0 : (2.0 * kPi / n_theta) / phys.omega;
  }
  void validate(const PhysicalParams& phys) const;
};

enum class Phase { Running, Turning };

struct AgentState {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  ///< angle in (-pi, pi]; while Running, v = s(cos, sin)
  Phase phase = Phase::Running;
  double eta = 0.0;      ///< remaining turn time while Turning, s
  double z = 0.0;        ///< internal signal variable
  std::optional<double> exited_at;
};

/// Midpoint angular grid theta_k = -pi + (k + 1/2) 2pi/n, n even.
/// Both specular maps are exact index permutations here, and no midpoint
/// lands on 0 or pi. When n is a multiple of four none lands on +-pi/2
/// either; grids with n = 2 mod 4 carry two near-vertical headings, which
/// the solvers treat as relaxation-dominated columns.
struct AngleGrid {
  int n;

  explicit AngleGrid(int n_theta) : n(n_theta) {
    if (n < 2 || n % 2 != 0) throw ConfigError("n_theta must be even and >= 2");
  }
  double dtheta() const { return 2.0 * kPi / n; }
  double theta(int k) const { return -kPi + (k + 0.5) * dtheta(); }
  /// theta -> -theta (reflection at the top/bottom walls).
  int mirror_x(int k) const { return n - 1 - k; }
  /// theta -> pi - theta (reflection at the left/right walls).
  int mirror_y(int k) const { return ((n / 2 - 1 - k) % n + n) % n; }
  /// Circular index distance: a turn from cell a to cell b sweeps
  /// steps(a,b) * dtheta radians along the shorter arc.
  int steps(int a, int b) const {
    int d = a - b;
    if (d < 0) d = -d;
    d %= n;
    return d <= n - d ? d : n - d;
  }
};

/// Wrap an angle to (-pi, pi].
inline double wrap_angle(double a) {
  double w = std::remainder(a, 2.0 * kPi);
  if (w <= -kPi) w = kPi;
  return w;
}

/// Turning duration between two headings: (shortest angular distance)/omega.
/// Zero under the instant-turning sentinel.
inline double delay_kernel(double theta_from, double theta_to, double omega) {
  if (std::isinf(omega)) return 0.0;
  return std::abs(std::remainder(theta_to - theta_from, 2.0 * kPi)) / omega;
}

/// Specular reflection v - 2 (v.n) n about a unit wall normal.
inline std::pair<double, double> reflect_velocity(double vx, double vy,
                                                  double nx, double ny) {
  const double vn = vx * nx + vy * ny;
  return {vx - 2.0 * vn * nx, vy - 2.0 * vn * ny};
}

/// Heading drawn uniformly on the circle, reported in (-pi, pi].
inline double sample_uniform_angle(SplitMix64& rng) {
  return wrap_angle(2.0 * kPi * rng.uniform());
}

/// Velocity drawn uniformly on the speed-s circle.
inline std::pair<double, double> sample_uniform_direction(SplitMix64& rng, double s) {
  const double th = 2.0 * kPi * rng.uniform();
  return {s * std::cos(th), s * std::sin(th)};
}

/// Mean duration of a free turn, pi/(2 omega); 0 under the instant sentinel.
inline double mean_turn_time(double omega) {
  return std::isinf(omega) ? 0.0 : kPi / (2.0 * omega);
}

}  // namespace vjsim
