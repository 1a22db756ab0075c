#include "vjsim/transport_fvm.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace vjsim {

double DensityGrid::mass() const {
  double sum = 0.0;
  for (double v : p) sum += v;
  return sum * cell_measure();
}

std::vector<double> DensityGrid::xy_cell_mass() const {
  std::vector<double> m(static_cast<std::size_t>(nx) * ny, 0.0);
  const double w = cell_measure();
  std::size_t idx = 0;
  for (std::size_t c = 0; c < m.size(); ++c) {
    double sum = 0.0;
    for (int k = 0; k < angles.n; ++k) sum += p[idx++];
    m[c] = sum * w;
  }
  return m;
}

double RestingGrid::mass() const {
  double sum = 0.0;
  for (double v : r) sum += v;
  return sum * cell_measure();
}

DensityGrid initial_condition(const Arena& arena, const NumericalParams& num) {
  arena.validate();
  DensityGrid g{.nx = 0, .ny = 0, .angles = AngleGrid(num.n_theta)};
  g.nx = std::max(1, static_cast<int>(std::lround(arena.Lx / num.dx)));
  g.ny = std::max(1, static_cast<int>(std::lround(arena.Ly / num.dx)));
  g.dx = arena.Lx / g.nx;
  g.dy = arena.Ly / g.ny;
  g.y_lo = -arena.Ly / 2.0;
  g.p.assign(static_cast<std::size_t>(g.nx) * g.ny * g.angles.n, 0.0);

  // Area-fraction overlap of each cell with the pen, isotropic in angle.
  const double base = 1.0 / (arena.pen_area() * 2.0 * kPi);
  for (int i = 0; i < g.nx; ++i) {
    const double x0 = i * g.dx, x1 = x0 + g.dx;
    const double ox = std::max(0.0, std::min(x1, arena.pen_x.hi) - std::max(x0, arena.pen_x.lo));
    if (ox <= 0.0) continue;
    for (int j = 0; j < g.ny; ++j) {
      const double y0 = g.y_lo + j * g.dy, y1 = y0 + g.dy;
      const double oy = std::max(0.0, std::min(y1, arena.pen_y.hi) - std::max(y0, arena.pen_y.lo));
      if (oy <= 0.0) continue;
      const double v = base * (ox * oy) / (g.dx * g.dy);
      for (int k = 0; k < g.angles.n; ++k) g.at(i, j, k) = v;
    }
  }

  const double m = g.mass();
  if (!(m > 0.0)) throw ConfigError("pen does not overlap the arena grid");
  for (double& v : g.p) v /= m;
  return g;
}

namespace {

// Everything one forward step needs, precomputed once.
struct StepContext {
  int nx, ny, n;
  double dtdx, dtdy, lam_dt;
  bool target_open;
  std::vector<double> ca, sa;      // velocity components per angle
  std::vector<int> mkx, mky;       // specular partners at y-walls / x-walls
  std::vector<int> ex, ey;         // eta slots consumed by a wall turn
};

StepContext make_context(const PhysicalParams& phys, const Arena& arena,
                         const DensityGrid& g, double dt) {
  StepContext c;
  c.nx = g.nx;
  c.ny = g.ny;
  c.n = g.angles.n;
  c.dtdx = dt / g.dx;
  c.dtdy = dt / g.dy;
  c.lam_dt = phys.lambda0 * dt;
  c.target_open = arena.target_open;
  c.ca.resize(c.n);
  c.sa.resize(c.n);
  c.mkx.resize(c.n);
  c.mky.resize(c.n);
  c.ex.resize(c.n);
  c.ey.resize(c.n);
  double cfl = 0.0;
  for (int k = 0; k < c.n; ++k) {
    const double th = g.angles.theta(k);
    c.ca[k] = phys.s * std::cos(th);
    c.sa[k] = phys.s * std::sin(th);
    c.mkx[k] = g.angles.mirror_x(k);
    c.mky[k] = g.angles.mirror_y(k);
    c.ex[k] = g.angles.steps(k, c.mky[k]);
    c.ey[k] = g.angles.steps(k, c.mkx[k]);
    cfl = std::max(cfl, std::abs(c.ca[k]) * c.dtdx + std::abs(c.sa[k]) * c.dtdy);
  }
  if (cfl > 1.0 + 1e-12) throw CflError("transport CFL exceeds 1");
  if (c.lam_dt > 1.0) throw CflError("turning probability per step exceeds 1");
  return c;
}

inline std::size_t cell0(const StepContext& c, int i, int j) {
  return (static_cast<std::size_t>(i) * c.ny + j) * c.n;
}

// One upwind transport step P -> PN. With ghost_reflect the reflective walls
// feed the specular partner back in the same step; without it (the resting
// solver) wall inflow is zero and the outgoing flux is banked by the caller.
void transport_step(const StepContext& c, const double* P, double* PN, bool ghost_reflect) {
  for (int i = 0; i < c.nx; ++i) {
    for (int j = 0; j < c.ny; ++j) {
      const std::size_t b = cell0(c, i, j);
      const double* pc = P + b;
      const double* px_lo = i > 0 ? P + cell0(c, i - 1, j) : nullptr;
      const double* px_hi = i + 1 < c.nx ? P + cell0(c, i + 1, j) : nullptr;
      const double* py_lo = j > 0 ? P + cell0(c, i, j - 1) : nullptr;
      const double* py_hi = j + 1 < c.ny ? P + cell0(c, i, j + 1) : nullptr;
      for (int k = 0; k < c.n; ++k) {
        const double ca = c.ca[k], sa = c.sa[k];
        const double v = pc[k];
        double fx_lo, fx_hi, fy_lo, fy_hi;
        if (ca > 0.0) {
          fx_lo = px_lo ? ca * px_lo[k] : (ghost_reflect ? ca * pc[c.mky[k]] : 0.0);
          fx_hi = ca * v;
        } else {
          fx_lo = ca * v;
          if (px_hi) {
            fx_hi = ca * px_hi[k];
          } else if (c.target_open || !ghost_reflect) {
            fx_hi = 0.0;
          } else {
            fx_hi = ca * pc[c.mky[k]];
          }
        }
        if (sa > 0.0) {
          fy_lo = py_lo ? sa * py_lo[k] : (ghost_reflect ? sa * pc[c.mkx[k]] : 0.0);
          fy_hi = sa * v;
        } else {
          fy_lo = sa * v;
          fy_hi = py_hi ? sa * py_hi[k] : (ghost_reflect ? sa * pc[c.mkx[k]] : 0.0);
        }
        PN[b + k] = v - c.dtdx * (fx_hi - fx_lo) - c.dtdy * (fy_hi - fy_lo);
      }
    }
  }
}

// Instantaneous uniform turning: relax each angle toward the angular mean.
void turn_instant(const StepContext& c, const double* P, double* PN) {
  const std::size_t cells = static_cast<std::size_t>(c.nx) * c.ny;
  for (std::size_t cidx = 0; cidx < cells; ++cidx) {
    const double* pc = P + cidx * c.n;
    double* qc = PN + cidx * c.n;
    double mean = 0.0;
    for (int k = 0; k < c.n; ++k) mean += pc[k];
    mean /= c.n;
    for (int k = 0; k < c.n; ++k) qc[k] += c.lam_dt * (mean - pc[k]);
  }
}

// Delayed turning: each turn banks its mass in the eta slot matching the
// whole-cell angular distance swept; the zero-distance term re-enters
// directly. Slots are addressed through a rotating base so a shift is O(1).
struct EtaBank {
  std::vector<double>* r;
  int n_eta;
  int base;
  double inv_d_eta;

  std::size_t slot(std::size_t cell_angle, int e) const {
    return cell_angle * n_eta + static_cast<std::size_t>((base + e - 1) % n_eta);
  }
};

void turn_delayed(const StepContext& c, const double* P, double* PN, EtaBank& bank) {
  const std::size_t cells = static_cast<std::size_t>(c.nx) * c.ny;
  const double rate = c.lam_dt / c.n;
  const int half = c.n / 2;
  double* R = bank.r->data();
  for (std::size_t cidx = 0; cidx < cells; ++cidx) {
    const double* pc = P + cidx * c.n;
    double* qc = PN + cidx * c.n;
    for (int k = 0; k < c.n; ++k) {
      qc[k] += rate * pc[k] - c.lam_dt * pc[k];
      const std::size_t cell_angle = cidx * c.n + k;
      for (int e = 1; e < half; ++e) {
        const int klo = k - e >= 0 ? k - e : k - e + c.n;
        const int khi = k + e < c.n ? k + e : k + e - c.n;
        R[bank.slot(cell_angle, e)] += rate * (pc[klo] + pc[khi]) * bank.inv_d_eta;
      }
      const int kop = k + half < c.n ? k + half : k - half;
      R[bank.slot(cell_angle, half)] += rate * pc[kop] * bank.inv_d_eta;
    }
  }
}

// Outgoing wall flux enters the resting grid at the boundary cell, pointed at
// the specular heading, delayed by the whole-cell distance of that turn.
void bank_wall_flux(const StepContext& c, const double* P, EtaBank& bank) {
  double* R = bank.r->data();
  for (int j = 0; j < c.ny; ++j) {
    const std::size_t bl = cell0(c, 0, j);
    const std::size_t br = cell0(c, c.nx - 1, j);
    for (int k = 0; k < c.n; ++k) {
      if (c.ca[k] < 0.0) {
        const double out = -c.ca[k] * c.dtdx * P[bl + k];
        R[bank.slot(bl + c.mky[k], c.ex[k])] += out * bank.inv_d_eta;
      } else if (!c.target_open) {
        const double out = c.ca[k] * c.dtdx * P[br + k];
        R[bank.slot(br + c.mky[k], c.ex[k])] += out * bank.inv_d_eta;
      }
    }
  }
  for (int i = 0; i < c.nx; ++i) {
    const std::size_t bb = cell0(c, i, 0);
    const std::size_t bt = cell0(c, i, c.ny - 1);
    for (int k = 0; k < c.n; ++k) {
      if (c.sa[k] < 0.0) {
        const double out = -c.sa[k] * c.dtdy * P[bb + k];
        R[bank.slot(bb + c.mkx[k], c.ey[k])] += out * bank.inv_d_eta;
      } else {
        const double out = c.sa[k] * c.dtdy * P[bt + k];
        R[bank.slot(bt + c.mkx[k], c.ey[k])] += out * bank.inv_d_eta;
      }
    }
  }
}

void sample_mass(ForwardResult& res, double t, double run, double rest) {
  res.running_mass.samples.emplace_back(t, run);
  res.mass.samples.emplace_back(t, run + rest);
}

}  // namespace

ForwardResult solve_classical(const PhysicalParams& phys, const Arena& arena,
                              const NumericalParams& num, double horizon,
                              double mass_sample_dt) {
  phys.validate();
  arena.validate();
  num.validate(phys);
  if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");

  ForwardResult res;
  res.p = initial_condition(arena, num);
  res.dt = num.dt;
  const StepContext ctx = make_context(phys, arena, res.p, num.dt);
  const long n_steps = std::max(1L, std::lround(horizon / num.dt));
  const long sample_every = std::max(1L, std::lround(mass_sample_dt / num.dt));

  std::vector<double> pn(res.p.p.size());
  sample_mass(res, 0.0, res.p.mass(), 0.0);
  for (long step = 0; step < n_steps; ++step) {
    transport_step(ctx, res.p.p.data(), pn.data(), /*ghost_reflect=*/true);
    turn_instant(ctx, res.p.p.data(), pn.data());
    res.p.p.swap(pn);
    if ((step + 1) % sample_every == 0 || step + 1 == n_steps)
      sample_mass(res, (step + 1) * num.dt, res.p.mass(), 0.0);
  }
  res.steps = n_steps;
  return res;
}

ForwardResult solve_resting_state(const PhysicalParams& phys, const Arena& arena,
                                  const NumericalParams& num, double horizon,
                                  double mass_sample_dt) {
  phys.validate();
  arena.validate();
  num.validate(phys);
  if (phys.instant_turning()) return solve_classical(phys, arena, num, horizon, mass_sample_dt);
  if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");

  const double d_eta = num.derived_d_eta(phys);
  if (num.d_eta != 0.0 && std::abs(num.d_eta - d_eta) > 1e-12 * d_eta)
    throw ConfigError("d_eta must equal (2pi/n_theta)/omega");

  ForwardResult res;
  res.p = initial_condition(arena, num);

  // Snap dt down to an exact divisor of d_eta so every eta shift lands on a
  // step boundary and rest durations stay whole multiples of d_eta.
  const int per_slot = std::max(1, static_cast<int>(std::ceil(d_eta / num.dt - 1e-9)));
  const double dt = d_eta / per_slot;
  res.dt = dt;

  const StepContext ctx = make_context(phys, arena, res.p, dt);
  res.rest.nx = res.p.nx;
  res.rest.ny = res.p.ny;
  res.rest.n_eta = ctx.n / 2;
  res.rest.angles = res.p.angles;
  res.rest.dx = res.p.dx;
  res.rest.dy = res.p.dy;
  res.rest.d_eta = d_eta;
  res.rest.r.assign(static_cast<std::size_t>(res.rest.nx) * res.rest.ny * ctx.n * res.rest.n_eta, 0.0);

  EtaBank bank{&res.rest.r, res.rest.n_eta, 0, 1.0 / d_eta};

  const long n_steps = std::max(1L, std::lround(horizon / dt));
  const long sample_every = std::max(1L, std::lround(mass_sample_dt / dt));

  std::vector<double> pn(res.p.p.size());
  double* R = res.rest.r.data();
  const std::size_t cells_a = static_cast<std::size_t>(ctx.nx) * ctx.ny * ctx.n;

  sample_mass(res, 0.0, res.p.mass(), 0.0);
  for (long step = 0; step < n_steps; ++step) {
    if (step > 0 && step % per_slot == 0) {
      // Shift eta: the slot at the rotating base finished its turn; its mass
      // resumes running now and the slot is recycled as the farthest one.
      double* P = res.p.p.data();
      for (std::size_t ca = 0; ca < cells_a; ++ca) {
        double& s = R[ca * bank.n_eta + bank.base];
        P[ca] += s * d_eta;
        s = 0.0;
      }
      bank.base = (bank.base + 1) % bank.n_eta;
    }
    transport_step(ctx, res.p.p.data(), pn.data(), /*ghost_reflect=*/false);
    bank_wall_flux(ctx, res.p.p.data(), bank);
    turn_delayed(ctx, res.p.p.data(), pn.data(), bank);
    res.p.p.swap(pn);
    if ((step + 1) % sample_every == 0 || step + 1 == n_steps)
      sample_mass(res, (step + 1) * dt, res.p.mass(), res.rest.mass());
  }
  res.steps = n_steps;

  // Materialize the rotating slot order back to canonical: slot q holds mass
  // that resumes running after q+1 more shifts.
  if (bank.base != 0) {
    std::vector<double> canon(res.rest.r.size());
    for (std::size_t ca = 0; ca < cells_a; ++ca)
      for (int q = 0; q < bank.n_eta; ++q)
        canon[ca * bank.n_eta + q] = R[ca * bank.n_eta + (bank.base + q) % bank.n_eta];
    res.rest.r.swap(canon);
  }
  return res;
}

}  // namespace vjsim
