#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "vjsim/exit_time.hpp"

using namespace vjsim;

namespace {

// coarse grid settles in well under a second, fine enough for value checks
NumericalParams coarse() {
  NumericalParams num;
  num.dx = 1.183 / 100.0;
  num.n_theta = 20;
  num.solver_tol = 1e-10;
  return num;
}

Arena flush_pen_arena() {
  Arena arena;
  arena.pen_x = {0.0, 0.305};
  return arena;
}

}  // namespace

TEST_CASE("angular weight profile picks out diagonal headings") {
  CHECK(A_weight(0.0) == 0.0);
  CHECK(A_weight(kPi / 2.0) == doctest::Approx(kPi / 2.0));
  CHECK(A_weight(-3.0 * kPi / 4.0) == doctest::Approx(kPi * std::sqrt(2.0) / 8.0));
  CHECK(A_weight(-3.0 * kPi / 4.0) == doctest::Approx(0.5553603672697958).epsilon(1e-12));
  CHECK(A_weight(kPi) == doctest::Approx(0.0).epsilon(1e-12));
  // even in theta
  for (double th : {0.3, 1.1, 2.7}) CHECK(A_weight(th) == doctest::Approx(A_weight(-th)));
}

TEST_CASE("escape takes longer when walls are sticky") {
  const PhysicalParams phys;
  const Arena arena = flush_pen_arena();
  const NumericalParams num = coarse();
  const ExitTimeGrid gc = solve_met_classical(phys, arena, num);
  const ExitTimeGrid gd = solve_met_delayed(phys, arena, num);

  CHECK(pen_average(gc, arena) == doctest::Approx(136.615712).epsilon(1e-6));
  CHECK(pen_average(gd, arena) == doctest::Approx(151.495068).epsilon(1e-6));

  // the slowdown is positive at every node, not just on average
  double min_gap = 1e300;
  for (std::size_t q = 0; q < gc.tau.size(); ++q)
    min_gap = std::min(min_gap, gd.tau[q] - gc.tau[q]);
  CHECK(min_gap >= -1e-9);
}

TEST_CASE("no-signal solutions are symmetric under heading reversal in y") {
  const PhysicalParams phys;
  const Arena arena = flush_pen_arena();
  const NumericalParams num = coarse();
  const AngleGrid grid(num.n_theta);
  for (const ExitTimeGrid& g :
       {solve_met_classical(phys, arena, num), solve_met_delayed(phys, arena, num)}) {
    double residual = 0.0;
    for (int i = 0; i <= g.nx; ++i)
      for (int k = 0; k < grid.n; ++k)
        residual = std::max(residual, std::abs(g.at(i, k) - g.at(i, grid.mirror_x(k))));
    CHECK(residual <= 1e-8);
  }
}

TEST_CASE("left-wall jump equals the specular turn duration") {
  const PhysicalParams phys;
  const Arena arena = flush_pen_arena();
  const NumericalParams num = coarse();
  const ExitTimeGrid g = solve_met_delayed(phys, arena, num);
  const AngleGrid grid(num.n_theta);
  for (int k = 0; k < grid.n; ++k) {
    const double th = grid.theta(k);
    if (std::cos(th) >= 0.0) continue;
    const double expected = delay_kernel(th, wrap_angle(kPi - th), phys.omega);
    CHECK(g.at(0, k) - g.at(0, grid.mirror_y(k)) == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("instant turning limit collapses the delayed solver exactly") {
  PhysicalParams phys;
  phys.omega = kOmegaInfinite;
  const Arena arena = flush_pen_arena();
  const NumericalParams num = coarse();
  const ExitTimeGrid gc = solve_met_classical(phys, arena, num);
  const ExitTimeGrid gd = solve_met_delayed(phys, arena, num);
  double dmax = 0.0;
  for (std::size_t q = 0; q < gc.tau.size(); ++q)
    dmax = std::max(dmax, std::abs(gd.tau[q] - gc.tau[q]));
  CHECK(dmax == 0.0);
}

TEST_CASE("grid refinement moves the pen mean by a fraction of a percent") {
  const PhysicalParams phys;
  const Arena arena = flush_pen_arena();
  const NumericalParams num = coarse();
  NumericalParams fine = num;
  fine.dx = 1.183 / 200.0;
  fine.n_theta = 40;
  const double mc = pen_average(solve_met_classical(phys, arena, num), arena);
  const double mf = pen_average(solve_met_classical(phys, arena, fine), arena);
  CHECK(mf == doctest::Approx(136.721025).epsilon(1e-6));
  CHECK(std::abs(mf - mc) / mf <= 0.01);
}

TEST_CASE("default inset pen reports a slightly shorter escape") {
  const PhysicalParams phys;
  const Arena arena;  // pen starts 0.075 m off the wall
  const ExitTimeGrid g = solve_met_classical(phys, arena, coarse());
  CHECK(pen_average(g, arena) == doctest::Approx(134.498070).epsilon(1e-6));
}

TEST_CASE("graded turning rate cuts the escape time roughly in half") {
  const PhysicalParams phys;
  const Arena arena = flush_pen_arena();
  const NumericalParams num = coarse();
  const SignalField field{0.23, 0.39 / arena.Lx};
  const double mi = pen_average(solve_met_signal(phys, arena, num, field, OmegaMode::Instant),
                                arena);
  const double mf = pen_average(solve_met_signal(phys, arena, num, field, OmegaMode::Finite),
                                arena);
  CHECK(mi == doctest::Approx(65.845276).epsilon(1e-6));
  CHECK(mf == doctest::Approx(71.631750).epsilon(1e-6));
  CHECK(mf > mi);

  // infinite turn speed in finite mode gives the instant solution bitwise
  PhysicalParams inst = phys;
  inst.omega = kOmegaInfinite;
  const ExitTimeGrid gi = solve_met_signal(phys, arena, num, field, OmegaMode::Instant);
  const ExitTimeGrid gf = solve_met_signal(inst, arena, num, field, OmegaMode::Finite);
  double dmax = 0.0;
  for (std::size_t q = 0; q < gi.tau.size(); ++q)
    dmax = std::max(dmax, std::abs(gf.tau[q] - gi.tau[q]));
  CHECK(dmax == 0.0);
}

TEST_CASE("steep downhill gradients that zero the rate are rejected") {
  PhysicalParams phys;
  phys.alpha = 200.0;  // gamma * s * slope now exceeds lambda0
  const Arena arena = flush_pen_arena();
  const SignalField field{0.1, 0.39 / arena.Lx};
  CHECK_THROWS_AS(solve_met_signal(phys, arena, coarse(), field, OmegaMode::Instant),
                  NonPositiveRate);
}

TEST_CASE("solver failure modes surface as typed errors") {
  const PhysicalParams phys;
  const Arena arena = flush_pen_arena();
  NumericalParams num = coarse();
  num.max_iters = 1;
  CHECK_THROWS_AS(solve_met_classical(phys, arena, num), NoConvergence);

  Arena closed = arena;
  closed.target_open = false;
  CHECK_THROWS_AS(solve_met_classical(phys, closed, coarse()), ConfigError);
}

TEST_CASE("pen averaging weights partially covered columns") {
  const PhysicalParams phys;
  Arena arena = flush_pen_arena();
  const ExitTimeGrid g = solve_met_classical(phys, arena, coarse());
  // shrinking the pen to its left half must lengthen the averaged escape,
  // since release points sit farther from the door
  Arena half = arena;
  half.pen_x = {0.0, 0.1525};
  CHECK(pen_average(g, half) > pen_average(g, arena));
  // and a pen wider by less than one cell still changes the average a bit
  Arena nudged = arena;
  nudged.pen_x = {0.0, 0.305 + g.dx * 0.5};
  CHECK(pen_average(g, nudged) != pen_average(g, arena));
}
