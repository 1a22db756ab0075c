#pragma once
#include <cstddef>
#include <utility>
#include <vector>

#include "vjsim/agents.hpp"
#include "vjsim/core.hpp"
#include "vjsim/transport_fvm.hpp"

namespace vjsim {

/// Planar position sample, one point per agent observation.
struct Sample2D {
  std::vector<std::pair<double, double>> points;
};

/// Corner budget for the 2-D KS scans; beyond it the corner set is thinned by
/// a deterministic stratified stride so runtime stays near-linear.
inline constexpr std::size_t kKsCornerCap = 10000;

/// Two-sample 2-D Kolmogorov-Smirnov metric in Peacock's four-quadrant form:
/// D = max over quadrant orientations and test corners (the pooled data
/// coordinates) of the empirical CDF gap. Orientations are evaluated through
/// complements of the joint lower-quadrant counts, identically for both
/// samples, so the metric is symmetric and exactly zero for identical sets.
double ks2d_peacock(const Sample2D& a, const Sample2D& b,
                    std::size_t corner_cap = kKsCornerCap);

/// Sample-versus-density variant: the grid side uses exact partial sums of
/// cell masses (piecewise-constant density within cells), corners at sample
/// points and cell boundaries. The grid is renormalized to unit mass.
double ks2d_vs_density(const Sample2D& a, const DensityGrid& grid,
                       std::size_t corner_cap = kKsCornerCap);

struct CensoredMeanResult {
  double mean = 0.0;      ///< combined mean exit time, s
  double fit_rate = 0.0;  ///< tail decay rate beta, 1/s; 0 when nothing was censored
  long n_exited = 0;
  long n_censored = 0;
};

/// Pooled mean exit time with censoring: exited agents contribute their
/// times; censored agents contribute t_end + 1/beta, where beta is the
/// least-squares slope of log m(t) over the late-time fit window
/// [t_end/2, t_end] restricted to m > 0.
CensoredMeanResult censored_mean_exit(const std::vector<RunRecord>& records, double t_end);

/// The closing arithmetic of the censored mean, exposed for direct checks:
/// (n_e * mean_e + n_c * tail_mean) / (n_e + n_c).
double combine_censored_mean(long n_exited, double mean_exited, long n_censored,
                             double tail_mean);

/// m(t) = fraction of agents not yet exited at t, averaged over runs,
/// evaluated on the given time grid.
MassCurve empirical_mass_curve(const std::vector<RunRecord>& records,
                               const std::vector<double>& t_grid);

}  // namespace vjsim
