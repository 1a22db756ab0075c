#include "vjsim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace vjsim {

namespace {

using Point = std::pair<double, double>;

// Prefix-count tree over y-ranks for the offline dominance sweep.
class Fenwick {
 public:
  explicit Fenwick(std::size_t n) : tree_(n + 1, 0) {}
  void add(std::size_t rank) {
    for (std::size_t i = rank + 1; i < tree_.size(); i += i & (~i + 1)) ++tree_[i];
  }
  long prefix(std::size_t count) const {  // total over the first `count` ranks
    long s = 0;
    for (std::size_t i = count; i > 0; i -= i & (~i + 1)) s += tree_[i];
    return s;
  }

 private:
  std::vector<long> tree_;
};

// counts[c] = #points with x <= corner.x and y <= corner.y, for all corners,
// in O((n + K) log n) via an x-sweep over a y-rank tree.
std::vector<long> lower_quadrant_counts(const std::vector<Point>& points,
                                        const std::vector<Point>& corners) {
  std::vector<Point> pts = points;
  std::sort(pts.begin(), pts.end());
  std::vector<double> ys(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) ys[i] = pts[i].second;
  std::sort(ys.begin(), ys.end());

  std::vector<std::size_t> order(corners.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    return corners[l].first < corners[r].first;
  });

  Fenwick tree(ys.size());
  std::vector<long> counts(corners.size(), 0);
  std::size_t next = 0;
  for (std::size_t oi : order) {
    const double cx = corners[oi].first;
    while (next < pts.size() && pts[next].first <= cx) {
      const std::size_t rank =
          std::lower_bound(ys.begin(), ys.end(), pts[next].second) - ys.begin();
      tree.add(rank);
      ++next;
    }
    const std::size_t below =
        std::upper_bound(ys.begin(), ys.end(), corners[oi].second) - ys.begin();
    counts[oi] = tree.prefix(below);
  }
  return counts;
}

// 1-D marginal CDF counts (#values <= q) for every query.
std::vector<long> marginal_counts(std::vector<double> values, const std::vector<double>& qs) {
  std::sort(values.begin(), values.end());
  std::vector<long> counts(qs.size());
  for (std::size_t i = 0; i < qs.size(); ++i)
    counts[i] = std::upper_bound(values.begin(), values.end(), qs[i]) - values.begin();
  return counts;
}

// Deterministic stratified thinning: sort and take an even stride, so the
// kept corners stay spread across the sorted range whatever the input order.
void cap_corners(std::vector<Point>& corners, std::size_t cap) {
  std::sort(corners.begin(), corners.end());
  corners.erase(std::unique(corners.begin(), corners.end()), corners.end());
  if (corners.size() <= cap) return;
  std::vector<Point> kept;
  kept.reserve(cap);
  const std::size_t n = corners.size();
  for (std::size_t m = 0; m < cap; ++m) kept.push_back(corners[m * n / cap]);
  corners.swap(kept);
}

struct QuadrantCdf {
  // All four orientation CDFs at one corner, derived from the lower-quadrant
  // value and both marginals: (<=,<=), (>,<=), (<=,>), (>,>).
  double f, fx, fy;
  double q1() const { return f; }
  double q2() const { return fy - f; }
  double q3() const { return fx - f; }
  double q4() const { return 1.0 - fx - fy + f; }
};

double max_orientation_gap(const std::vector<QuadrantCdf>& a, const std::vector<QuadrantCdf>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d = std::max(d, std::abs(a[i].q1() - b[i].q1()));
    d = std::max(d, std::abs(a[i].q2() - b[i].q2()));
    d = std::max(d, std::abs(a[i].q3() - b[i].q3()));
    d = std::max(d, std::abs(a[i].q4() - b[i].q4()));
  }
  return d;
}

std::vector<QuadrantCdf> sample_cdfs(const Sample2D& s, const std::vector<Point>& corners) {
  const auto joint = lower_quadrant_counts(s.points, corners);
  std::vector<double> xs(s.points.size()), ys(s.points.size());
  std::vector<double> qx(corners.size()), qy(corners.size());
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    xs[i] = s.points[i].first;
    ys[i] = s.points[i].second;
  }
  for (std::size_t i = 0; i < corners.size(); ++i) {
    qx[i] = corners[i].first;
    qy[i] = corners[i].second;
  }
  const auto cx = marginal_counts(std::move(xs), qx);
  const auto cy = marginal_counts(std::move(ys), qy);
  const double inv = 1.0 / static_cast<double>(s.points.size());
  std::vector<QuadrantCdf> out(corners.size());
  for (std::size_t i = 0; i < corners.size(); ++i)
    out[i] = {joint[i] * inv, cx[i] * inv, cy[i] * inv};
  return out;
}

}  // namespace

double ks2d_peacock(const Sample2D& a, const Sample2D& b, std::size_t corner_cap) {
  if (a.points.empty() || b.points.empty()) throw EmptySample("KS needs non-empty samples");
  std::vector<Point> corners;
  corners.reserve(a.points.size() + b.points.size());
  corners.insert(corners.end(), a.points.begin(), a.points.end());
  corners.insert(corners.end(), b.points.begin(), b.points.end());
  cap_corners(corners, corner_cap);
  return max_orientation_gap(sample_cdfs(a, corners), sample_cdfs(b, corners));
}

double ks2d_vs_density(const Sample2D& a, const DensityGrid& grid, std::size_t corner_cap) {
  if (a.points.empty()) throw EmptySample("KS needs a non-empty sample");
  if (grid.nx < 1 || grid.ny < 1) throw ConfigError("density grid is empty");

  // Cell masses, renormalized to 1.
  std::vector<double> m = grid.xy_cell_mass();
  double total = 0.0;
  for (double v : m) total += v;
  if (!(total > 0.0)) throw ConfigError("density grid has no mass");
  for (double& v : m) v /= total;

  const int nx = grid.nx, ny = grid.ny;
  auto cell = [&](int i, int j) -> double { return m[static_cast<std::size_t>(i) * ny + j]; };
  // Exclusive 2-D prefix sums: pre(i,j) = mass of cells fully below (i,j).
  std::vector<double> pre(static_cast<std::size_t>(nx + 1) * (ny + 1), 0.0);
  auto at_pre = [&](int i, int j) -> double& {
    return pre[static_cast<std::size_t>(i) * (ny + 1) + j];
  };
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      at_pre(i + 1, j + 1) = cell(i, j) + at_pre(i, j + 1) + at_pre(i + 1, j) - at_pre(i, j);

  // Exact CDF of the piecewise-constant density at an arbitrary point.
  auto grid_cdf = [&](double x, double y) -> QuadrantCdf {
    const double gx = std::clamp(x / grid.dx, 0.0, static_cast<double>(nx));
    const double gy = std::clamp((y - grid.y_lo) / grid.dy, 0.0, static_cast<double>(ny));
    const int i0 = std::min(static_cast<int>(gx), nx - 1);
    const int j0 = std::min(static_cast<int>(gy), ny - 1);
    const double fx = gx - i0, fy = gy - j0;
    const double colp = at_pre(i0 + 1, j0) - at_pre(i0, j0);  // column i0, rows < j0
    const double rowp = at_pre(i0, j0 + 1) - at_pre(i0, j0);  // row j0, cols < i0
    const double f = at_pre(i0, j0) + fx * colp + fy * rowp + fx * fy * cell(i0, j0);
    const double mx = at_pre(i0, ny) + fx * (at_pre(i0 + 1, ny) - at_pre(i0, ny));
    const double my = at_pre(nx, j0) + fy * (at_pre(nx, j0 + 1) - at_pre(nx, j0));
    return {f, mx, my};
  };

  std::vector<Point> corners = a.points;
  corners.reserve(corners.size() + static_cast<std::size_t>(nx + 1) * (ny + 1));
  for (int i = 0; i <= nx; ++i)
    for (int j = 0; j <= ny; ++j)
      corners.emplace_back(i * grid.dx, grid.y_lo + j * grid.dy);
  cap_corners(corners, corner_cap);

  const auto sample_side = sample_cdfs(a, corners);
  std::vector<QuadrantCdf> grid_side(corners.size());
  for (std::size_t c = 0; c < corners.size(); ++c)
    grid_side[c] = grid_cdf(corners[c].first, corners[c].second);
  return max_orientation_gap(sample_side, grid_side);
}

double combine_censored_mean(long n_exited, double mean_exited, long n_censored,
                             double tail_mean) {
  if (n_exited + n_censored <= 0) throw EmptySample("no agents to average");
  return (n_exited * mean_exited + n_censored * tail_mean) /
         static_cast<double>(n_exited + n_censored);
}

MassCurve empirical_mass_curve(const std::vector<RunRecord>& records,
                               const std::vector<double>& t_grid) {
  MassCurve curve;
  curve.samples.reserve(t_grid.size());
  for (double t : t_grid) {
    double frac = 0.0;
    long runs = 0;
    for (const auto& rec : records) {
      const long n = static_cast<long>(rec.exit_times.size()) + rec.censored;
      if (n == 0) continue;
      long exited = 0;
      for (const auto& [id, time] : rec.exit_times) {
        (void)id;
        if (time <= t) ++exited;
      }
      frac += 1.0 - static_cast<double>(exited) / n;
      ++runs;
    }
    curve.samples.emplace_back(t, runs > 0 ? frac / runs : 0.0);
  }
  return curve;
}

CensoredMeanResult censored_mean_exit(const std::vector<RunRecord>& records, double t_end) {
  CensoredMeanResult res;
  double sum = 0.0;
  for (const auto& rec : records) {
    for (const auto& [id, time] : rec.exit_times) {
      (void)id;
      sum += time;
      ++res.n_exited;
    }
    res.n_censored += rec.censored;
  }
  if (res.n_exited == 0) throw EmptySample("censored mean needs at least one exit");
  const double mean_exited = sum / res.n_exited;
  if (res.n_censored == 0) {
    res.mean = mean_exited;
    return res;
  }

  // Tail rate from the late-time mass decay: least squares of log m(t) on a
  // uniform scan of [t_end/2, t_end], keeping points with m > 0.
  constexpr int kFitPoints = 129;
  std::vector<double> ts(kFitPoints);
  for (int i = 0; i < kFitPoints; ++i)
    ts[i] = t_end / 2.0 + (t_end / 2.0) * i / (kFitPoints - 1);
  const MassCurve m = empirical_mass_curve(records, ts);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  long k = 0;
  for (const auto& [t, mt] : m.samples) {
    if (mt <= 0.0) continue;
    const double y = std::log(mt);
    sx += t;
    sy += y;
    sxx += t * t;
    sxy += t * y;
    ++k;
  }
  if (k < 2) throw DegenerateFit("not enough positive mass points in the fit window");
  const double denom = k * sxx - sx * sx;
  if (denom <= 0.0) throw DegenerateFit("fit window has no time spread");
  const double slope = (k * sxy - sx * sy) / denom;
  if (!(slope < 0.0)) throw DegenerateFit("mass does not decay over the fit window");
  res.fit_rate = -slope;
  res.mean = combine_censored_mean(res.n_exited, mean_exited, res.n_censored,
                                   t_end + 1.0 / res.fit_rate);
  return res;
}

}  // namespace vjsim
