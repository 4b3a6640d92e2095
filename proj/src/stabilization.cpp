#include "stabpade/stabilization.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>

#include "stabpade/eigensolver.hpp"
#include "stabpade/errors.hpp"
#include "stabpade/parallel.hpp"

namespace stabpade {

std::string to_string(DataSource source) {
  return source == DataSource::computed ? "computed" : "imported";
}

std::string to_string(TrackingMethod method) {
  switch (method) {
    case TrackingMethod::overlap:
      return "overlap";
    case TrackingMethod::imported:
      return "imported";
    case TrackingMethod::nearest_energy:
      return "nearest_energy";
  }
  return "unknown";
}

DataSource data_source_from_string(const std::string& name) {
  if (name == "computed") return DataSource::computed;
  if (name == "imported") return DataSource::imported;
  throw ValidationError("source", "unknown source '" + name + "'");
}

TrackingMethod tracking_method_from_string(const std::string& name) {
  if (name == "overlap") return TrackingMethod::overlap;
  if (name == "imported") return TrackingMethod::imported;
  if (name == "nearest_energy") return TrackingMethod::nearest_energy;
  throw ValidationError("tracking", "unknown tracking method '" + name + "'");
}

void StabilizationData::validate(std::size_t min_points) const {
  if (alpha_grid.size() < std::max<std::size_t>(min_points, 2))
    throw ValidationError("alpha_grid", "needs at least " + std::to_string(std::max<std::size_t>(min_points, 2)) + " points");
  for (std::size_t k = 0; k < alpha_grid.size(); ++k) {
    if (!std::isfinite(alpha_grid[k])) throw ValidationError("alpha_grid", "non-finite value");
    if (k > 0 && !(alpha_grid[k] > alpha_grid[k - 1]))
      throw ValidationError("alpha_grid", "must be strictly increasing");
  }
  if (curves.empty()) throw ValidationError("curves", "no curves");
  for (std::size_t c = 0; c < curves.size(); ++c) {
    if (curves[c].size() != alpha_grid.size())
      throw ValidationError("curves", "curve " + std::to_string(c) + " has " +
                                          std::to_string(curves[c].size()) + " values, grid has " +
                                          std::to_string(alpha_grid.size()));
    for (double e : curves[c])
      if (!std::isfinite(e)) throw ValidationError("curves", "non-finite energy in curve " + std::to_string(c));
  }
  if (tracking_quality.size() + 1 != alpha_grid.size())
    throw ValidationError("tracking_quality", "needs one entry per grid step");
  for (double q : tracking_quality)
    if (!(q > 0.0 && q <= 1.0)) throw ValidationError("tracking_quality", "must lie in (0, 1]");
}

std::vector<double> linear_grid(double start, double stop, int count) {
  if (count < 2) throw ValidationError("grid", "count must be >= 2");
  if (!std::isfinite(start) || !std::isfinite(stop) || !(stop > start))
    throw ValidationError("grid", "stop must exceed start");
  std::vector<double> g(count);
  for (int k = 0; k < count; ++k) g[k] = start + (stop - start) * k / (count - 1);
  g.back() = stop;
  return g;
}

StabilizationData sweep(const ModelSpec& model, const BasisSet& basis,
                        const std::vector<double>& alpha_grid, const SweepOptions& options) {
  model.validate();
  const std::size_t G = alpha_grid.size();
  if (G < 10) throw ValidationError("alpha_grid", "needs at least 10 points");
  for (std::size_t k = 0; k < G; ++k) {
    if (!(alpha_grid[k] > 0.0)) throw ValidationError("alpha_grid", "alpha must be > 0");
    if (k > 0 && !(alpha_grid[k] > alpha_grid[k - 1]))
      throw ValidationError("alpha_grid", "must be strictly increasing");
  }
  const int n = basis.size();
  const int K = options.tracked_roots > 0 ? std::min(options.tracked_roots, n) : n;

  std::vector<RealEigenSet> spectra(G);
  parallel_for(G, [&](std::size_t k) {
    spectra[k] = eig_real(scaled_matrices(model, basis, ScalingParameter{alpha_grid[k], 0.0}));
  });

  std::optional<MatrixC> S;
  if (!basis.orthonormal()) S = basis.overlap().cast<cplx>();

  StabilizationData data;
  data.alpha_grid = alpha_grid;
  data.curves.assign(K, std::vector<double>(G));
  data.tracking_quality.resize(G - 1);
  data.source = DataSource::computed;
  data.tracking = TrackingMethod::overlap;

  MatrixC tracked = spectra[0].vectors.leftCols(K).cast<cplx>();
  for (int c = 0; c < K; ++c) data.curves[c][0] = spectra[0].values[c];
  for (std::size_t k = 1; k < G; ++k) {
    const MatrixC current = spectra[k].vectors.cast<cplx>();
    const OverlapMatching m = match_by_overlap(tracked, current, S);
    data.tracking_quality[k - 1] = std::max(m.worst, 1e-300);
    if (m.worst < options.min_quality) {
      std::ostringstream os;
      os << "root tracking ambiguous between alpha = " << alpha_grid[k - 1] << " and " << alpha_grid[k]
         << " (worst overlap " << m.worst << "); use a denser alpha grid";
      throw TrackingError(alpha_grid[k], m.worst, os.str());
    }
    for (int c = 0; c < K; ++c) {
      data.curves[c][k] = spectra[k].values[m.permutation[c]];
      tracked.col(c) = current.col(m.permutation[c]);
    }
  }
  return data;
}

std::vector<int> StableWindow::point_indices() const {
  std::vector<int> idx(point_count());
  std::iota(idx.begin(), idx.end(), first_index);
  return idx;
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    std::nth_element(v.begin(), v.begin() + mid - 1, v.end());
    m = 0.5 * (m + v[mid - 1]);
  }
  return m;
}

// Vertex of the parabola through three (x, y) points; nullopt if not convex.
std::optional<std::pair<double, double>> parabola_min(double x0, double y0, double x1, double y1,
                                                      double x2, double y2) {
  const double d01 = (y1 - y0) / (x1 - x0);
  const double d12 = (y2 - y1) / (x2 - x1);
  const double a = (d12 - d01) / (x2 - x0);
  if (!(a > 0.0)) return std::nullopt;
  const double b = d01 - a * (x0 + x1);
  const double xv = std::clamp(-b / (2.0 * a), x0, x2);
  const double y = y0 + d01 * (xv - x0) + a * (xv - x0) * (xv - x1);
  return std::make_pair(xv, y);
}

}  // namespace

WindowReport detect_windows(const StabilizationData& data, const WindowOptions& options) {
  data.validate();
  if (options.min_points < 1) throw ValidationError("min_points", "must be >= 1");
  if (!(options.flatness_tol >= 0.0)) throw ValidationError("flatness_tol", "must be >= 0");
  if (options.guard_margin < 0) throw ValidationError("guard_margin", "must be >= 0");

  WindowReport report;
  const int G = static_cast<int>(data.grid_size());
  const int K = static_cast<int>(data.root_count());
  const auto& a = data.alpha_grid;

  // Energy-ordered levels at every grid point.
  std::vector<std::vector<int>> order(G, std::vector<int>(K));
  for (int k = 0; k < G; ++k) {
    std::iota(order[k].begin(), order[k].end(), 0);
    std::stable_sort(order[k].begin(), order[k].end(),
                     [&](int x, int y) { return data.curves[x][k] < data.curves[y][k]; });
  }
  auto gap = [&](int n, int k) {
    return data.curves[order[k][n + 1]][k] - data.curves[order[k][n]][k];
  };

  std::vector<double> all_gaps;
  all_gaps.reserve(static_cast<std::size_t>(std::max(K - 1, 0)) * G);
  for (int n = 0; n + 1 < K; ++n)
    for (int k = 0; k < G; ++k) all_gaps.push_back(gap(n, k));
  report.gap_tol = options.gap_tol > 0.0 ? options.gap_tol : 5.0 * median(all_gaps);

  for (int n = 0; n + 1 < K; ++n) {
    for (int k = 1; k + 1 < G; ++k) {
      const double g0 = gap(n, k - 1), g1 = gap(n, k), g2 = gap(n, k + 1);
      if (!(g1 < g0 && g1 <= g2 && g1 < report.gap_tol && g1 > 0.0)) continue;
      AvoidedCrossing x;
      x.lower_level = n;
      x.upper_level = n + 1;
      x.curve_a = order[k][n];
      x.curve_b = order[k][n + 1];
      x.grid_index = k;
      x.alpha_at_min_gap = a[k];
      x.min_gap = g1;
      // Two-level crossings have a quadratic squared gap; refine on it.
      if (auto v = parabola_min(a[k - 1], g0 * g0, a[k], g1 * g1, a[k + 1], g2 * g2);
          v && v->second > 0.0) {
        x.alpha_at_min_gap = v->first;
        x.min_gap = std::sqrt(v->second);
      }
      report.crossings.push_back(x);
    }
  }
  std::stable_sort(report.crossings.begin(), report.crossings.end(),
                   [](const AvoidedCrossing& p, const AvoidedCrossing& q) {
                     if (p.grid_index != q.grid_index) return p.grid_index < q.grid_index;
                     return p.lower_level < q.lower_level;
                   });

  const int guard = options.guard_margin;
  for (int c = 0; c < K; ++c) {
    const auto& e = data.curves[c];
    std::vector<bool> blocked(G, false);
    for (const auto& x : report.crossings) {
      if (!x.involves(c)) continue;
      const auto [lo, hi] = guard_support(x, a, guard);
      for (int i = lo; i <= hi; ++i) blocked[i] = true;
    }
    std::vector<double> slope(G > 1 ? G - 1 : 0);
    for (int i = 0; i + 1 < G; ++i) slope[i] = std::abs((e[i + 1] - e[i]) / (a[i + 1] - a[i]));

    int start = -1;
    auto close_run = [&](int first, int last) {
      if (first < 0 || last - first + 1 < options.min_points) return;
      StableWindow w;
      w.root_index = c;
      w.first_index = first;
      w.last_index = last;
      w.alpha_lo = a[first];
      w.alpha_hi = a[last];
      double flat = 0.0, sum = 0.0;
      for (int i = first; i < last; ++i) flat = std::max(flat, slope[i]);
      for (int i = first; i <= last; ++i) sum += e[i];
      w.flatness = flat;
      w.mean_energy = sum / (last - first + 1);
      report.windows.push_back(w);
    };
    for (int i = 0; i < G; ++i) {
      const bool usable = !blocked[i];
      if (!usable) {
        close_run(start, i - 1);
        start = -1;
        continue;
      }
      if (start < 0) {
        start = i;
      } else if (slope[i - 1] > options.flatness_tol) {
        close_run(start, i - 1);
        start = i;
      }
    }
    close_run(start, G - 1);
  }
  std::stable_sort(report.windows.begin(), report.windows.end(),
                   [](const StableWindow& p, const StableWindow& q) {
                     if (p.flatness != q.flatness) return p.flatness < q.flatness;
                     if (p.root_index != q.root_index) return p.root_index < q.root_index;
                     return p.first_index < q.first_index;
                   });

  if (report.windows.empty()) {
    std::ostringstream os;
    os << "no stable window: no run of >= " << options.min_points << " points with |dE/dalpha| <= "
       << options.flatness_tol << " clear of " << report.crossings.size()
       << " detected crossings (guard " << guard << "); try a larger flatness_tol or a denser grid";
    report.diagnostics.push_back(os.str());
  }
  return report;
}

std::pair<int, int> guard_support(const AvoidedCrossing& crossing, const std::vector<double>& alpha_grid,
                                  int guard) {
  const int G = static_cast<int>(alpha_grid.size());
  const int k = std::clamp(crossing.grid_index, 1, G - 2);
  const double step = 0.5 * (alpha_grid[k + 1] - alpha_grid[k - 1]);
  const double ac = crossing.alpha_at_min_gap;
  const double lo = ac - guard * step * (1.0 + 1e-12), hi = ac + guard * step * (1.0 + 1e-12);
  const auto first_ge = [&](double v) {
    return static_cast<int>(std::lower_bound(alpha_grid.begin(), alpha_grid.end(), v) - alpha_grid.begin());
  };
  const auto last_le = [&](double v) {
    return static_cast<int>(std::upper_bound(alpha_grid.begin(), alpha_grid.end(), v) - alpha_grid.begin()) - 1;
  };
  const int floor_idx = std::max(0, last_le(ac));
  const int ceil_idx = std::min(G - 1, first_ge(ac));
  return {std::max(0, std::min(first_ge(lo), floor_idx)), std::min(G - 1, std::max(last_le(hi), ceil_idx))};
}

std::vector<AvoidedCrossing> crossings_in_range(const std::vector<AvoidedCrossing>& crossings,
                                                const std::vector<double>& alpha_grid, int curve,
                                                int first, int last, int guard) {
  std::vector<AvoidedCrossing> hits;
  for (const auto& x : crossings) {
    if (!x.involves(curve)) continue;
    const auto [lo, hi] = guard_support(x, alpha_grid, guard);
    if (lo <= last && hi >= first) hits.push_back(x);
  }
  return hits;
}

}  // namespace stabpade
