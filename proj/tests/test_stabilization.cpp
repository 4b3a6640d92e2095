#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "stabpade/errors.hpp"
#include "stabpade/stabilization.hpp"

using namespace stabpade;

namespace {

StabilizationData synthetic(const std::vector<double>& grid, std::vector<std::vector<double>> curves) {
  StabilizationData d;
  d.alpha_grid = grid;
  d.curves = std::move(curves);
  d.tracking_quality.assign(grid.size() - 1, 1.0);
  d.source = DataSource::imported;
  d.tracking = TrackingMethod::imported;
  return d;
}

StabilizationData hyperbolic(const std::vector<double>& grid, double center, double half_gap) {
  std::vector<double> lo, hi;
  for (double a : grid) {
    const double r = std::sqrt((a - center) * (a - center) + half_gap * half_gap);
    lo.push_back(-r);
    hi.push_back(r);
  }
  return synthetic(grid, {lo, hi});
}

const StabilizationData& benchmark_sweep() {
  static const StabilizationData data =
      sweep(benchmark_model(), build_basis(ho_basis(60)), linear_grid(0.6, 1.6, 101));
  return data;
}

}  // namespace

TEST_CASE("harmonic curves have their minimum at alpha = 1") {
  const auto grid = linear_grid(0.95, 1.05, 101);
  const auto data = sweep(harmonic_model(), build_basis(ho_basis(40)), grid);
  for (int n = 0; n <= 5; ++n) {
    const auto& e = data.curves[n];
    // Near alpha = 1 the curve is flat to roundoff, so the grid minimum is
    // checked as: alpha = 1 attains it, and every other point lies above.
    const double at_one = e[50];
    CHECK(std::abs(grid[50] - 1.0) < 1e-15);
    CHECK(std::abs(at_one - (n + 0.5)) < 1e-10);
    for (std::size_t k = 0; k < grid.size(); ++k) CHECK(e[k] >= at_one - 1e-12);
  }
}

TEST_CASE("kinetic-only curves scale as alpha^-2") {
  const auto grid = linear_grid(0.5, 1.5, 11);  // contains alpha = 1 at index 5
  const auto data = sweep(free_particle_model(), build_basis(ho_basis(20)), grid);
  for (const auto& e : data.curves)
    for (std::size_t k = 0; k < grid.size(); ++k)
      CHECK(std::abs(e[k] - e[5] / (grid[k] * grid[k])) <= 1e-12 * std::abs(e[5]) / (grid[k] * grid[k]));
}

TEST_CASE("sweep validates its grid and reports tracking ambiguity") {
  const BasisSet basis = build_basis(ho_basis(10));
  std::vector<double> bad = linear_grid(0.6, 1.6, 12);
  std::swap(bad[3], bad[4]);
  CHECK_THROWS_AS(sweep(benchmark_model(), basis, bad), ValidationError);
  CHECK_THROWS_AS(sweep(benchmark_model(), basis, linear_grid(0.6, 1.6, 9)), ValidationError);
  SweepOptions strict;
  strict.min_quality = 0.999999;
  CHECK_THROWS_AS(sweep(benchmark_model(), build_basis(ho_basis(40)), linear_grid(0.6, 1.6, 11), strict),
                  TrackingError);
}

TEST_CASE("benchmark sweep shows one flat resonance curve among steep continuum curves") {
  const auto& data = benchmark_sweep();
  REQUIRE_NOTHROW(data.validate());
  for (double q : data.tracking_quality) CHECK(q >= 0.5);
  const auto report = detect_windows(data);
  // Windows above threshold (0.8) and below the barrier top are all on the resonance plateau.
  int resonance_windows = 0;
  for (const auto& w : report.windows) {
    if (w.mean_energy <= 0.8 || w.mean_energy >= 2.0) continue;
    ++resonance_windows;
    CHECK(std::abs(w.mean_energy - 1.421) < 2e-3);
    CHECK(w.flatness < 1e-2);
  }
  CHECK(resonance_windows >= 1);
  // The longest resonance window: continuum neighbours vary by > 0.1 across it.
  const StableWindow* best = nullptr;
  for (const auto& w : report.windows)
    if (std::abs(w.mean_energy - 1.421) < 2e-3 && (!best || w.point_count() > best->point_count())) best = &w;
  REQUIRE(best != nullptr);
  CHECK(best->point_count() >= 20);
  // Inside it exactly one curve sits on the plateau.
  for (int k = best->first_index; k <= best->last_index; ++k) {
    int on_plateau = 0;
    for (const auto& c : data.curves)
      if (std::abs(c[k] - 1.42097) < 2e-3) ++on_plateau;
    CHECK(on_plateau == 1);
  }
  // Over the near-flat segment (hull of the resonance windows) the continuum
  // neighbours of the plateau vary by > 0.1.
  int lo = best->first_index, hi = best->last_index;
  for (const auto& w : report.windows)
    if (std::abs(w.mean_energy - 1.421) < 2e-3) {
      lo = std::min(lo, w.first_index);
      hi = std::max(hi, w.last_index);
    }
  for (int k = lo; k <= hi; ++k) {
    double below = -1e300, above = 1e300;
    int c_below = -1, c_above = -1;
    for (std::size_t c = 0; c < data.root_count(); ++c) {
      const double e = data.curves[c][k];
      if (std::abs(e - 1.42097) < 2e-3) continue;
      if (e < 1.42097 && e > below && e > 0.8) below = e, c_below = static_cast<int>(c);
      if (e > 1.42097 && e < above) above = e, c_above = static_cast<int>(c);
    }
    for (int c : {c_below, c_above}) {
      if (c < 0) continue;
      const auto [mn, mx] = std::minmax_element(data.curves[c].begin() + lo, data.curves[c].begin() + hi + 1);
      CHECK(*mx - *mn > 0.1);
    }
  }
}

TEST_CASE("hyperbolic avoided crossing is located and its gap measured") {
  for (int count : {101, 100, 37}) {
    const auto grid = linear_grid(0.5, 1.5, count);
    const double step = grid[1] - grid[0];
    const auto report = detect_windows(hyperbolic(grid, 1.0, 1e-2));
    REQUIRE(report.crossings.size() == 1);
    const auto& x = report.crossings[0];
    CHECK(x.lower_level == 0);
    CHECK(x.upper_level == 1);
    CHECK(std::abs(x.alpha_at_min_gap - 1.0) <= step);
    CHECK(std::abs(x.min_gap - 2e-2) <= 1e-6);
  }
}

TEST_CASE("constant curve gives one window spanning the grid") {
  const auto grid = linear_grid(0.6, 1.6, 30);
  const auto report = detect_windows(synthetic(grid, {std::vector<double>(30, 1.25)}));
  REQUIRE(report.windows.size() == 1);
  CHECK(report.windows[0].first_index == 0);
  CHECK(report.windows[0].last_index == 29);
  CHECK(report.windows[0].flatness == 0.0);
  CHECK(report.crossings.empty());
}

TEST_CASE("no window yields an empty list with a diagnostic") {
  const auto grid = linear_grid(0.6, 1.6, 30);
  std::vector<double> steep;
  for (double a : grid) steep.push_back(5.0 * a);
  const auto report = detect_windows(synthetic(grid, {steep}));
  CHECK(report.windows.empty());
  CHECK_FALSE(report.diagnostics.empty());
}

TEST_CASE("windows never touch the guarded support of their curve's crossings") {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> where(0.7, 1.5), gap(1e-3, 3e-2);
  const auto grid = linear_grid(0.6, 1.6, 121);
  for (int trial = 0; trial < 25; ++trial) {
    // a flat level crossed by two sloped levels, plus a far-away flat level
    const double c1 = where(rng), c2 = where(rng), g1 = gap(rng);
    std::vector<std::vector<double>> curves(4, std::vector<double>(grid.size()));
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double a = grid[k];
      // eigenvalues of [[0, g1],[g1, -(a-c1)]] style couplings, sorted
      const double d1 = -(a - c1), d2 = -(a - c2) + 0.5;
      const double e1 = 0.5 * (d1 - std::sqrt(d1 * d1 + 4 * g1 * g1));
      const double e2 = 0.5 * (d1 + std::sqrt(d1 * d1 + 4 * g1 * g1));
      curves[0][k] = e1;
      curves[1][k] = e2;
      curves[2][k] = d2;
      curves[3][k] = 10.0;
    }
    const auto data = synthetic(grid, curves);
    WindowOptions options;
    options.min_points = 5;
    const auto report = detect_windows(data, options);
    for (const auto& w : report.windows) {
      CHECK(crossings_in_range(report.crossings, data.alpha_grid, w.root_index, w.first_index, w.last_index,
                               options.guard_margin)
                .empty());
      CHECK(w.point_count() >= options.min_points);
      // independent statement of the guard: no crossing within 2 steps of any window point
      const double step = grid[1] - grid[0];
      for (const auto& x : report.crossings) {
        if (!x.involves(w.root_index)) continue;
        for (int i = w.first_index; i <= w.last_index; ++i)
          CHECK(std::abs(grid[i] - x.alpha_at_min_gap) > 2.0 * step);
      }
    }
    CHECK(std::is_sorted(report.windows.begin(), report.windows.end(),
                         [](const StableWindow& a, const StableWindow& b) { return a.flatness < b.flatness; }));
    // deterministic
    const auto again = detect_windows(data, options);
    CHECK(again.windows == report.windows);
    CHECK(again.crossings == report.crossings);
  }
}

TEST_CASE("benchmark windows exclude all crossings of the resonance curve") {
  const auto& data = benchmark_sweep();
  const auto report = detect_windows(data);
  for (const auto& w : report.windows)
    CHECK(crossings_in_range(report.crossings, data.alpha_grid, w.root_index, w.first_index, w.last_index, 2).empty());
  for (const auto& x : report.crossings) {
    CHECK(x.min_gap > 0.0);
    CHECK(x.alpha_at_min_gap > data.alpha_grid.front());
    CHECK(x.alpha_at_min_gap < data.alpha_grid.back());
  }
}
