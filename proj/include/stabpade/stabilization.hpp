#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "stabpade/model.hpp"

namespace stabpade {

enum class DataSource { computed, imported };
enum class TrackingMethod { overlap, imported, nearest_energy };

std::string to_string(DataSource source);
std::string to_string(TrackingMethod method);
DataSource data_source_from_string(const std::string& name);
TrackingMethod tracking_method_from_string(const std::string& name);

// Real eigenvalue curves E_n(alpha) on a grid (theta = 0).
struct StabilizationData {
  std::vector<double> alpha_grid;               // strictly increasing, >= 10 points
  std::vector<std::vector<double>> curves;      // curves[root][grid index]
  std::vector<double> tracking_quality;         // per step, size grid - 1, in (0, 1]
  DataSource source = DataSource::computed;
  TrackingMethod tracking = TrackingMethod::overlap;
  std::map<std::string, std::string> metadata;  // free-form annotations (imports)

  std::size_t grid_size() const noexcept { return alpha_grid.size(); }
  std::size_t root_count() const noexcept { return curves.size(); }
  // min_points is 10 for analysis; imports accept shorter grids.
  void validate(std::size_t min_points = 10) const;

  bool operator==(const StabilizationData&) const = default;
};

struct SweepOptions {
  int tracked_roots = 0;       // 0 tracks every root
  double min_quality = 0.5;    // below this a TrackingError is raised
};

// Sweeps alpha at theta = 0 and tracks roots by maximal eigenvector overlap.
StabilizationData sweep(const ModelSpec& model, const BasisSet& basis,
                        const std::vector<double>& alpha_grid, const SweepOptions& options = {});

// Evenly spaced grid from "start:stop:count" style parameters.
std::vector<double> linear_grid(double start, double stop, int count);

struct AvoidedCrossing {
  int lower_level = 0;      // energy-ordered level n; the pair is (n, n+1)
  int upper_level = 1;
  int curve_a = 0;          // tracked curves occupying levels n and n+1 there
  int curve_b = 1;
  int grid_index = 0;       // grid point of the sampled gap minimum
  double alpha_at_min_gap = 0.0;
  double min_gap = 0.0;

  bool involves(int curve) const noexcept { return curve == curve_a || curve == curve_b; }

  bool operator==(const AvoidedCrossing&) const = default;
};

struct StableWindow {
  int root_index = 0;
  double alpha_lo = 0.0;
  double alpha_hi = 0.0;
  int first_index = 0;      // contiguous grid indices [first_index, last_index]
  int last_index = 0;
  double flatness = 0.0;    // max |dE/dalpha| over consecutive points
  double mean_energy = 0.0;

  int point_count() const noexcept { return last_index - first_index + 1; }
  std::vector<int> point_indices() const;

  bool operator==(const StableWindow&) const = default;
};

struct WindowOptions {
  double flatness_tol = 1e-2;
  int min_points = 12;
  int guard_margin = 2;
  double gap_tol = 0.0;       // <= 0 selects 5x the median adjacent gap

  bool operator==(const WindowOptions&) const = default;
};

struct WindowReport {
  std::vector<StableWindow> windows;   // flatness ascending
  std::vector<AvoidedCrossing> crossings;
  double gap_tol = 0.0;                // threshold actually used
  std::vector<std::string> diagnostics;

  bool operator==(const WindowReport&) const = default;
};

WindowReport detect_windows(const StabilizationData& data, const WindowOptions& options = {});

// Grid indices [begin, end] within guard grid steps of alpha_at_min_gap.  The
// two points bracketing the crossing are always included.
std::pair<int, int> guard_support(const AvoidedCrossing& crossing, const std::vector<double>& alpha_grid,
                                  int guard);

// Crossings of curve whose guard support overlaps grid indices [first, last].
std::vector<AvoidedCrossing> crossings_in_range(const std::vector<AvoidedCrossing>& crossings,
                                                const std::vector<double>& alpha_grid, int curve,
                                                int first, int last, int guard);

}  // namespace stabpade
