#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stabpade/session.hpp"

// The analysis steps as operations on a Session.  The CLI and the HTTP
// service both call these, so equal inputs give equal records and bytes.

namespace stabpade {

// Every tunable, printable as "key = value" lines and readable back.
struct Config {
  SweepOptions sweep;
  WindowOptions windows;
  int fit_order = kDefaultOrder;
  StationaryOptions stationary;
  UcsStationaryOptions ucs;
  double crosscheck_tolerance = 5e-4;  // reported distance above this is flagged
  std::string landscape_theta = "0:0.7853981633974483:20";
  int landscape_alpha_points = 36;
  unsigned threads = 0;

  static const std::vector<std::string>& keys();
  std::string get(const std::string& key) const;
  void set(const std::string& key, const std::string& value);  // ValidationError on bad key or value
};

std::string show_config(const Config& config);
// '#' comments and blank lines allowed; errors carry the line number.
Config parse_config(const std::string& text, Config base = {});
Config load_config(const std::string& path, Config base = {});

// "start:stop:count"
std::vector<double> parse_grid(const std::string& text);
std::string grid_to_string(const std::vector<double>& grid);

// "benchmark", "harmonic", "free", "gaussian_well_barrier:J,lambda",
// "custom_polynomial_gaussian:gamma,offset,c0,c1,..."
ModelSpec parse_model(const std::string& text);
// "ho:N[:omega]" or "etg:N:beta0:ratio"
BasisSpec parse_basis(const std::string& text);

// A fit asked for over points guarded by a detected avoided crossing.
class CrossingGuardError : public ValidationError {
 public:
  CrossingGuardError(std::vector<AvoidedCrossing> crossings, const std::string& what)
      : ValidationError("point_indices", what), crossings_(std::move(crossings)) {}
  const std::vector<AvoidedCrossing>& crossings() const noexcept { return crossings_; }

 private:
  std::vector<AvoidedCrossing> crossings_;
};

// Computed sessions only.  A session holds one stabilization; repeating the
// same grid returns it, a different grid is a validation error.
StabilizationRecord stabilize(Session& session, const std::vector<double>& alpha_grid, const Config& config);

// Appends the detection and its windows (ids stable under repetition).
DetectionRecord detect(Session& session, const Config& config);

struct FitRequest {
  std::string window_id;
  std::vector<int> point_indices;  // empty: evenly subsample the window
  std::optional<int> order;        // empty: config.fit_order
  bool force = false;              // fit even over a guarded crossing
};
FitRecord fit_window(Session& session, const FitRequest& request, const Config& config);

TrajectoryRecord add_trajectory(Session& session, const std::string& fit_id, TrajectoryKind kind,
                                double fixed_value, const std::vector<double>& grid);

struct StationaryOutcome {
  std::vector<StationaryRecord> points;
  std::vector<std::string> diagnostics;
  LandscapeRecord landscape;  // |C'| over the seed grid
};
// region empty: the default region of the fit.
StationaryOutcome find_stationary_points(Session& session, const std::string& fit_id,
                                         const std::optional<SeedRegion>& region, const Config& config);

CrosscheckRecord crosscheck(Session& session, const std::string& stationary_id, const Config& config);

LandscapeRecord add_pade_landscape(Session& session, const std::string& fit_id, const std::vector<double>& alpha_grid,
                                   const std::vector<double>& theta_grid);
LandscapeRecord add_ucs_landscape(Session& session, const std::vector<double>& alpha_grid,
                                  const std::vector<double>& theta_grid, cplx target, const Config& config);

// alpha over the fit's default seed region, config.landscape_alpha_points values
std::vector<double> landscape_alpha_grid(const FitRecord& fit, const Config& config);
// A stored landscape computed from exactly these inputs.
const LandscapeRecord* find_landscape(const Session& session, const std::string& kind, const std::string& parent,
                                      cplx target, const std::vector<double>& alpha_grid,
                                      const std::vector<double>& theta_grid);

// Branch point behind crossing index k of a detection (computed sessions).
BranchPointRecord add_branch_point(Session& session, const std::string& detection_id, int crossing_index);

// Lowest Pade error, then smallest |eta|.
const StationaryRecord* best_stationary(const std::vector<StationaryRecord>& points);

// Steps 1 to 9: stabilize, detect, fit the flattest window above the model
// threshold (any window for models without one, or window_id),
// search stationary points.  NumericError when none is found.
StationaryRecord resonance(Session& session, const std::vector<double>& alpha_grid, const Config& config,
                           const std::optional<std::string>& window_id = std::nullopt);

// Plain-text reports; numbers in shortest round-trip form.
std::string render_stationary(const StationaryRecord& record, WidthConvention convention);
std::string render_crosscheck(const CrosscheckRecord& record, const StationaryRecord& pade, double tolerance);

}  // namespace stabpade
