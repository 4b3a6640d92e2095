#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stabpade/errors.hpp"
#include "stabpade/schlessinger.hpp"

namespace stabpade {

enum class TrajectoryKind { theta_trajectory, alpha_trajectory };
std::string to_string(TrajectoryKind kind);
TrajectoryKind trajectory_kind_from_string(const std::string& name);

// Pole markers are dropped from grid/energies and listed in pole_values.
struct Trajectory {
  TrajectoryKind kind = TrajectoryKind::theta_trajectory;
  double fixed_value = 0.0;
  std::vector<double> grid;
  std::vector<cplx> energies;
  std::vector<double> pade_errors;
  std::vector<double> pole_values;

  cplx eta_at(std::size_t k) const;
  // Segment [k, k+1] with the smallest |E_{k+1} - E_k|; -1 when < 2 points.
  int slowest_segment() const;

  bool operator==(const Trajectory&) const = default;
};

class DegenerateTrajectoryError : public NumericError {
 public:
  using NumericError::NumericError;
};

Trajectory theta_trajectory(const ContinuedFraction& cf, double alpha, const std::vector<double>& theta_grid);
Trajectory alpha_trajectory(const ContinuedFraction& cf, double theta, const std::vector<double>& alpha_grid);

enum class WidthConvention { gamma, half_gamma };  // Gamma = -2 Im E, or -Im E
std::string to_string(WidthConvention convention);
WidthConvention width_convention_from_string(const std::string& name);
double width_of(cplx energy, WidthConvention convention);

struct StationaryPoint {
  ScalingParameter eta_star;
  cplx energy{};
  double width = 0.0;
  double derivative_norm = 0.0;  // |dC/deta|
  double pade_error = 0.0;
  std::string window_id;
  Trajectory theta_cut;          // centred on eta_star
  Trajectory alpha_cut;

  bool operator==(const StationaryPoint&) const = default;
};

struct SeedRegion {
  double alpha_lo = 0.0, alpha_hi = 0.0;
  double theta_lo = 0.0, theta_hi = kMaxTheta;

  void validate() const;
  bool contains(cplx eta) const;

  bool operator==(const SeedRegion&) const = default;
};

// alpha over the fit abscissae extended by half their span on each side
// (twice the window span in total), theta over [0, pi/4].
SeedRegion default_seed_region(const ContinuedFraction& cf);

enum class StationaryStrategy { newton, alternating };
std::string to_string(StationaryStrategy strategy);
StationaryStrategy stationary_strategy_from_string(const std::string& name);

struct StationaryOptions {
  StationaryStrategy strategy = StationaryStrategy::newton;
  int seeds_alpha = 12;
  int seeds_theta = 10;
  int max_newton_steps = 60;
  double dedup_distance = 1e-6;
  double error_tol = 1e-3;       // pade_error filter
  double derivative_tol = 1e-8;  // |C'| <= tol * max(1, |E|)
  double scan_tol = 1e-6;        // alternating fallback: relative eta change between rounds
  int trajectory_half_points = 20;
  double trajectory_theta_step = 0.01;
  double trajectory_alpha_step = 0.01;  // relative
  WidthConvention width = WidthConvention::gamma;
};

// |dE/dtheta| and |dE/dalpha| sampled on an (alpha, theta) grid; NaN marks gaps.
struct DerivativeLandscape {
  std::vector<double> alpha_grid;
  std::vector<double> theta_grid;
  std::vector<std::vector<double>> d_theta;  // [alpha index][theta index]
  std::vector<std::vector<double>> d_alpha;

  struct Cell {
    int alpha_index = -1;
    int theta_index = -1;
    double value = 0.0;
  };
  Cell argmin_theta() const;
  Cell argmin_alpha() const;

  bool operator==(const DerivativeLandscape&) const = default;
};

// |C'| landscape of a fit: d_alpha = |C'|, d_theta = |eta| |C'|.
DerivativeLandscape pade_landscape(const ContinuedFraction& cf, const std::vector<double>& alpha_grid,
                                   const std::vector<double>& theta_grid);

struct StationaryResult {
  std::vector<StationaryPoint> points;  // sorted by |eta|
  DerivativeLandscape landscape;        // over the seed grid
  std::vector<std::string> diagnostics;

  bool found() const noexcept { return !points.empty(); }
};

StationaryResult find_stationary(const ContinuedFraction& cf, const SeedRegion& region,
                                 const StationaryOptions& options = {}, const std::string& window_id = {});

// Both cross-sections slow down most within one grid step of eta_star.
bool cusp_coincides(const StationaryPoint& point);

// The stationary point with the smallest Pade error (ties: smaller |eta|).
const StationaryPoint* best_point(const StationaryResult& result);

struct PuiseuxSample {
  cplx eta{};
  cplx e_plus{};
  cplx e_minus{};

  bool operator==(const PuiseuxSample&) const = default;
};

struct BranchPointEstimate {
  cplx eta_bp{};
  cplx energy_bp{};
  cplx b{};
  double residual = 0.0;
  bool poor_fit = false;

  double alpha_bp() const { return std::abs(eta_bp); }
  double theta_bp() const { return std::arg(eta_bp); }

  bool operator==(const BranchPointEstimate&) const = default;
};

// E+- = E_BP +- b sqrt(eta - eta_BP) by two linear least-squares solves.
BranchPointEstimate puiseux_fit(const std::vector<PuiseuxSample>& samples);

// (alpha_sp / alpha_bp) e^{i (theta - theta_bp)} - 1
cplx gap_function(const BranchPointEstimate& bp, double alpha_sp, double theta);

// Least-squares slope of log|E+ - E-| against log|eta - eta_bp|.
double puiseux_exponent(const std::vector<PuiseuxSample>& samples, cplx eta_bp);

}  // namespace stabpade
