#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stabpade/continuation.hpp"
#include "stabpade/model.hpp"

namespace stabpade {

// eta -> (H, S): the complex-scaled matrices of some model.
using MatrixFamily = std::function<ComplexMatrixPair(cplx eta)>;

MatrixFamily model_family(const ModelSpec& model, const BasisSet& basis);

struct TrackedRoot {
  cplx energy{};
  VectorC vector;        // c-normalized
  double overlap = 1.0;  // with the reference it was followed from
};

// Eigenpair nearest target_energy from a full solve.
TrackedRoot select_root(const ComplexMatrixPair& pair, cplx target_energy);

// Continues reference into pair.  Rayleigh-quotient iteration (complex
// symmetric, c-product) started from the reference; when it lands on a
// vector overlapping the reference by < min_overlap, a full solve is done
// and the maximum-overlap root is taken instead.
TrackedRoot follow_root(const ComplexMatrixPair& pair, const TrackedRoot& reference, double min_overlap = 0.9);

struct UcsSweepOptions {
  std::optional<cplx> target_energy;  // root chosen at the first theta by energy ...
  int root_index = 0;                 // ... or by position in the sorted spectrum
  bool keep_spectra = false;
  double min_quality = 0.5;
};

struct UcsTrajectory {
  double alpha = 1.0;
  std::vector<double> theta_grid;
  std::vector<cplx> tracked_energy;
  std::vector<std::vector<cplx>> full_spectra;  // empty unless requested
  std::vector<double> tracking_quality;         // per step

  bool operator==(const UcsTrajectory&) const = default;
};

UcsTrajectory ucs_sweep(const ModelSpec& model, const BasisSet& basis, double alpha,
                        const std::vector<double>& theta_grid, const UcsSweepOptions& options = {});

// Largest real value of V on the real axis (the barrier top of the benchmark).
double barrier_top(const ModelSpec& model);

// Slope of arg(E - threshold) against theta over theta <= theta_max
// (least squares, phase unwrapped).
double rotation_slope(const UcsTrajectory& trajectory, double threshold, double theta_max = 0.15);

struct UcsStationaryOptions {
  double fd_step = 1e-4;
  double tol = 1e-6;              // eta change between rounds
  int max_rounds = 50;
  double derivative_tol = 1e-6;   // |dE/deta| <= tol * max(1, |E|)
  double flat_fraction = 1e-2;    // stop once both objectives are below this fraction of the bound
  double theta_half_width = 0.1;
  double alpha_half_width = 0.1;
  double line_tol = 1e-8;
};

struct UcsStationaryPoint {
  ScalingParameter eta_star;
  cplx energy{};
  double numerical_derivative_norm = 0.0;  // |dE/deta| by central differences
  int rounds = 0;

  bool operator==(const UcsStationaryPoint&) const = default;
};

// Alternating golden-section search on |dE/dtheta| and |dE/dalpha| of the
// root nearest target_energy at the seed.  ConvergenceError after max_rounds.
UcsStationaryPoint ucs_stationary(const MatrixFamily& family, ScalingParameter seed, cplx target_energy,
                                  const UcsStationaryOptions& options = {});
UcsStationaryPoint ucs_stationary(const ModelSpec& model, const BasisSet& basis, ScalingParameter seed,
                                  cplx target_energy, const UcsStationaryOptions& options = {});

// |dE/dtheta| and |dE/dalpha| of the root nearest target_energy at the first
// theta, tracked along theta for every alpha.  Tracking failures leave NaN.
DerivativeLandscape derivative_landscape(const ModelSpec& model, const BasisSet& basis,
                                         const std::vector<double>& alpha_grid,
                                         const std::vector<double>& theta_grid, cplx target_energy,
                                         double fd_step = 1e-4);

// Branch point of the eigenvalue pair closest to energy_guess: secant
// iteration in complex eta on D(eta) = (E1 - E2)^2, which has a simple zero
// there.  The pair is re-selected each step as the two eigenvalues nearest
// the previous pair mean.
struct BranchPointSearch {
  cplx eta_bp{};
  cplx energy_bp{};
  double discriminant = 0.0;  // |D| at eta_bp
  int iterations = 0;
};

BranchPointSearch locate_branch_point(const MatrixFamily& family, cplx eta_guess, cplx energy_guess,
                                      double tol = 1e-13, int max_iterations = 60);

// Start for locate_branch_point from a real avoided crossing of two tracked
// curves: alpha_c + i * min_gap / |slope difference|, slopes taken a few grid
// steps away from the crossing.
cplx branch_point_guess(const StabilizationData& data, const AvoidedCrossing& crossing);

// The coalescing pair on circles of the given radii around eta_bp
// (per_radius points each, phases offset so no sample lies on the real axis).
std::vector<PuiseuxSample> puiseux_samples(const MatrixFamily& family, cplx eta_bp, cplx energy_bp,
                                           const std::vector<double>& radii, int per_radius = 6);

}  // namespace stabpade
