#include "stabpade/ucs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "stabpade/eigensolver.hpp"
#include "stabpade/errors.hpp"
#include "stabpade/parallel.hpp"
#include "stabpade/search.hpp"

namespace stabpade {

MatrixFamily model_family(const ModelSpec& model, const BasisSet& basis) {
  model.validate();
  return [model, basis](cplx eta) { return scaled_matrices(model, basis, eta); };
}

namespace {

cplx c_product(const VectorC& v, const VectorC& w, const std::optional<MatrixC>& S) {
  return S ? (v.transpose() * (*S) * w)(0, 0) : (v.transpose() * w)(0, 0);
}

VectorC c_normalized(const VectorC& v, const std::optional<MatrixC>& S) {
  const cplx n = c_product(v, v, S);
  if (std::abs(n) <= 1e-8 * v.squaredNorm()) return v / v.norm();
  return v / std::sqrt(n);
}

TrackedRoot max_overlap_root(const ComplexMatrixPair& pair, const VectorC& reference) {
  const EigenSet set = eig(pair);
  TrackedRoot best;
  best.overlap = -1.0;
  for (int k = 0; k < static_cast<int>(set.values.size()); ++k) {
    const double o = overlap_magnitude(reference, set.vectors.col(k), pair.S);
    if (o > best.overlap) {
      best.overlap = o;
      best.energy = set.values[k];
      best.vector = set.vectors.col(k);
    }
  }
  return best;
}

}  // namespace

TrackedRoot select_root(const ComplexMatrixPair& pair, cplx target_energy) {
  const EigenSet set = eig(pair);
  if (set.values.empty()) throw NumericError("empty spectrum");
  std::size_t best = 0;
  for (std::size_t k = 1; k < set.values.size(); ++k)
    if (std::abs(set.values[k] - target_energy) < std::abs(set.values[best] - target_energy)) best = k;
  return {set.values[best], set.vectors.col(static_cast<Eigen::Index>(best)), 1.0};
}

TrackedRoot follow_root(const ComplexMatrixPair& pair, const TrackedRoot& reference, double min_overlap) {
  const MatrixC& H = pair.H;
  const Eigen::Index n = H.rows();
  const MatrixC S = pair.S ? *pair.S : MatrixC::Identity(n, n);
  const double hnorm = H.norm();
  VectorC v = c_normalized(reference.vector, pair.S);
  cplx sigma = c_product(v, H * v, pair.S) / c_product(v, v, pair.S);
  for (int it = 0; it < 30; ++it) {
    const VectorC w = (H - sigma * S).partialPivLu().solve(S * v);
    if (!w.allFinite()) break;  // sigma hit the eigenvalue exactly
    v = c_normalized(w, pair.S);
    sigma = c_product(v, H * v, pair.S) / c_product(v, v, pair.S);
    const double residual = (H * v - sigma * (S * v)).norm() / (hnorm * v.norm());
    if (residual < 1e-13) break;
  }
  TrackedRoot out{sigma, v, overlap_magnitude(reference.vector, v, pair.S)};
  if (!(out.overlap >= min_overlap) || !std::isfinite(std::abs(sigma))) return max_overlap_root(pair, reference.vector);
  return out;
}

UcsTrajectory ucs_sweep(const ModelSpec& model, const BasisSet& basis, double alpha,
                        const std::vector<double>& theta_grid, const UcsSweepOptions& options) {
  if (theta_grid.empty()) throw ValidationError("theta_grid", "empty grid");
  for (std::size_t k = 0; k < theta_grid.size(); ++k) {
    ScalingParameter{alpha, theta_grid[k]}.validate();
    if (k > 0 && !(theta_grid[k] > theta_grid[k - 1]))
      throw ValidationError("theta_grid", "must be strictly increasing");
  }
  const std::size_t G = theta_grid.size();
  std::vector<EigenSet> spectra(G);
  std::vector<std::optional<MatrixC>> overlaps(G);
  parallel_for(G, [&](std::size_t k) {
    const ComplexMatrixPair pair = scaled_matrices(model, basis, ScalingParameter{alpha, theta_grid[k]});
    spectra[k] = eig(pair);
    overlaps[k] = pair.S;
  });

  UcsTrajectory t;
  t.alpha = alpha;
  t.theta_grid = theta_grid;
  std::size_t root = 0;
  if (options.target_energy) {
    for (std::size_t k = 1; k < spectra[0].values.size(); ++k)
      if (std::abs(spectra[0].values[k] - *options.target_energy) <
          std::abs(spectra[0].values[root] - *options.target_energy))
        root = k;
  } else {
    if (options.root_index < 0 || options.root_index >= static_cast<int>(spectra[0].values.size()))
      throw ValidationError("root_index", "outside the spectrum");
    root = static_cast<std::size_t>(options.root_index);
  }
  VectorC tracked = spectra[0].vectors.col(static_cast<Eigen::Index>(root));
  t.tracked_energy.push_back(spectra[0].values[root]);
  for (std::size_t k = 1; k < G; ++k) {
    double best = -1.0;
    std::size_t pick = 0;
    for (std::size_t c = 0; c < spectra[k].values.size(); ++c) {
      const double o = overlap_magnitude(tracked, spectra[k].vectors.col(static_cast<Eigen::Index>(c)), overlaps[k]);
      if (o > best) {
        best = o;
        pick = c;
      }
    }
    t.tracking_quality.push_back(best);
    if (best < options.min_quality) {
      std::ostringstream os;
      os << "root tracking lost at theta = " << theta_grid[k] << " (overlap " << best
         << "); use a finer theta grid";
      throw TrackingError(theta_grid[k], best, os.str());
    }
    tracked = spectra[k].vectors.col(static_cast<Eigen::Index>(pick));
    t.tracked_energy.push_back(spectra[k].values[pick]);
  }
  if (options.keep_spectra)
    for (auto& s : spectra) t.full_spectra.push_back(std::move(s.values));
  return t;
}

double barrier_top(const ModelSpec& model) {
  double top = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 60000; ++i) top = std::max(top, model.potential(cplx(1e-3 * i, 0.0)).real());
  return top;
}

double rotation_slope(const UcsTrajectory& trajectory, double threshold, double theta_max) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0, prev = 0.0;
  int n = 0;
  for (std::size_t k = 0; k < trajectory.theta_grid.size(); ++k) {
    const double t = trajectory.theta_grid[k];
    if (t > theta_max) break;
    double phase = std::arg(trajectory.tracked_energy[k] - threshold);
    if (n > 0) phase += 2 * kPi * std::round((prev - phase) / (2 * kPi));
    prev = phase;
    sx += t;
    sy += phase;
    sxx += t * t;
    sxy += t * phase;
    ++n;
  }
  const double den = n * sxx - sx * sx;
  if (n < 2 || !(den > 0.0)) throw ValidationError("theta_grid", "need >= 2 points with theta <= theta_max");
  return (n * sxy - sx * sy) / den;
}

UcsStationaryPoint ucs_stationary(const MatrixFamily& family, ScalingParameter seed, cplx target_energy,
                                  const UcsStationaryOptions& options) {
  seed.validate();
  if (!(options.fd_step > 0.0)) throw ValidationError("fd_step", "must be > 0");
  const TrackedRoot ref = select_root(family(seed.eta()), target_energy);
  const double h = options.fd_step;
  const auto energy = [&](double a, double t) { return follow_root(family(std::polar(a, t)), ref).energy; };
  const auto d_theta = [&](double a, double t) { return std::abs(energy(a, t + h) - energy(a, t - h)) / (2 * h); };
  const auto d_alpha = [&](double a, double t) { return std::abs(energy(a + h, t) - energy(a - h, t)) / (2 * h); };

  const double bound = options.derivative_tol * std::max(1.0, std::abs(ref.energy));
  AlternatingOptions ao;
  ao.tol = options.tol;
  ao.max_rounds = options.max_rounds;
  ao.theta_half_width = options.theta_half_width;
  ao.alpha_half_width = options.alpha_half_width;
  ao.line_tol = options.line_tol;
  ao.flat_value = options.flat_fraction * bound;
  const AlternatingResult r = alternating_search(d_theta, d_alpha, seed, ao);

  UcsStationaryPoint sp;
  sp.eta_star = r.eta;
  sp.rounds = r.rounds;
  sp.energy = energy(r.eta.alpha, r.eta.theta);
  sp.numerical_derivative_norm =
      std::max(d_alpha(r.eta.alpha, r.eta.theta), d_theta(r.eta.alpha, r.eta.theta) / r.eta.alpha);
  if (!(sp.numerical_derivative_norm <= bound)) {
    std::ostringstream os;
    os << "UCS search settled at alpha = " << r.eta.alpha << ", theta = " << r.eta.theta
       << " with |dE/deta| = " << sp.numerical_derivative_norm << " above " << bound;
    throw ConvergenceError(os.str(), r.trace());
  }
  return sp;
}

UcsStationaryPoint ucs_stationary(const ModelSpec& model, const BasisSet& basis, ScalingParameter seed,
                                  cplx target_energy, const UcsStationaryOptions& options) {
  return ucs_stationary(model_family(model, basis), seed, target_energy, options);
}

DerivativeLandscape derivative_landscape(const ModelSpec& model, const BasisSet& basis,
                                         const std::vector<double>& alpha_grid,
                                         const std::vector<double>& theta_grid, cplx target_energy,
                                         double fd_step) {
  if (alpha_grid.empty() || theta_grid.empty()) throw ValidationError("grid", "empty landscape grid");
  if (alpha_grid.size() * theta_grid.size() > 10000) throw ValidationError("grid", "more than 1e4 points");
  for (std::size_t k = 0; k < theta_grid.size(); ++k) {
    for (double a : {alpha_grid.front(), alpha_grid.back()}) ScalingParameter{a, theta_grid[k]}.validate();
    if (k > 0 && !(theta_grid[k] > theta_grid[k - 1]))
      throw ValidationError("theta_grid", "must be strictly increasing");
  }
  for (double a : alpha_grid)
    if (!(a > 0.0)) throw ValidationError("alpha_grid", "alpha must be > 0");
  const MatrixFamily family = model_family(model, basis);
  const std::size_t na = alpha_grid.size(), nt = theta_grid.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  DerivativeLandscape land;
  land.alpha_grid = alpha_grid;
  land.theta_grid = theta_grid;
  land.d_theta.assign(na, std::vector<double>(nt, nan));
  land.d_alpha.assign(na, std::vector<double>(nt, nan));
  const double h = fd_step;
  parallel_for(na, [&](std::size_t i) {
    const double a = alpha_grid[i];
    TrackedRoot cur = select_root(family(std::polar(a, theta_grid[0])), target_energy);
    bool lost = false;
    for (std::size_t j = 0; j < nt; ++j) {
      const double t = theta_grid[j];
      if (j > 0) {
        cur = follow_root(family(std::polar(a, t)), cur);
        lost = lost || cur.overlap < 0.5;
      }
      if (lost) continue;
      const auto e = [&](double aa, double tt) { return follow_root(family(std::polar(aa, tt)), cur).energy; };
      land.d_theta[i][j] = std::abs(e(a, t + h) - e(a, t - h)) / (2 * h);
      land.d_alpha[i][j] = std::abs(e(a + h, t) - e(a - h, t)) / (2 * h);
    }
  });
  return land;
}

namespace {

// The two eigenvalues nearest center.
std::pair<cplx, cplx> nearest_pair(const ComplexMatrixPair& pair, cplx center) {
  const EigenSet set = eig(pair);
  std::vector<cplx> v(set.values.begin(), set.values.end());
  if (v.size() < 2) throw ValidationError("family", "needs at least two eigenvalues");
  std::partial_sort(v.begin(), v.begin() + 2, v.end(),
                    [&](cplx a, cplx b) { return std::abs(a - center) < std::abs(b - center); });
  return {v[0], v[1]};
}

}  // namespace

BranchPointSearch locate_branch_point(const MatrixFamily& family, cplx eta_guess, cplx energy_guess, double tol,
                                      int max_iterations) {
  cplx center = energy_guess;
  const auto discriminant = [&](cplx eta) {
    const auto [a, b] = nearest_pair(family(eta), center);
    center = 0.5 * (a + b);
    return (a - b) * (a - b);
  };
  BranchPointSearch out;
  cplx e0 = eta_guess, e1 = eta_guess * (1.0 + 1e-3);
  cplx d0 = discriminant(e0), d1 = discriminant(e1);
  for (int it = 1; it <= max_iterations; ++it) {
    if (d1 == d0) break;
    const cplx e2 = e1 - d1 * (e1 - e0) / (d1 - d0);
    e0 = e1;
    d0 = d1;
    e1 = e2;
    d1 = discriminant(e1);
    out.iterations = it;
    if (std::abs(e1 - e0) <= tol * std::abs(e1)) {
      out.eta_bp = e1;
      out.energy_bp = center;
      out.discriminant = std::abs(d1);
      return out;
    }
  }
  std::ostringstream os;
  os << "branch point search did not settle (last eta = " << e1 << ", |D| = " << std::abs(d1) << ")";
  throw ConvergenceError(os.str(), {});
}

cplx branch_point_guess(const StabilizationData& data, const AvoidedCrossing& crossing) {
  const int G = static_cast<int>(data.grid_size());
  const int k = crossing.grid_index;
  const int lo = std::max(0, k - 4), hi = std::min(G - 1, k + 4);
  if (hi == lo) throw ValidationError("crossing", "grid too short for slopes");
  // away from the crossing the curves exchange character, so compare the
  // outgoing slope of one with the incoming slope of the other
  const auto slope = [&](int c, int a, int b) {
    return (data.curves[c][b] - data.curves[c][a]) / (data.alpha_grid[b] - data.alpha_grid[a]);
  };
  const double sa = slope(crossing.curve_a, lo, k), sb = slope(crossing.curve_b, lo, k);
  const double ta = slope(crossing.curve_a, k, hi), tb = slope(crossing.curve_b, k, hi);
  const double diff = std::max(std::abs(sa - sb), std::abs(ta - tb));
  const double offset = diff > 0.0 ? crossing.min_gap / diff : crossing.min_gap;
  return {crossing.alpha_at_min_gap, offset};
}

std::vector<PuiseuxSample> puiseux_samples(const MatrixFamily& family, cplx eta_bp, cplx energy_bp,
                                           const std::vector<double>& radii, int per_radius) {
  if (per_radius < 1) throw ValidationError("per_radius", "must be >= 1");
  std::vector<PuiseuxSample> out(radii.size() * static_cast<std::size_t>(per_radius));
  parallel_for(out.size(), [&](std::size_t n) {
    const double r = radii[n / per_radius];
    const double phase = 0.3 + 2.0 * kPi * static_cast<double>(n % per_radius) / per_radius;
    const cplx eta = eta_bp + std::polar(r, phase);
    const auto [a, b] = nearest_pair(family(eta), energy_bp);
    out[n] = {eta, a, b};
  });
  return out;
}

}  // namespace stabpade
