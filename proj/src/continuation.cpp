#include "stabpade/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "stabpade/parallel.hpp"
#include "stabpade/search.hpp"

namespace stabpade {

std::string to_string(TrajectoryKind kind) {
  return kind == TrajectoryKind::theta_trajectory ? "theta_trajectory" : "alpha_trajectory";
}

TrajectoryKind trajectory_kind_from_string(const std::string& name) {
  if (name == "theta_trajectory" || name == "theta") return TrajectoryKind::theta_trajectory;
  if (name == "alpha_trajectory" || name == "alpha") return TrajectoryKind::alpha_trajectory;
  throw ValidationError("kind", "unknown trajectory kind '" + name + "'");
}

std::string to_string(WidthConvention convention) {
  return convention == WidthConvention::gamma ? "gamma" : "half_gamma";
}

WidthConvention width_convention_from_string(const std::string& name) {
  if (name == "gamma") return WidthConvention::gamma;
  if (name == "half_gamma") return WidthConvention::half_gamma;
  throw ValidationError("width_convention", "unknown width convention '" + name + "'");
}

double width_of(cplx energy, WidthConvention convention) {
  const double w = convention == WidthConvention::gamma ? -2.0 * energy.imag() : -energy.imag();
  return std::max(w, 0.0);
}

std::string to_string(StationaryStrategy strategy) {
  return strategy == StationaryStrategy::newton ? "newton" : "alternating";
}

StationaryStrategy stationary_strategy_from_string(const std::string& name) {
  if (name == "newton") return StationaryStrategy::newton;
  if (name == "alternating") return StationaryStrategy::alternating;
  throw ValidationError("strategy", "unknown stationary strategy '" + name + "'");
}

cplx Trajectory::eta_at(std::size_t k) const {
  return kind == TrajectoryKind::theta_trajectory ? std::polar(fixed_value, grid[k])
                                                  : std::polar(grid[k], fixed_value);
}

int Trajectory::slowest_segment() const {
  int best = -1;
  double spacing = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < energies.size(); ++k) {
    const double d = std::abs(energies[k + 1] - energies[k]);
    if (d < spacing) {
      spacing = d;
      best = static_cast<int>(k);
    }
  }
  return best;
}

namespace {

void check_monotone(const std::vector<double>& grid, const char* field) {
  if (grid.empty()) throw ValidationError(field, "empty grid");
  const bool up = grid.size() < 2 || grid[1] > grid[0];
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (up ? !(grid[k] > grid[k - 1]) : !(grid[k] < grid[k - 1]))
      throw ValidationError(field, "grid must be strictly monotone");
}

Trajectory trace_out(const ContinuedFraction& cf, TrajectoryKind kind, double fixed, const std::vector<double>& grid) {
  Trajectory t;
  t.kind = kind;
  t.fixed_value = fixed;
  std::vector<PadeValue> values(grid.size());
  parallel_for(grid.size(), [&](std::size_t k) {
    const cplx eta = kind == TrajectoryKind::theta_trajectory ? std::polar(fixed, grid[k]) : std::polar(grid[k], fixed);
    values[k] = evaluate(cf, eta);
  });
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (values[k].pole || !std::isfinite(std::abs(values[k].value))) {
      t.pole_values.push_back(grid[k]);
      continue;
    }
    t.grid.push_back(grid[k]);
    t.energies.push_back(values[k].value);
    t.pade_errors.push_back(values[k].pade_error);
  }
  if (t.pole_values.size() * 5 > grid.size()) {
    std::ostringstream os;
    os << to_string(kind) << " at " << fixed << ": " << t.pole_values.size() << " of " << grid.size()
       << " points hit poles of the fraction";
    throw DegenerateTrajectoryError(os.str());
  }
  return t;
}

}  // namespace

Trajectory theta_trajectory(const ContinuedFraction& cf, double alpha, const std::vector<double>& theta_grid) {
  check_monotone(theta_grid, "theta_grid");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ValidationError("alpha", "must be > 0");
  for (double t : theta_grid)
    if (!(t >= 0.0 && t <= kMaxTheta)) throw ValidationError("theta_grid", "theta must lie in [0, pi/4]");
  return trace_out(cf, TrajectoryKind::theta_trajectory, alpha, theta_grid);
}

Trajectory alpha_trajectory(const ContinuedFraction& cf, double theta, const std::vector<double>& alpha_grid) {
  check_monotone(alpha_grid, "alpha_grid");
  if (!(theta >= 0.0 && theta <= kMaxTheta)) throw ValidationError("theta", "theta must lie in [0, pi/4]");
  for (double a : alpha_grid)
    if (!(a > 0.0) || !std::isfinite(a)) throw ValidationError("alpha_grid", "alpha must be > 0");
  return trace_out(cf, TrajectoryKind::alpha_trajectory, theta, alpha_grid);
}

void SeedRegion::validate() const {
  if (!(alpha_lo > 0.0) || !(alpha_hi > alpha_lo) || !std::isfinite(alpha_hi))
    throw ValidationError("seed_region.alpha", "need 0 < alpha_lo < alpha_hi");
  if (!(theta_lo >= 0.0) || !(theta_hi > theta_lo) || theta_hi > kMaxTheta)
    throw ValidationError("seed_region.theta", "need 0 <= theta_lo < theta_hi <= pi/4");
}

bool SeedRegion::contains(cplx eta) const {
  const double a = std::abs(eta), t = std::arg(eta);
  const double ea = 1e-12 * alpha_hi, et = 1e-12;
  return a >= alpha_lo - ea && a <= alpha_hi + ea && t >= theta_lo - et && t <= theta_hi + et;
}

SeedRegion default_seed_region(const ContinuedFraction& cf) {
  const auto [lo, hi] = std::minmax_element(cf.abscissae().begin(), cf.abscissae().end());
  const double span = *hi - *lo;
  SeedRegion r;
  r.alpha_lo = std::max(*lo - 0.5 * span, 0.5 * *lo);
  r.alpha_hi = *hi + 0.5 * span;
  r.theta_lo = 0.0;
  r.theta_hi = kMaxTheta;
  return r;
}

DerivativeLandscape::Cell DerivativeLandscape::argmin_theta() const {
  Cell c;
  c.value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < d_theta.size(); ++i)
    for (std::size_t j = 0; j < d_theta[i].size(); ++j)
      if (d_theta[i][j] < c.value) c = {static_cast<int>(i), static_cast<int>(j), d_theta[i][j]};
  return c;
}

DerivativeLandscape::Cell DerivativeLandscape::argmin_alpha() const {
  Cell c;
  c.value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < d_alpha.size(); ++i)
    for (std::size_t j = 0; j < d_alpha[i].size(); ++j)
      if (d_alpha[i][j] < c.value) c = {static_cast<int>(i), static_cast<int>(j), d_alpha[i][j]};
  return c;
}

DerivativeLandscape pade_landscape(const ContinuedFraction& cf, const std::vector<double>& alpha_grid,
                                   const std::vector<double>& theta_grid) {
  DerivativeLandscape land;
  land.alpha_grid = alpha_grid;
  land.theta_grid = theta_grid;
  const std::size_t na = alpha_grid.size(), nt = theta_grid.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  land.d_theta.assign(na, std::vector<double>(nt, nan));
  land.d_alpha.assign(na, std::vector<double>(nt, nan));
  parallel_for(na * nt, [&](std::size_t idx) {
    const std::size_t i = idx / nt, j = idx % nt;
    const PadeValue v = evaluate(cf, std::polar(alpha_grid[i], theta_grid[j]));
    if (v.pole) return;
    land.d_alpha[i][j] = std::abs(v.derivative);
    land.d_theta[i][j] = alpha_grid[i] * std::abs(v.derivative);
  });
  return land;
}

namespace {

struct Candidate {
  bool ok = false;
  cplx eta{};
};

Candidate newton(const ContinuedFraction& cf, cplx eta, const StationaryOptions& options) {
  Candidate c;
  for (int it = 0; it < options.max_newton_steps; ++it) {
    const PadeValue v = evaluate(cf, eta);
    if (v.pole || v.second_derivative == cplx(0.0)) return c;
    const cplx step = v.derivative / v.second_derivative;
    eta -= step;
    if (!std::isfinite(std::abs(eta)) || std::abs(eta) > 1e3) return c;
    if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(eta))) break;
  }
  c.ok = true;
  c.eta = eta;
  return c;
}

Candidate alternating(const ContinuedFraction& cf, cplx eta, const SeedRegion& region,
                      const StationaryOptions& options) {
  Candidate c;
  const auto dnorm = [&](double a, double t) {
    const PadeValue v = evaluate(cf, std::polar(a, t));
    return v.pole ? std::numeric_limits<double>::infinity() : std::abs(v.derivative);
  };
  AlternatingOptions ao;
  ao.tol = options.scan_tol;
  ao.relative = true;
  ao.line_tol = 1e-11;
  ao.theta_min = region.theta_lo;
  ao.theta_max = region.theta_hi;
  try {
    const AlternatingResult r = alternating_search([&](double a, double t) { return a * dnorm(a, t); }, dnorm,
                                                   ScalingParameter::from_eta(eta), ao);
    c.ok = true;
    c.eta = r.eta.eta();
  } catch (const ConvergenceError&) {
  }
  return c;
}

std::vector<double> centred(double center, double step, int half, double lo, double hi, bool relative) {
  std::vector<double> g;
  for (int k = -half; k <= half; ++k) {
    const double v = relative ? center * (1.0 + step * k) : center + step * k;
    if (k == 0) {
      g.push_back(center);
    } else if (v >= lo && v <= hi) {
      g.push_back(v);
    }
  }
  return g;
}

}  // namespace

StationaryResult find_stationary(const ContinuedFraction& cf, const SeedRegion& region,
                                 const StationaryOptions& options, const std::string& window_id) {
  region.validate();
  if (options.seeds_alpha < 1 || options.seeds_theta < 1) throw ValidationError("seeds", "need >= 1 seed per axis");
  StationaryResult result;
  const int na = options.seeds_alpha, nt = options.seeds_theta;
  std::vector<double> seed_alpha(na), seed_theta(nt);
  for (int i = 0; i < na; ++i) seed_alpha[i] = region.alpha_lo + (region.alpha_hi - region.alpha_lo) * (i + 0.5) / na;
  for (int j = 0; j < nt; ++j) seed_theta[j] = region.theta_lo + (region.theta_hi - region.theta_lo) * (j + 0.5) / nt;
  result.landscape = pade_landscape(cf, seed_alpha, seed_theta);

  std::vector<Candidate> found(static_cast<std::size_t>(na) * nt);
  parallel_for(found.size(), [&](std::size_t idx) {
    const cplx seed = std::polar(seed_alpha[idx / nt], seed_theta[idx % nt]);
    found[idx] = options.strategy == StationaryStrategy::newton ? newton(cf, seed, options)
                                                                : alternating(cf, seed, region, options);
  });

  // deterministic merge: seed order, then filters
  std::vector<std::pair<cplx, PadeValue>> roots;
  int rejected_derivative = 0, rejected_sign = 0, rejected_error = 0, rejected_region = 0;
  for (const Candidate& c : found) {
    if (!c.ok) continue;
    bool dup = false;
    for (const auto& r : roots) dup = dup || std::abs(r.first - c.eta) < options.dedup_distance;
    if (dup) continue;
    const PadeValue v = evaluate(cf, c.eta);
    if (v.pole) continue;
    if (!(std::abs(v.derivative) <= options.derivative_tol * std::max(1.0, std::abs(v.value)))) {
      ++rejected_derivative;
      continue;
    }
    roots.emplace_back(c.eta, v);
  }
  std::vector<std::pair<cplx, PadeValue>> kept;
  for (const auto& [eta, v] : roots) {
    if (v.value.imag() > 1e-12 * std::max(1.0, std::abs(v.value))) {
      ++rejected_sign;
    } else if (!(v.pade_error <= options.error_tol)) {
      ++rejected_error;
    } else if (!region.contains(eta)) {
      ++rejected_region;
    } else {
      kept.emplace_back(eta, v);
    }
  }
  std::sort(kept.begin(), kept.end(), [](const auto& p, const auto& q) {
    if (std::abs(p.first) != std::abs(q.first)) return std::abs(p.first) < std::abs(q.first);
    return std::arg(p.first) < std::arg(q.first);
  });

  for (const auto& [eta, v] : kept) {
    StationaryPoint sp;
    sp.eta_star = ScalingParameter::from_eta(eta);
    sp.eta_star.theta = std::clamp(sp.eta_star.theta, 0.0, kMaxTheta);  // roundoff at the region edge
    sp.energy = v.value;
    sp.width = width_of(v.value, options.width);
    sp.derivative_norm = std::abs(v.derivative);
    sp.pade_error = v.pade_error;
    sp.window_id = window_id;
    const int half = options.trajectory_half_points;
    try {
      sp.theta_cut = theta_trajectory(
          cf, sp.eta_star.alpha,
          centred(sp.eta_star.theta, options.trajectory_theta_step, half, 0.0, kMaxTheta, false));
      sp.alpha_cut = alpha_trajectory(
          cf, sp.eta_star.theta,
          centred(sp.eta_star.alpha, options.trajectory_alpha_step, half, 1e-12, 1e300, true));
    } catch (const NumericError& e) {
      result.diagnostics.push_back(std::string("trajectory cut skipped: ") + e.what());
    }
    result.points.push_back(std::move(sp));
  }

  if (result.points.empty()) {
    std::ostringstream os;
    os << "no stationary point in alpha [" << region.alpha_lo << ", " << region.alpha_hi << "] x theta ["
       << region.theta_lo << ", " << region.theta_hi << "]: " << roots.size() << " roots of C' converged ("
       << rejected_derivative << " rejected on |C'|, " << rejected_sign << " with Im E > 0, " << rejected_error
       << " with pade_error > " << options.error_tol << ", " << rejected_region
       << " outside the region); see the |C'| landscape";
    result.diagnostics.push_back(os.str());
  }
  return result;
}

namespace {

int nearest_index(const std::vector<double>& grid, double v) {
  int best = -1;
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < grid.size(); ++k)
    if (std::abs(grid[k] - v) < d) {
      d = std::abs(grid[k] - v);
      best = static_cast<int>(k);
    }
  return best;
}

bool slowest_near(const Trajectory& t, double center) {
  const int s = t.slowest_segment();
  const int c = nearest_index(t.grid, center);
  return s >= 0 && (s == c || s + 1 == c);
}

}  // namespace

bool cusp_coincides(const StationaryPoint& point) {
  return slowest_near(point.theta_cut, point.eta_star.theta) && slowest_near(point.alpha_cut, point.eta_star.alpha);
}

const StationaryPoint* best_point(const StationaryResult& result) {
  const StationaryPoint* best = nullptr;
  for (const auto& p : result.points)
    if (!best || p.pade_error < best->pade_error) best = &p;
  return best;
}

BranchPointEstimate puiseux_fit(const std::vector<PuiseuxSample>& samples) {
  const int n = static_cast<int>(samples.size());
  if (n < 4) throw ValidationError("samples", "need at least 4 samples");
  Eigen::MatrixXcd A(n, 2);
  Eigen::VectorXcd rhs(n);
  cplx sum{};
  for (int i = 0; i < n; ++i) {
    const auto& s = samples[i];
    const cplx d = s.e_plus - s.e_minus;
    A(i, 0) = s.eta;
    A(i, 1) = 1.0;
    rhs(i) = d * d;
    sum += 0.5 * (s.e_plus + s.e_minus);
  }
  const Eigen::Vector2cd pq = A.colPivHouseholderQr().solve(rhs);
  const cplx p = pq(0), q = pq(1);
  if (std::abs(p) == 0.0 || !std::isfinite(std::abs(p)))
    throw NumericError("Puiseux fit: squared gap does not vary linearly with eta");

  BranchPointEstimate bp;
  bp.energy_bp = sum / static_cast<double>(n);
  bp.eta_bp = -q / p;
  bp.b = 0.5 * std::sqrt(p);
  const cplx root0 = bp.b * std::sqrt(samples[0].eta - bp.eta_bp);
  if (std::abs(bp.energy_bp - root0 - samples[0].e_plus) < std::abs(bp.energy_bp + root0 - samples[0].e_plus))
    bp.b = -bp.b;

  double ss = 0.0, span = 0.0;
  for (const auto& s : samples) {
    const cplx r = bp.b * std::sqrt(s.eta - bp.eta_bp);
    const double same = std::norm(bp.energy_bp + r - s.e_plus) + std::norm(bp.energy_bp - r - s.e_minus);
    const double swapped = std::norm(bp.energy_bp - r - s.e_plus) + std::norm(bp.energy_bp + r - s.e_minus);
    ss += std::min(same, swapped);
    for (const auto& o : samples) span = std::max(span, std::abs(s.eta - o.eta));
  }
  bp.residual = std::sqrt(ss / (2.0 * n));
  bp.poor_fit = !(bp.residual < 1e-2 * std::abs(bp.b) * std::sqrt(span));
  return bp;
}

cplx gap_function(const BranchPointEstimate& bp, double alpha_sp, double theta) {
  return alpha_sp / bp.alpha_bp() * std::polar(1.0, theta - bp.theta_bp()) - 1.0;
}

double puiseux_exponent(const std::vector<PuiseuxSample>& samples, cplx eta_bp) {
  if (samples.size() < 2) throw ValidationError("samples", "need at least 2 samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(samples.size());
  for (const auto& s : samples) {
    const double x = std::log(std::abs(s.eta - eta_bp));
    const double y = std::log(std::abs(s.e_plus - s.e_minus));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double den = n * sxx - sx * sx;
  if (!(std::abs(den) > 0.0)) throw NumericError("Puiseux exponent: samples at one distance from eta_bp");
  return (n * sxy - sx * sy) / den;
}

}  // namespace stabpade
