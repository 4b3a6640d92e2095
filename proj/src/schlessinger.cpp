#include "stabpade/schlessinger.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <variant>

#include "stabpade/errors.hpp"

namespace stabpade {

namespace {

constexpr double kBreakdown = 1e-14;
constexpr double kPole = 1e-30;
constexpr double kTerminate = 1e-13;

void check_points(const std::vector<SamplePoint>& points) {
  if (points.size() < 2) throw ValidationError("points", "need at least 2 points");
  std::vector<double> xs;
  xs.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!std::isfinite(points[i].alpha) || !std::isfinite(points[i].energy))
      throw ValidationError("points", "point " + std::to_string(i) + " is not finite");
    xs.push_back(points[i].alpha);
  }
  std::sort(xs.begin(), xs.end());
  const double span = xs.back() - xs.front();
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (!(xs[i] - xs[i - 1] > 1e-12 * span))
      throw ValidationError("points", "duplicate abscissa alpha = " + std::to_string(xs[i]));
}

// Value of the fraction E_1 / t_1 built from z[0 .. ncoef-1] at real x.
cplx truncation_at(const std::vector<double>& x, double e1, const std::vector<cplx>& z, int ncoef, double at) {
  cplx t = 1.0;
  for (int k = ncoef - 1; k >= 0; --k) t = 1.0 + z[k] * (at - x[k]) / t;
  return e1 / t;
}

// Sequential Schlessinger recursion.  Returns the coefficients, or the
// recursion position of the pivot whose rung could not be solved.
std::variant<std::vector<cplx>, int> recurse(const std::vector<double>& x, const std::vector<double>& e) {
  const int n = static_cast<int>(x.size());
  std::vector<cplx> g(e.begin(), e.end());
  double emax = 0.0;
  for (double v : e) emax = std::max(emax, std::abs(v));
  std::vector<double> scale(n, emax);
  // termination is judged against the spread of the data, so that dense
  // nearly-linear samples are not mistaken for an exact low-order fraction
  const auto [emin_it, emax_it] = std::minmax_element(e.begin(), e.end());
  const double spread = *emax_it - *emin_it;
  std::vector<cplx> z(n - 1, cplx(0.0));
  for (int k = 1; k < n; ++k) {
    // g[k-1 .. n-1] holds level k-1.  Stop once the truncation interpolates
    // every remaining point (exact rational data); the rest of z stays zero.
    bool interpolates = true;
    for (int i = k; i < n && interpolates; ++i)
      interpolates = std::abs(truncation_at(x, e[0], z, k - 1, x[i]) - e[i]) <= kTerminate * spread;
    if (interpolates) break;
    // g_{k-1}(i) vanishes when point i repeats the pivot of level k-2 there;
    // on level 0 it is a zero energy.
    for (int i = k; i < n; ++i)
      if (std::abs(g[i]) <= kBreakdown * scale[i]) return k >= 2 ? k - 2 : i;
    const cplx pivot = g[k - 1];
    for (int i = k; i < n; ++i) {
      const cplx r = pivot / g[i];
      const double dx = x[i] - x[k - 1];
      g[i] = (r - 1.0) / dx;
      scale[i] = (std::abs(r) + 1.0) / std::abs(dx);
    }
    z[k - 1] = g[k];
  }
  return z;
}

struct Bottom {
  cplx t{1.0}, dt{0.0}, ddt{0.0};
  bool pole = false;
};

// Denominator t_1 of the fraction with its first ncoef coefficients.
Bottom unwind(const ContinuedFraction& cf, cplx eta, int ncoef, bool derivatives) {
  Bottom b;
  const auto& z = cf.coefficients();
  const auto& a = cf.abscissae();
  for (int k = ncoef - 1; k >= 0; --k) {
    const cplx s = b.t;
    if (std::abs(s) < kPole) {
      b.pole = true;
      return b;
    }
    const cplx u = z[k] * (eta - a[k]);
    if (derivatives) {
      const cplx s2 = s * s;
      const cplx ddt = -2.0 * z[k] * b.dt / s2 - u * b.ddt / s2 + 2.0 * u * b.dt * b.dt / (s2 * s);
      b.dt = z[k] / s - u * b.dt / s2;
      b.ddt = ddt;
    }
    b.t = 1.0 + u / s;
  }
  if (std::abs(b.t) < kPole) b.pole = true;
  return b;
}

}  // namespace

ContinuedFraction ContinuedFraction::truncated(int m) const {
  if (m < 1 || m > size()) throw ValidationError("order", "truncation outside [1, " + std::to_string(size()) + "]");
  ContinuedFraction cf = *this;
  cf.abscissae_.resize(m);
  cf.values_.resize(m);
  cf.order_.resize(m);
  cf.coefficients_.resize(m - 1);
  return cf;
}

ContinuedFraction ContinuedFraction::restore(std::vector<double> abscissae, std::vector<double> values,
                                             std::vector<cplx> coefficients, std::vector<int> order,
                                             bool reordered) {
  const std::size_t m = abscissae.size();
  if (m < 1 || values.size() != m || order.size() != m || coefficients.size() != m - 1)
    throw ValidationError("fraction", "abscissae, values, order and coefficients disagree in length");
  ContinuedFraction cf;
  cf.abscissae_ = std::move(abscissae);
  cf.values_ = std::move(values);
  cf.coefficients_ = std::move(coefficients);
  cf.order_ = std::move(order);
  cf.reordered_ = reordered;
  return cf;
}

ContinuedFraction fit(const std::vector<SamplePoint>& points) {
  check_points(points);
  const int n = static_cast<int>(points.size());
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;

  for (int attempt = 0; attempt < 2; ++attempt) {
    std::vector<double> x(n), e(n);
    for (int i = 0; i < n; ++i) {
      x[i] = points[order[i]].alpha;
      e[i] = points[order[i]].energy;
    }
    auto result = recurse(x, e);
    if (auto* z = std::get_if<std::vector<cplx>>(&result)) {
      ContinuedFraction cf;
      cf.abscissae_ = std::move(x);
      cf.values_ = std::move(e);
      cf.coefficients_ = std::move(*z);
      cf.order_ = order;
      cf.reordered_ = attempt > 0;
      return cf;
    }
    const int pos = std::get<int>(result);
    if (attempt == 1) {
      std::ostringstream os;
      os << "continued fraction breaks down at point " << order[pos] << " (alpha = " << points[order[pos]].alpha
         << ", E = " << points[order[pos]].energy << ") even after reordering";
      throw DegenerateDataError(order[pos], os.str());
    }
    std::rotate(order.begin() + pos, order.begin() + pos + 1, order.end());
  }
  throw NumericError("unreachable");
}

bool evaluate_value(const ContinuedFraction& cf, cplx eta, cplx& value) {
  const Bottom b = unwind(cf, eta, static_cast<int>(cf.coefficients().size()), false);
  if (b.pole) return false;
  value = cf.values().front() / b.t;
  return true;
}

PadeValue evaluate(const ContinuedFraction& cf, cplx eta) {
  PadeValue out;
  const int ncoef = static_cast<int>(cf.coefficients().size());
  const Bottom b = unwind(cf, eta, ncoef, true);
  if (b.pole) {
    out.pole = true;
    return out;
  }
  const cplx e1 = cf.values().front();
  const cplx t = b.t, t2 = t * t;
  out.value = e1 / t;
  out.derivative = -e1 * b.dt / t2;
  out.second_derivative = -e1 * (b.ddt / t2 - 2.0 * b.dt * b.dt / (t2 * t));
  const Bottom lower = unwind(cf, eta, ncoef - 1, false);
  out.pade_error = lower.pole ? std::numeric_limits<double>::infinity() : std::abs(out.value - e1 / lower.t);
  return out;
}

std::vector<int> subsample(int first, int last, int count) {
  const int n = last - first + 1;
  if (n < 1) throw ValidationError("window", "empty index range");
  count = std::clamp(count, 1, n);
  if (count == 1) return {first};
  std::vector<int> idx(count);
  for (int j = 0; j < count; ++j)
    idx[j] = first + static_cast<int>(std::llround(static_cast<double>(j) * (n - 1) / (count - 1)));
  return idx;
}

std::vector<SamplePoint> window_points(const StabilizationData& data, const StableWindow& window, int order) {
  if (window.root_index < 0 || window.root_index >= static_cast<int>(data.root_count()))
    throw ValidationError("root_index", "no curve " + std::to_string(window.root_index));
  if (window.first_index < 0 || window.last_index >= static_cast<int>(data.grid_size()) ||
      window.last_index < window.first_index)
    throw ValidationError("window", "index range outside the grid");
  const int count = order > 0 ? std::min(order, window.point_count()) : window.point_count();
  std::vector<SamplePoint> pts;
  for (int i : subsample(window.first_index, window.last_index, count))
    pts.push_back({data.alpha_grid[i], data.curves[window.root_index][i]});
  return pts;
}

namespace {

double max_of(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

}  // namespace

double FitDiagnostics::max_interpolation_residual() const { return max_of(interpolation_residuals); }
double FitDiagnostics::max_leave_one_out_residual() const { return max_of(leave_one_out_residuals); }
double FitDiagnostics::max_off_sample_residual() const { return max_of(off_sample_residuals); }

FitDiagnostics diagnose(const ContinuedFraction& cf, const std::vector<SamplePoint>& window) {
  FitDiagnostics d;
  const int m = cf.size();
  const auto& a = cf.abscissae();
  const auto& e = cf.values();
  const double inf = std::numeric_limits<double>::infinity();
  auto residual = [&](const ContinuedFraction& f, double x, double y) {
    cplx v;
    return evaluate_value(f, cplx(x, 0.0), v) ? std::abs(v - y) : inf;
  };

  double emax = 0.0;
  for (int i = 0; i < m; ++i) {
    d.interpolation_residuals.push_back(residual(cf, a[i], e[i]));
    emax = std::max(emax, std::abs(e[i]));
  }
  for (const auto& p : window) {
    if (std::find(a.begin(), a.end(), p.alpha) != a.end()) continue;
    d.off_sample_alpha.push_back(p.alpha);
    d.off_sample_residuals.push_back(residual(cf, p.alpha, p.energy));
  }
  if (m >= 3) {
    for (int skip = 0; skip < m; ++skip) {
      std::vector<SamplePoint> rest;
      for (int i = 0; i < m; ++i)
        if (i != skip) rest.push_back({a[i], e[i]});
      try {
        d.leave_one_out_residuals.push_back(residual(fit(rest), a[skip], e[skip]));
      } catch (const NumericError&) {
        d.leave_one_out_residuals.push_back(inf);
      }
    }
  }

  for (const cplx& z : cf.coefficients()) d.coefficient_magnitudes.push_back(std::abs(z));
  const auto& mag = d.coefficient_magnitudes;
  if (mag.size() >= 2 && mag.front() > 0.0 && mag.back() > 0.0)
    d.coefficient_growth = std::pow(mag.back() / mag.front(), 1.0 / (mag.size() - 1));

  std::vector<double> xs = a;
  std::sort(xs.begin(), xs.end());
  d.min_spacing = inf;
  for (std::size_t i = 1; i < xs.size(); ++i) d.min_spacing = std::min(d.min_spacing, xs[i] - xs[i - 1]);
  double lo = xs.front(), hi = xs.back();
  for (const auto& p : window) {
    lo = std::min(lo, p.alpha);
    hi = std::max(hi, p.alpha);
  }
  d.window_span = hi - lo;

  if (d.min_spacing < 1e-3 * d.window_span) {
    std::ostringstream os;
    os << "input points too dense: consecutive abscissae " << d.min_spacing << " apart, below 1e-3 of the window span "
       << d.window_span << "; use fewer points";
    d.warnings.push_back(os.str());
  }
  // Interpolation residuals sit at roundoff; compare against the interpolation
  // tolerance so exact data does not trip the ratio test.
  const double floor = std::max(d.max_interpolation_residual(), 1e-10 * emax);
  if (d.max_leave_one_out_residual() > 1e3 * floor) {
    std::ostringstream os;
    os << "leave-one-out residual " << d.max_leave_one_out_residual() << " exceeds 1e3 x interpolation residual "
       << floor << "; the fit is sensitive to individual points (too dense or noisy input)";
    d.warnings.push_back(os.str());
  }
  return d;
}

}  // namespace stabpade
