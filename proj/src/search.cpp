#include "stabpade/search.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stabpade/errors.hpp"

namespace stabpade {

GoldenResult golden_section(const std::function<double(double)>& f, double lo, double hi, double xtol) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  GoldenResult out;
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  out.evaluations = 2;
  while (b - a > xtol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
    ++out.evaluations;
  }
  // compare with the ends so that a monotone objective reports its edge
  const double fa = f(lo), fb = f(hi);
  out.evaluations += 2;
  out.x = fc <= fd ? c : d;
  out.f = std::min(fc, fd);
  if (fa < out.f) out = {lo, fa, false, out.evaluations};
  if (fb < out.f) out = {hi, fb, false, out.evaluations};
  const double edge = 2.0 * xtol;
  if (out.x - lo <= edge || hi - out.x <= edge) out.interior = false;
  return out;
}

std::string AlternatingResult::trace() const {
  std::ostringstream os;
  os.precision(10);
  for (std::size_t k = 0; k < path.size(); ++k)
    os << k << ": alpha=" << path[k].alpha << " theta=" << path[k].theta << "\n";
  return os.str();
}

AlternatingResult alternating_search(const Objective& theta_objective, const Objective& alpha_objective,
                                     ScalingParameter start, const AlternatingOptions& options) {
  start.validate();
  AlternatingResult res;
  res.eta = start;
  res.path.push_back(start);
  double wt = options.theta_half_width, wa = options.alpha_half_width;
  if (options.flat_value >= 0.0) {
    res.theta_objective = theta_objective(start.alpha, start.theta);
    res.alpha_objective = alpha_objective(start.alpha, start.theta);
    if (std::max(res.theta_objective, res.alpha_objective) <= options.flat_value) {
      res.flat = true;
      return res;
    }
  }
  for (int round = 1; round <= options.max_rounds; ++round) {
    const cplx before = res.eta.eta();
    double& alpha = res.eta.alpha;
    double& theta = res.eta.theta;

    const double tlo = std::max(options.theta_min, theta - wt), thi = std::min(options.theta_max, theta + wt);
    const GoldenResult gt =
        golden_section([&](double t) { return theta_objective(alpha, t); }, tlo, thi, options.line_tol);
    theta = gt.x;
    res.theta_objective = gt.f;
    // a bracket clipped by the theta range counts as interior at that end
    const bool t_interior = gt.interior || (gt.x == options.theta_min && tlo == options.theta_min) ||
                            (gt.x == options.theta_max && thi == options.theta_max);
    if (t_interior) wt = std::max(0.5 * wt, 10.0 * options.line_tol);

    const double alo = alpha * (1.0 - wa), ahi = alpha * (1.0 + wa);
    const GoldenResult ga = golden_section([&](double a) { return alpha_objective(a, theta); }, alo, ahi,
                                           options.line_tol * alpha);
    alpha = ga.x;
    res.alpha_objective = ga.f;
    if (ga.interior) wa = std::max(0.5 * wa, 10.0 * options.line_tol);

    res.rounds = round;
    res.path.push_back(res.eta);
    const double moved = std::abs(res.eta.eta() - before);
    const double scale = options.relative ? std::max(1.0, std::abs(before)) : 1.0;
    if (options.flat_value >= 0.0 && std::max(res.theta_objective, res.alpha_objective) <= options.flat_value) {
      res.flat = true;
      return res;
    }
    if (moved < options.tol * scale) return res;
  }
  std::ostringstream os;
  os << "alternating search did not converge in " << options.max_rounds << " rounds (last eta = "
     << res.eta.alpha << " e^{i " << res.eta.theta << "})";
  throw ConvergenceError(os.str(), res.trace());
}

}  // namespace stabpade
