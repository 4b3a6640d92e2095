// Acceptance suite: one PASS/FAIL line per headline criterion, exit status 1
// if any fails.  Everything runs on the benchmark model (J = 0.8,
// lambda = 0.1, harmonic-oscillator basis of 60 functions) or on closed-form
// fixtures whose answers are known.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <sys/wait.h>

#include "stabpade/parallel.hpp"
#include "stabpade/pipeline.hpp"
#include "stabpade/ucs.hpp"

using namespace stabpade;

namespace {

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::printf("%s  %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

// Runs a criterion; an exception is a failure with its message.
template <class F>
void criterion(const std::string& name, F&& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(false, name, std::string("threw: ") + e.what());
  }
}

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

const std::vector<double> kAlpha = linear_grid(0.6, 1.6, 101);

// The benchmark analysis shared by several criteria: stabilization, windows,
// and the best stationary point of every window above the threshold.
struct Benchmark {
  Session session;
  DetectionRecord detection;
  std::vector<StationaryRecord> per_window;  // best point of each window, in window order
  std::vector<StationaryRecord> all_points;  // every point of those fits
  double seconds = 0.0;                      // resonance plus crosscheck, one thread
  CrosscheckRecord headline;
};

Benchmark run_benchmark() {
  Benchmark b;
  Config c;
  c.threads = 1;
  const auto t0 = std::chrono::steady_clock::now();
  b.session = new_session(benchmark_model(), ho_basis(60), Units::model_units, "acceptance");
  const StationaryRecord r = resonance(b.session, kAlpha, c);
  b.headline = crosscheck(b.session, r.id, c);
  b.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  c.threads = 0;
  set_thread_count(0);
  b.detection = b.session.detections.back();
  const double threshold = *benchmark_model().threshold();
  for (const auto& w : b.session.windows) {
    if (w.parent != b.detection.id || w.window.mean_energy <= threshold) continue;
    const FitRecord f = fit_window(b.session, FitRequest{w.id, {}, std::nullopt, false}, c);
    const StationaryOutcome out = find_stationary_points(b.session, f.id, std::nullopt, c);
    if (const StationaryRecord* best = best_stationary(out.points)) b.per_window.push_back(*best);
    for (const auto& p : out.points) b.all_points.push_back(p);
  }
  return b;
}

void pade_ucs_agreement(Benchmark& b) {
  Config c;
  double worst = b.headline.distance;
  for (const auto& p : b.all_points) worst = std::max(worst, crosscheck(b.session, p.id, c).distance);
  std::ostringstream os;
  os << b.all_points.size() << " stationary points from " << b.per_window.size() << " windows, max |E_pade - E_ucs| "
     << sci(worst) << " (limit 5e-4); headline run " << sci(b.seconds) << " s on one thread (limit 60 s)";
  report(!b.all_points.empty() && worst <= 5e-4 && b.seconds < 60.0, "Pade-UCS agreement", os.str());
}

void interpolation_exactness() {
  // plateau, slope and ripple: the shape of a stabilization curve in a window
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> size(3, 25);
  double worst = 0.0;
  int poles = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const double c = 0.5 + 2 * u(rng), s = 0.2 * (u(rng) - 0.5), w = 0.05 * u(rng), k = 1 + 6 * u(rng);
    const double lo = 0.6 + 0.5 * u(rng), span = 0.1 + 0.4 * u(rng);
    std::vector<SamplePoint> pts;
    for (double a : linear_grid(lo, lo + span, size(rng))) pts.push_back({a, c + s * (a - lo) + w * std::sin(k * a)});
    const ContinuedFraction cf = fit(pts);
    double emax = 0.0;
    for (const auto& p : pts) emax = std::max(emax, std::abs(p.energy));
    for (const auto& p : pts) {
      const PadeValue v = evaluate(cf, p.alpha);
      if (v.pole) ++poles;
      else worst = std::max(worst, std::abs(v.value - p.energy) / emax);
    }
  }
  report(poles == 0 && worst <= 1e-10, "interpolation exactness",
         "100 random windows, max residual " + sci(worst) + " x max|E| (limit 1e-10)");
}

void rational_recovery() {
  const auto f = [](cplx a) { return (a * a + 2.0) / (a * a * a + a + 5.0); };
  std::vector<SamplePoint> pts;
  for (double a : linear_grid(1.0, 2.0, 9)) pts.push_back({a, f(a).real()});
  const ContinuedFraction cf = fit(pts);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> re(1.0, 2.0), im(-0.5, 0.5);
  double worst_real = 0.0, worst_complex = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double a = re(rng);
    worst_real = std::max(worst_real, std::abs(evaluate(cf, a).value - f(a)) / std::abs(f(a)));
  }
  for (int i = 0; i < 20; ++i) {
    const cplx eta(re(rng), im(rng));
    worst_complex = std::max(worst_complex, std::abs(evaluate(cf, eta).value - f(eta)) / std::abs(f(eta)));
  }
  report(worst_real <= 1e-8 && worst_complex <= 1e-8, "rational recovery",
         "(2,3) rational from 9 points, max relative error " + sci(worst_real) + " at 50 real and " +
             sci(worst_complex) + " at 20 complex points (limit 1e-8)");
}

void two_theta_rotation() {
  const ModelSpec model = benchmark_model();
  const double threshold = *model.threshold();
  UcsSweepOptions options;
  options.target_energy = threshold + 10.0 * (barrier_top(model) - threshold);
  const auto t = ucs_sweep(model, build_basis(ho_basis(60)), 1.0, linear_grid(0.0, 0.15, 16), options);
  const double slope = rotation_slope(t, threshold);
  report(std::abs(slope + 2.0) <= 0.05 * 2.0, "2theta rotation",
         "continuum arg(E - threshold) slope " + sci(slope) + " over theta <= 0.15 (want -2 within 5%)");
}

void bound_state_invariance() {
  const BasisSet basis = build_basis(ho_basis(40));
  const auto grid = linear_grid(0.0, 0.3, 31);
  double drift = 0.0, exact = 0.0;
  for (double alpha : {0.8, 1.0, 1.3})
    for (int n = 0; n < 5; ++n) {
      UcsSweepOptions options;
      options.root_index = n;
      const auto t = ucs_sweep(harmonic_model(), basis, alpha, grid, options);
      for (const cplx& e : t.tracked_energy) drift = std::max(drift, std::abs(e - t.tracked_energy[0]));
      exact = std::max(exact, std::abs(t.tracked_energy[0] - (n + 0.5)));
    }
  report(drift < 1e-6, "bound-state invariance",
         "harmonic levels 0-4 at alpha 0.8, 1.0, 1.3: max drift " + sci(drift) + " over theta in [0, 0.3] (limit 1e-6); "
         "distance from n + 1/2 " + sci(exact));
}

// Index of the smallest step between consecutive trajectory points.
int min_spacing_index(const Trajectory& t) {
  int best = -1;
  double smallest = INFINITY;
  for (std::size_t k = 0; k + 1 < t.energies.size(); ++k) {
    const double d = std::abs(t.energies[k + 1] - t.energies[k]);
    if (d < smallest) {
      smallest = d;
      best = static_cast<int>(k);
    }
  }
  return best;
}

void cusp_coincidence(const Benchmark& b) {
  // recomputed here from each fit, not read from the stored cusp data
  const double step = 0.01;
  const int half = 20;
  int ok = 0;
  std::string bad;
  for (const auto& p : b.all_points) {
    const FitRecord* f = b.session.find_fit(p.parent);
    const ScalingParameter eta = p.point.eta_star;
    std::vector<double> tg, ag;
    for (int k = -half; k <= half; ++k) {
      if (const double t = eta.theta + k * step; t >= 0.0 && t <= kMaxTheta) tg.push_back(t);
      if (const double a = eta.alpha + k * step; a > 0.0) ag.push_back(a);
    }
    const Trajectory tt = theta_trajectory(f->fraction, eta.alpha, tg);
    const Trajectory at = alpha_trajectory(f->fraction, eta.theta, ag);
    // a spacing between points k and k+1 sits at the midpoint of the pair
    const int kt = min_spacing_index(tt), ka = min_spacing_index(at);
    const bool here = kt >= 0 && ka >= 0 && std::abs(0.5 * (tt.grid[kt] + tt.grid[kt + 1]) - eta.theta) <= step &&
                      std::abs(0.5 * (at.grid[ka] + at.grid[ka + 1]) - eta.alpha) <= step;
    if (here)
      ++ok;
    else
      bad += " " + p.id;
  }
  report(!b.all_points.empty() && ok == static_cast<int>(b.all_points.size()), "cusp coincidence",
         std::to_string(ok) + "/" + std::to_string(b.all_points.size()) +
             " stationary points have both trajectory minima within one step (0.01) of eta*" + bad);
}

void window_independence(const Benchmark& b) {
  double spread = 0.0;
  std::string energies;
  for (std::size_t i = 0; i < b.per_window.size(); ++i) {
    energies += (i ? ", " : "") + format_double(b.per_window[i].point.energy.real());
    for (std::size_t j = 0; j < i; ++j)
      spread = std::max(spread, std::abs(b.per_window[i].point.energy - b.per_window[j].point.energy));
  }
  report(b.per_window.size() >= 2 && spread <= 5e-4, "window independence",
         std::to_string(b.per_window.size()) + " disjoint windows above threshold, Re E = " + energies +
             "; max pairwise |dE| " + sci(spread) + " (limit 5e-4)");
}

void puiseux_exponent_check(const Benchmark& b) {
  // closed form: E = +-sqrt(eta - eta0)
  const cplx eta0(0.9, 0.05);
  const MatrixFamily toy = [&](cplx eta) {
    MatrixC h(2, 2);
    h << 0.0, 1.0, eta - eta0, 0.0;
    return ComplexMatrixPair{h, std::nullopt};
  };
  const auto tbp = locate_branch_point(toy, cplx(0.95, 0.02), cplx(0.0, 0.0));
  const double p_toy = puiseux_exponent(puiseux_samples(toy, tbp.eta_bp, tbp.energy_bp, {1e-4, 1e-3, 1e-2}), tbp.eta_bp);

  // behind the avoided crossing of the resonance curve near alpha = 1.0136
  const StabilizationData& data = b.session.stabilization->data;
  const AvoidedCrossing* crossing = nullptr;
  for (const auto& c : b.detection.report.crossings)
    if (std::abs(c.alpha_at_min_gap - 1.0136) < 2e-3 && c.min_gap > 5e-3) crossing = &c;
  if (!crossing) {
    report(false, "Puiseux exponent", "no avoided crossing detected near alpha = 1.0136");
    return;
  }
  const BasisSet basis = build_basis(ho_basis(60));
  const MatrixFamily family = model_family(benchmark_model(), basis);
  const auto bp = locate_branch_point(family, branch_point_guess(data, *crossing),
                                      data.curves[crossing->curve_a][crossing->grid_index]);
  const double p_bench =
      puiseux_exponent(puiseux_samples(family, bp.eta_bp, bp.energy_bp, {1e-5, 1e-4, 1e-3}), bp.eta_bp);
  std::ostringstream os;
  os << "gap exponent " << sci(p_toy) << " on the 2x2 fixture, " << sci(p_bench) << " at the benchmark branch point "
     << format_double(bp.eta_bp.real()) << (bp.eta_bp.imag() < 0 ? " - " : " + ")
     << format_double(std::abs(bp.eta_bp.imag())) << "i (want 0.5 +- 0.02)";
  report(std::abs(p_toy - 0.5) <= 0.02 && std::abs(p_bench - 0.5) <= 0.02, "Puiseux exponent", os.str());
}

void landscape_consistency(const Benchmark& b) {
  const StationaryRecord& res = b.per_window.front();
  const cplx target = res.point.energy;
  const auto ag = linear_grid(0.6, 1.6, 41), tg = linear_grid(0.0, kMaxTheta, 20);
  const double da = ag[1] - ag[0], dt = tg[1] - tg[0];
  const BasisSet basis = build_basis(ho_basis(60));
  const Config c;
  const DerivativeLandscape land = derivative_landscape(benchmark_model(), basis, ag, tg, target, c.ucs.fd_step);

  // minima: a direct search started in the argmin cell must stay in it
  bool minima_ok = true;
  std::ostringstream os;
  for (const auto& [name, cell] : {std::pair{"|dE/dtheta|", land.argmin_theta()}, {"|dE/dalpha|", land.argmin_alpha()}}) {
    const ScalingParameter seed{ag[cell.alpha_index], tg[cell.theta_index]};
    const UcsStationaryPoint sp = ucs_stationary(benchmark_model(), basis, seed, target, c.ucs);
    const bool in = std::abs(sp.eta_star.alpha - seed.alpha) <= da && std::abs(sp.eta_star.theta - seed.theta) <= dt;
    minima_ok = minima_ok && in;
    os << name << " min at (" << format_double(seed.alpha) << ", " << sci(seed.theta) << "), ucs at ("
       << sci(sp.eta_star.alpha) << ", " << sci(sp.eta_star.theta) << ")" << (in ? "; " : " OUTSIDE; ");
  }

  // ridges: local maxima of |dE/dalpha| along theta = 0 standing 10x above the row median
  std::vector<double> row;
  for (std::size_t i = 0; i < ag.size(); ++i) row.push_back(land.d_alpha[i][0]);
  std::vector<double> sorted = row;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double median = sorted[sorted.size() / 2];
  std::vector<double> ridges;
  for (std::size_t i = 1; i + 1 < row.size(); ++i)
    if (row[i] > row[i - 1] && row[i] >= row[i + 1] && row[i] > 10.0 * median) ridges.push_back(ag[i]);

  // crossings on the resonance curve: the pair meets near Re E
  const StabilizationData& data = b.session.stabilization->data;
  std::vector<double> crossings;
  for (const auto& x : b.detection.report.crossings) {
    const double mid = 0.5 * (data.curves[x.curve_a][x.grid_index] + data.curves[x.curve_b][x.grid_index]);
    if (std::abs(mid - target.real()) < 0.02 && x.alpha_at_min_gap >= ag.front() && x.alpha_at_min_gap <= ag.back())
      crossings.push_back(x.alpha_at_min_gap);
  }
  const auto near = [&](double a, const std::vector<double>& set) {
    return std::any_of(set.begin(), set.end(), [&](double s) { return std::abs(s - a) <= da; });
  };
  bool ridges_ok = !ridges.empty();
  for (double r : ridges) ridges_ok = ridges_ok && near(r, crossings);
  for (double x : crossings) ridges_ok = ridges_ok && near(x, ridges);
  os << "ridges at alpha";
  for (double r : ridges) os << " " << format_double(r);
  os << " vs resonance-curve crossings at";
  for (double x : crossings) os << " " << sci(x);
  os << " (one cell = " << format_double(da) << ")";
  report(minima_ok && ridges_ok, "landscape consistency", os.str());
}

std::string run_cli(const std::string& args, int& code) {
  FILE* p = popen((std::string(STABPADE_CLI) + " " + args + " 2>/dev/null").c_str(), "r");
  std::string out;
  if (!p) {
    code = -1;
    return out;
  }
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) out.append(buf.data(), n);
  const int status = pclose(p);
  code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return out;
}

void determinism() {
  const std::string args = "resonance --model benchmark --basis ho:60 --alpha 0.6:1.6:101";
  int c1 = 0, c2 = 0, c3 = 0;
  const std::string a = run_cli(args, c1), b = run_cli(args, c2), one = run_cli(args + " --threads 1", c3);
  const bool ok = c1 == 0 && c2 == 0 && c3 == 0 && !a.empty() && a == b && a == one;
  report(ok, "determinism",
         "two runs of '" + args + "' " + (a == b ? "byte-identical" : "DIFFER") + " (" + std::to_string(a.size()) +
             " bytes), single-thread run " + (a == one ? "identical" : "DIFFERS"));
}

}  // namespace

int main() {
  Benchmark bench;
  bool have_bench = true;
  try {
    bench = run_benchmark();
  } catch (const std::exception& e) {
    have_bench = false;
    report(false, "benchmark analysis", std::string("threw: ") + e.what());
  }

  criterion("Pade-UCS agreement", [&] {
    if (have_bench) pade_ucs_agreement(bench);
  });
  criterion("interpolation exactness", interpolation_exactness);
  criterion("rational recovery", rational_recovery);
  criterion("2theta rotation", two_theta_rotation);
  criterion("bound-state invariance", bound_state_invariance);
  criterion("cusp coincidence", [&] {
    if (have_bench) cusp_coincidence(bench);
  });
  criterion("window independence", [&] {
    if (have_bench) window_independence(bench);
  });
  criterion("Puiseux exponent", [&] {
    if (have_bench) puiseux_exponent_check(bench);
  });
  criterion("landscape consistency", [&] {
    if (have_bench) landscape_consistency(bench);
  });
  criterion("determinism", determinism);

  std::printf("summary: %d of 10 criteria failing\n", failures);
  return failures ? 1 : 0;
}
