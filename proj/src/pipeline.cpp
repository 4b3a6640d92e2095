#include "stabpade/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "stabpade/parallel.hpp"

namespace stabpade {

namespace {

double to_double(const std::string& key, const std::string& s) {
  double x = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(x))
    throw ValidationError(key, "'" + s + "' is not a number");
  return x;
}

int to_int(const std::string& key, const std::string& s) {
  int x = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw ValidationError(key, "'" + s + "' is not an integer");
  return x;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

struct Entry {
  std::function<std::string(const Config&)> get;
  std::function<void(Config&, const std::string&, const std::string&)> set;
};

template <class G>
Entry real_entry(G Config::*group, double G::*member) {
  return {[=](const Config& c) { return format_double(c.*group.*member); },
          [=](Config& c, const std::string& k, const std::string& v) { c.*group.*member = to_double(k, v); }};
}

template <class G>
Entry int_entry(G Config::*group, int G::*member) {
  return {[=](const Config& c) { return std::to_string(c.*group.*member); },
          [=](Config& c, const std::string& k, const std::string& v) { c.*group.*member = to_int(k, v); }};
}

const std::map<std::string, Entry>& entries() {
  static const std::map<std::string, Entry> table = [] {
    std::map<std::string, Entry> t;
    t["sweep.tracked_roots"] = int_entry(&Config::sweep, &SweepOptions::tracked_roots);
    t["sweep.min_quality"] = real_entry(&Config::sweep, &SweepOptions::min_quality);
    t["windows.flatness_tol"] = real_entry(&Config::windows, &WindowOptions::flatness_tol);
    t["windows.min_points"] = int_entry(&Config::windows, &WindowOptions::min_points);
    t["windows.guard_margin"] = int_entry(&Config::windows, &WindowOptions::guard_margin);
    t["windows.gap_tol"] = real_entry(&Config::windows, &WindowOptions::gap_tol);
    t["fit.order"] = {[](const Config& c) { return std::to_string(c.fit_order); },
                      [](Config& c, const std::string& k, const std::string& v) { c.fit_order = to_int(k, v); }};
    t["stationary.strategy"] = {
        [](const Config& c) { return to_string(c.stationary.strategy); },
        [](Config& c, const std::string&, const std::string& v) { c.stationary.strategy = stationary_strategy_from_string(v); }};
    t["stationary.seeds_alpha"] = int_entry(&Config::stationary, &StationaryOptions::seeds_alpha);
    t["stationary.seeds_theta"] = int_entry(&Config::stationary, &StationaryOptions::seeds_theta);
    t["stationary.max_newton_steps"] = int_entry(&Config::stationary, &StationaryOptions::max_newton_steps);
    t["stationary.dedup_distance"] = real_entry(&Config::stationary, &StationaryOptions::dedup_distance);
    t["stationary.error_tol"] = real_entry(&Config::stationary, &StationaryOptions::error_tol);
    t["stationary.derivative_tol"] = real_entry(&Config::stationary, &StationaryOptions::derivative_tol);
    t["stationary.scan_tol"] = real_entry(&Config::stationary, &StationaryOptions::scan_tol);
    t["stationary.trajectory_half_points"] = int_entry(&Config::stationary, &StationaryOptions::trajectory_half_points);
    t["stationary.trajectory_theta_step"] = real_entry(&Config::stationary, &StationaryOptions::trajectory_theta_step);
    t["stationary.trajectory_alpha_step"] = real_entry(&Config::stationary, &StationaryOptions::trajectory_alpha_step);
    t["stationary.width"] = {
        [](const Config& c) { return to_string(c.stationary.width); },
        [](Config& c, const std::string&, const std::string& v) { c.stationary.width = width_convention_from_string(v); }};
    t["ucs.fd_step"] = real_entry(&Config::ucs, &UcsStationaryOptions::fd_step);
    t["ucs.tol"] = real_entry(&Config::ucs, &UcsStationaryOptions::tol);
    t["ucs.max_rounds"] = int_entry(&Config::ucs, &UcsStationaryOptions::max_rounds);
    t["ucs.derivative_tol"] = real_entry(&Config::ucs, &UcsStationaryOptions::derivative_tol);
    t["ucs.flat_fraction"] = real_entry(&Config::ucs, &UcsStationaryOptions::flat_fraction);
    t["ucs.theta_half_width"] = real_entry(&Config::ucs, &UcsStationaryOptions::theta_half_width);
    t["ucs.alpha_half_width"] = real_entry(&Config::ucs, &UcsStationaryOptions::alpha_half_width);
    t["ucs.line_tol"] = real_entry(&Config::ucs, &UcsStationaryOptions::line_tol);
    t["crosscheck.tolerance"] = {
        [](const Config& c) { return format_double(c.crosscheck_tolerance); },
        [](Config& c, const std::string& k, const std::string& v) { c.crosscheck_tolerance = to_double(k, v); }};
    t["landscape.theta"] = {[](const Config& c) { return c.landscape_theta; },
                            [](Config& c, const std::string&, const std::string& v) {
                              parse_grid(v);
                              c.landscape_theta = v;
                            }};
    t["landscape.alpha_points"] = {
        [](const Config& c) { return std::to_string(c.landscape_alpha_points); },
        [](Config& c, const std::string& k, const std::string& v) { c.landscape_alpha_points = to_int(k, v); }};
    t["threads"] = {[](const Config& c) { return std::to_string(c.threads); },
                    [](Config& c, const std::string& k, const std::string& v) {
                      const int n = to_int(k, v);
                      if (n < 0) throw ValidationError(k, "must be >= 0");
                      c.threads = static_cast<unsigned>(n);
                    }};
    return t;
  }();
  return table;
}

template <class R>
const R* find_id(const std::vector<R>& v, const std::string& id) {
  for (const auto& r : v)
    if (r.id == id) return &r;
  return nullptr;
}

// Appends r unless a record with its id exists; returns the stored record.
template <class R>
R append(std::vector<R>& v, R r) {
  if (const R* old = find_id(v, r.id)) return *old;
  v.push_back(r);
  return r;
}

const ComputedSource& computed_source(const Session& session, const char* step) {
  if (!session.computed)
    throw ValidationError("session", std::string(step) + " needs a model; this session holds imported data");
  return *session.computed;
}

const StabilizationRecord& require_stabilization(const Session& session) {
  if (!session.stabilization) throw ValidationError("session", "no stabilization data; run stabilize first");
  return *session.stabilization;
}

const FitRecord& require_fit(const Session& session, const std::string& fit_id) {
  const FitRecord* f = session.find_fit(fit_id);
  if (!f) throw ValidationError("fit_id", "no fit '" + fit_id + "' in session " + session.id);
  return *f;
}

}  // namespace

const std::vector<std::string>& Config::keys() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> out;
    for (const auto& [key, e] : entries()) out.push_back(key);
    return out;
  }();
  return k;
}

std::string Config::get(const std::string& key) const {
  const auto it = entries().find(key);
  if (it == entries().end()) throw ValidationError(key, "unknown configuration key");
  return it->second.get(*this);
}

void Config::set(const std::string& key, const std::string& value) {
  const auto it = entries().find(key);
  if (it == entries().end()) throw ValidationError(key, "unknown configuration key");
  it->second.set(*this, key, value);
}

std::string show_config(const Config& config) {
  std::string out;
  for (const auto& key : Config::keys()) out += key + " = " + config.get(key) + "\n";
  return out;
}

Config parse_config(const std::string& text, Config base) {
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(raw.substr(0, raw.find('#')));
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ParseError(line, "config", "expected 'key = value'");
    const std::string key = trim(s.substr(0, eq));
    try {
      base.set(key, trim(s.substr(eq + 1)));
    } catch (const ParseError&) {
      throw;
    } catch (const ValidationError& e) {
      throw ParseError(line, key, e.what());
    }
  }
  return base;
}

Config load_config(const std::string& path, Config base) { return parse_config(read_file(path), std::move(base)); }

std::vector<double> parse_grid(const std::string& text) {
  const auto a = text.find(':');
  const auto b = a == std::string::npos ? a : text.find(':', a + 1);
  if (b == std::string::npos || text.find(':', b + 1) != std::string::npos)
    throw ValidationError("grid", "'" + text + "' is not start:stop:count");
  const double start = to_double("grid", trim(text.substr(0, a)));
  const double stop = to_double("grid", trim(text.substr(a + 1, b - a - 1)));
  const int count = to_int("grid", trim(text.substr(b + 1)));
  return linear_grid(start, stop, count);
}

std::string grid_to_string(const std::vector<double>& grid) {
  if (grid.empty()) return "";
  return format_double(grid.front()) + ":" + format_double(grid.back()) + ":" + std::to_string(grid.size());
}

namespace {

std::vector<double> number_list(const std::string& field, const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    out.push_back(to_double(field, trim(text.substr(start, comma - start))));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

ModelSpec parse_model(const std::string& text) {
  if (text == "benchmark") return benchmark_model();
  if (text == "harmonic") return harmonic_model();
  if (text == "free") return free_particle_model();
  const auto colon = text.find(':');
  if (colon == std::string::npos)
    throw ValidationError("model", "'" + text + "' is not benchmark, harmonic, free or family:params");
  ModelSpec m;
  m.family = potential_family_from_string(text.substr(0, colon));
  m.parameters = number_list("model", text.substr(colon + 1));
  m.validate();
  return m;
}

BasisSpec parse_basis(const std::string& text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto colon = text.find(':', start);
    parts.push_back(text.substr(start, colon - start));
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  BasisSpec b;
  if (parts[0] == "ho" && (parts.size() == 2 || parts.size() == 3)) {
    b = ho_basis(to_int("basis", parts[1]), parts.size() == 3 ? to_double("basis", parts[2]) : 1.0);
  } else if (parts[0] == "etg" && parts.size() == 4) {
    b = even_tempered_basis(to_int("basis", parts[1]), to_double("basis", parts[2]), to_double("basis", parts[3]));
  } else {
    throw ValidationError("basis", "'" + text + "' is not ho:N[:omega] or etg:N:beta0:ratio");
  }
  b.validate();
  return b;
}

StabilizationRecord stabilize(Session& session, const std::vector<double>& alpha_grid, const Config& config) {
  const ComputedSource& src = computed_source(session, "stabilize");
  if (session.stabilization) {
    if (session.stabilization->alpha_grid == alpha_grid) return *session.stabilization;
    throw ValidationError("alpha_grid", "session " + session.id + " is already stabilized on grid " +
                                            grid_to_string(session.stabilization->alpha_grid) +
                                            "; start a new session for another grid");
  }
  set_thread_count(config.threads);
  StabilizationRecord rec;
  rec.alpha_grid = alpha_grid;
  rec.data = sweep(src.model, build_basis(src.basis), alpha_grid, config.sweep);
  rec.id = record_id("stab", json{{"parent", session.id}, {"data", rec.data}});
  session.stabilization = rec;
  return rec;
}

DetectionRecord detect(Session& session, const Config& config) {
  const StabilizationRecord& stab = require_stabilization(session);
  DetectionRecord rec;
  rec.parent = stab.id;
  rec.options = config.windows;
  rec.report = detect_windows(stab.data, config.windows);
  rec.id = record_id("detect", json{{"parent", rec.parent}, {"options", rec.options}, {"report", rec.report}});
  rec = append(session.detections, rec);
  for (const auto& w : rec.report.windows) {
    WindowRecord wr{"", rec.id, w};
    wr.id = record_id("window", json{{"parent", wr.parent}, {"window", w}});
    append(session.windows, wr);
  }
  return rec;
}

FitRecord fit_window(Session& session, const FitRequest& request, const Config& config) {
  const StabilizationRecord& stab = require_stabilization(session);
  const WindowRecord* w = session.find_window(request.window_id);
  if (!w) throw ValidationError("window_id", "no window '" + request.window_id + "' in session " + session.id);
  const DetectionRecord* det = find_id(session.detections, w->parent);
  const int order = request.order.value_or(config.fit_order);
  if (order < 2) throw ValidationError("order", "must be >= 2");

  std::vector<int> idx = request.point_indices;
  if (idx.empty()) idx = subsample(w->window.first_index, w->window.last_index, std::min(order, w->window.point_count()));
  if (static_cast<int>(idx.size()) < 2) throw ValidationError("point_indices", "need at least 2 points");
  const int G = static_cast<int>(stab.data.grid_size());
  for (int i : idx)
    if (i < 0 || i >= G) throw ValidationError("point_indices", "index " + std::to_string(i) + " outside the grid");
  if (request.order && !request.point_indices.empty() && static_cast<int>(idx.size()) != order)
    throw ValidationError("order", "differs from the number of point indices");

  const int root = w->window.root_index;
  const auto [lo, hi] = std::minmax_element(idx.begin(), idx.end());
  std::vector<AvoidedCrossing> hits;
  if (det) hits = crossings_in_range(det->report.crossings, stab.data.alpha_grid, root, *lo, *hi, det->options.guard_margin);
  if (!hits.empty() && !request.force) {
    std::ostringstream os;
    os << "points " << *lo << ".." << *hi << " of curve " << root << " include the guard band of " << hits.size()
       << " avoided crossing(s), first near alpha = " << format_double(hits.front().alpha_at_min_gap)
       << "; choose points inside a stable window or pass force";
    throw CrossingGuardError(hits, os.str());
  }

  std::vector<SamplePoint> pts;
  for (int i : idx) pts.push_back({stab.data.alpha_grid[i], stab.data.curves[root][i]});
  FitRecord rec;
  rec.parent = w->id;
  rec.point_indices = idx;
  rec.order = static_cast<int>(idx.size());
  rec.forced = !hits.empty();
  rec.overridden = hits;
  rec.fraction = fit(pts);
  rec.id = record_id("fit", json{{"parent", rec.parent},
                                 {"point_indices", rec.point_indices},
                                 {"forced", rec.forced},
                                 {"fraction", rec.fraction}});
  return append(session.fits, rec);
}

TrajectoryRecord add_trajectory(Session& session, const std::string& fit_id, TrajectoryKind kind, double fixed_value,
                                const std::vector<double>& grid) {
  const FitRecord& f = require_fit(session, fit_id);
  TrajectoryRecord rec;
  rec.parent = f.id;
  rec.trajectory = kind == TrajectoryKind::theta_trajectory ? theta_trajectory(f.fraction, fixed_value, grid)
                                                            : alpha_trajectory(f.fraction, fixed_value, grid);
  rec.id = record_id("traj", json{{"parent", rec.parent}, {"trajectory", rec.trajectory}});
  return append(session.trajectories, rec);
}

StationaryOutcome find_stationary_points(Session& session, const std::string& fit_id,
                                         const std::optional<SeedRegion>& region, const Config& config) {
  const FitRecord f = require_fit(session, fit_id);
  set_thread_count(config.threads);
  const SeedRegion r = region.value_or(default_seed_region(f.fraction));
  const StationaryResult res = find_stationary(f.fraction, r, config.stationary, f.parent);
  StationaryOutcome out;
  out.diagnostics = res.diagnostics;
  LandscapeRecord land;
  land.parent = f.id;
  land.kind = "pade";
  land.landscape = res.landscape;
  land.id = record_id("landscape", json{{"parent", land.parent}, {"kind", land.kind}, {"landscape", land.landscape}});
  out.landscape = append(session.landscapes, land);
  for (const auto& p : res.points) {
    StationaryRecord rec;
    rec.parent = f.id;
    rec.region = r;
    rec.point = p;
    rec.id = record_id("stationary", json{{"parent", rec.parent}, {"region", r}, {"point", p}});
    out.points.push_back(append(session.stationary_points, rec));
  }
  return out;
}

CrosscheckRecord crosscheck(Session& session, const std::string& stationary_id, const Config& config) {
  const ComputedSource& src = computed_source(session, "crosscheck");
  const StationaryRecord* p = session.find_stationary(stationary_id);
  if (!p) throw ValidationError("stationary_id", "no stationary point '" + stationary_id + "'");
  set_thread_count(config.threads);
  CrosscheckRecord rec;
  rec.parent = p->id;
  rec.ucs = ucs_stationary(src.model, build_basis(src.basis), p->point.eta_star, p->point.energy, config.ucs);
  rec.distance = std::abs(rec.ucs.energy - p->point.energy);
  rec.id = record_id("crosscheck", json{{"parent", rec.parent}, {"ucs", rec.ucs}});
  return append(session.crosschecks, rec);
}

LandscapeRecord add_pade_landscape(Session& session, const std::string& fit_id, const std::vector<double>& alpha_grid,
                                   const std::vector<double>& theta_grid) {
  const FitRecord& f = require_fit(session, fit_id);
  LandscapeRecord rec;
  rec.parent = f.id;
  rec.kind = "pade";
  rec.landscape = pade_landscape(f.fraction, alpha_grid, theta_grid);
  rec.id = record_id("landscape", json{{"parent", rec.parent}, {"kind", rec.kind}, {"landscape", rec.landscape}});
  return append(session.landscapes, rec);
}

LandscapeRecord add_ucs_landscape(Session& session, const std::vector<double>& alpha_grid,
                                  const std::vector<double>& theta_grid, cplx target, const Config& config) {
  const ComputedSource& src = computed_source(session, "ucs landscape");
  set_thread_count(config.threads);
  LandscapeRecord rec;
  rec.parent = session.id;
  rec.kind = "ucs";
  rec.target = target;
  rec.landscape = derivative_landscape(src.model, build_basis(src.basis), alpha_grid, theta_grid, target,
                                       config.ucs.fd_step);
  rec.id = record_id("landscape", json{{"parent", rec.parent},
                                       {"kind", rec.kind},
                                       {"target", complex_to_json(target)},
                                       {"landscape", rec.landscape}});
  return append(session.landscapes, rec);
}

std::vector<double> landscape_alpha_grid(const FitRecord& fit, const Config& config) {
  const SeedRegion r = default_seed_region(fit.fraction);
  return linear_grid(r.alpha_lo, r.alpha_hi, config.landscape_alpha_points);
}

const LandscapeRecord* find_landscape(const Session& session, const std::string& kind, const std::string& parent,
                                      cplx target, const std::vector<double>& alpha_grid,
                                      const std::vector<double>& theta_grid) {
  for (const auto& r : session.landscapes)
    if (r.kind == kind && r.parent == parent && r.target == target && r.landscape.alpha_grid == alpha_grid &&
        r.landscape.theta_grid == theta_grid)
      return &r;
  return nullptr;
}

BranchPointRecord add_branch_point(Session& session, const std::string& detection_id, int crossing_index) {
  const ComputedSource& src = computed_source(session, "branch point search");
  const StabilizationRecord& stab = require_stabilization(session);
  const DetectionRecord* det = find_id(session.detections, detection_id);
  if (!det) throw ValidationError("detection_id", "no detection '" + detection_id + "'");
  if (crossing_index < 0 || crossing_index >= static_cast<int>(det->report.crossings.size()))
    throw ValidationError("crossing", "index outside the detected crossings");
  const AvoidedCrossing& c = det->report.crossings[crossing_index];
  const MatrixFamily family = model_family(src.model, build_basis(src.basis));
  const BranchPointSearch bp =
      locate_branch_point(family, branch_point_guess(stab.data, c), stab.data.curves[c.curve_a][c.grid_index]);
  BranchPointRecord rec;
  rec.parent = det->id;
  // close-in samples, where the two-term Puiseux form holds
  rec.estimate = puiseux_fit(puiseux_samples(family, bp.eta_bp, bp.energy_bp, {1e-7}, 8));
  rec.id = record_id("branch", json{{"parent", rec.parent}, {"crossing", crossing_index}, {"estimate", rec.estimate}});
  return append(session.branch_points, rec);
}

const StationaryRecord* best_stationary(const std::vector<StationaryRecord>& points) {
  const StationaryRecord* best = nullptr;
  for (const auto& p : points)
    if (!best || p.point.pade_error < best->point.pade_error ||
        (p.point.pade_error == best->point.pade_error && p.point.eta_star.alpha < best->point.eta_star.alpha))
      best = &p;
  return best;
}

StationaryRecord resonance(Session& session, const std::vector<double>& alpha_grid, const Config& config,
                           const std::optional<std::string>& window_id) {
  // imported sessions arrive stabilized
  if (session.computed) stabilize(session, alpha_grid, config);
  const DetectionRecord det = detect(session, config);
  std::string wid;
  if (window_id) {
    wid = *window_id;
  } else {
    // windows below the continuum threshold hold bound states, not resonances
    const std::optional<double> threshold = session.computed ? session.computed->model.threshold() : std::nullopt;
    const StableWindow* pick = nullptr;
    for (const auto& w : det.report.windows)
      if (!threshold || w.mean_energy > *threshold) {
        pick = &w;
        break;
      }
    if (!pick) {
      std::string msg = threshold ? "no stable window found above the threshold" : "no stable window found";
      for (const auto& d : det.report.diagnostics) msg += "; " + d;
      throw NumericError(msg);
    }
    wid = record_id("window", json{{"parent", det.id}, {"window", *pick}});
  }
  const FitRecord f = fit_window(session, FitRequest{wid, {}, std::nullopt, false}, config);
  const StationaryOutcome out = find_stationary_points(session, f.id, std::nullopt, config);
  const StationaryRecord* best = best_stationary(out.points);
  if (!best) {
    std::string msg = "no stationary point found for fit " + f.id;
    for (const auto& d : out.diagnostics) msg += "; " + d;
    throw NumericError(msg);
  }
  return *best;
}

std::string render_stationary(const StationaryRecord& r, WidthConvention convention) {
  const auto& p = r.point;
  std::ostringstream os;
  os << "stationary " << r.id << "\n"
     << "  fit        " << r.parent << "\n"
     << "  window     " << p.window_id << "\n"
     << "  alpha*     " << format_double(p.eta_star.alpha) << "\n"
     << "  theta*     " << format_double(p.eta_star.theta) << "\n"
     << "  E_r        " << format_double(p.energy.real()) << "\n"
     << "  Im E       " << format_double(p.energy.imag()) << "\n"
     << "  width      " << format_double(width_of(p.energy, convention)) << " (" << to_string(convention) << ")\n"
     << "  |dC/deta|  " << format_double(p.derivative_norm) << "\n"
     << "  pade_error " << format_double(p.pade_error) << "\n";
  return os.str();
}

std::string render_crosscheck(const CrosscheckRecord& r, const StationaryRecord& pade, double tolerance) {
  std::ostringstream os;
  os << "crosscheck " << r.id << "\n"
     << "  stationary " << pade.id << "\n"
     << "  pade E     " << format_double(pade.point.energy.real()) << " " << format_double(pade.point.energy.imag())
     << "\n"
     << "  ucs E      " << format_double(r.ucs.energy.real()) << " " << format_double(r.ucs.energy.imag()) << "\n"
     << "  ucs alpha* " << format_double(r.ucs.eta_star.alpha) << "\n"
     << "  ucs theta* " << format_double(r.ucs.eta_star.theta) << "\n"
     << "  ucs |dE/deta| " << format_double(r.ucs.numerical_derivative_norm) << "\n"
     << "  distance   " << format_double(r.distance) << (r.distance <= tolerance ? " (within " : " (EXCEEDS ")
     << format_double(tolerance) << ")\n";
  return os.str();
}

}  // namespace stabpade
