// stabpade: the analysis pipeline from the command line.
//
// Exit codes: 0 success, 1 internal error, 2 validation error, 3 numeric failure.

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "stabpade/parallel.hpp"
#include "stabpade/pipeline.hpp"
#include "stabpade/serialize.hpp"
#include "stabpade/service.hpp"

using namespace stabpade;

namespace {

struct Options {
  std::string config_file;
  std::vector<std::string> overrides;  // key=value
  bool show_config = false;
  std::optional<unsigned> threads;
  std::string session_file;

  std::optional<std::string> model, basis, alpha, import_path;
  std::string import_format = "csv";
  std::string units = "model_units";
  std::string out;  // data exports; empty: stdout
};

Config build_config(const Options& o) {
  Config c = o.config_file.empty() ? Config{} : load_config(o.config_file);
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ValidationError("set", "expected key=value, got '" + kv + "'");
    c.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.threads) c.threads = *o.threads;
  return c;
}

// The session file when it exists, else a new session from the source flags.
Session open_session(const Options& o) {
  if (!o.session_file.empty() && std::filesystem::exists(o.session_file)) {
    Session s = load_session(o.session_file);
    if (s.computed && ((o.model && !(parse_model(*o.model) == s.computed->model)) ||
                       (o.basis && !(parse_basis(*o.basis) == s.computed->basis))))
      throw ValidationError("session", o.session_file + " was computed for another model or basis");
    if (o.import_path) throw ValidationError("import", o.session_file + " already exists; --import starts a new session");
    return s;
  }
  const Units units = units_from_string(o.units);
  if (o.import_path) return new_import_session(*o.import_path, import_format_from_string(o.import_format), units);
  return new_session(parse_model(o.model.value_or("benchmark")), parse_basis(o.basis.value_or("ho:60")), units);
}

void save(const Options& o, const Session& s) {
  if (!o.session_file.empty()) save_session(s, o.session_file);
}

std::vector<double> alpha_grid(const Options& o, const Session& s) {
  if (o.alpha) return parse_grid(*o.alpha);
  if (s.stabilization && !s.stabilization->alpha_grid.empty()) return s.stabilization->alpha_grid;
  return parse_grid("0.6:1.6:101");
}

void ensure_stabilized(const Options& o, Session& s, const Config& c) {
  if (s.computed) stabilize(s, alpha_grid(o, s), c);
}

// A window by id, or by position in the latest detection.
std::string resolve_window(Session& s, const std::string& which, const Config& c) {
  if (s.find_window(which)) return which;
  const DetectionRecord det = detect(s, c);
  if (s.find_window(which)) return which;
  std::size_t k = 0;
  try {
    std::size_t used = 0;
    k = std::stoul(which, &used);
    if (used != which.size()) throw std::invalid_argument(which);
  } catch (const std::exception&) {
    throw ValidationError("window", "'" + which + "' is neither a window id nor a window number");
  }
  if (k >= det.report.windows.size())
    throw ValidationError("window", "window " + which + " out of range; " + std::to_string(det.report.windows.size()) +
                                        " detected (run 'windows')");
  return record_id("window", json{{"parent", det.id}, {"window", det.report.windows[k]}});
}

// --fit, else the latest fit, else the fit behind the default resonance.
std::string resolve_fit(const Options& o, Session& s, const std::string& fit_id, const Config& c) {
  if (!fit_id.empty()) {
    if (!s.find_fit(fit_id)) throw ValidationError("fit", "no fit '" + fit_id + "' in the session");
    return fit_id;
  }
  if (!s.fits.empty()) return s.fits.back().id;
  return resonance(s, alpha_grid(o, s), c).parent;
}

void emit(const Options& o, const std::string& text) {
  if (o.out.empty())
    std::cout << text;
  else
    write_file(o.out, text);
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string s;
  for (std::size_t i = 0; i < parts.size(); ++i) s += (i ? sep : "") + parts[i];
  return s;
}

std::string render_windows(const Session& s, const DetectionRecord& det) {
  std::ostringstream os;
  const auto& a = s.stabilization->data.alpha_grid;
  os << "detection " << det.id << "\n";
  int k = 0;
  for (const auto& w : det.report.windows) {
    os << "window " << k++ << " " << record_id("window", json{{"parent", det.id}, {"window", w}}) << "\n"
       << "  curve    " << w.root_index << "\n"
       << "  alpha    " << format_double(a[w.first_index]) << " .. " << format_double(a[w.last_index]) << " (points "
       << w.first_index << ".." << w.last_index << ")\n"
       << "  energy   " << format_double(w.mean_energy) << "\n"
       << "  flatness " << format_double(w.flatness) << "\n";
  }
  for (const auto& x : det.report.crossings)
    os << "crossing curves " << x.curve_a << "/" << x.curve_b << " alpha " << format_double(x.alpha_at_min_gap)
       << " gap " << format_double(x.min_gap) << "\n";
  for (const auto& d : det.report.diagnostics) os << "note " << d << "\n";
  return os.str();
}

std::string render_fit(const Session& s, const FitRecord& f) {
  std::ostringstream os;
  const auto& a = s.stabilization->data.alpha_grid;
  std::vector<std::string> idx, alphas, coeffs;
  for (int i : f.point_indices) {
    idx.push_back(std::to_string(i));
    alphas.push_back(format_double(a[i]));
  }
  for (const cplx& z : f.fraction.coefficients())
    coeffs.push_back(z.imag() == 0.0 ? format_double(z.real())
                                     : format_double(z.real()) + (z.imag() < 0 ? "" : "+") + format_double(z.imag()) + "i");
  const double mid = 0.5 * (a[f.point_indices.front()] + a[f.point_indices.back()]);
  const PadeValue v = evaluate(f.fraction, cplx(mid));
  os << "fit " << f.id << "\n"
     << "  window       " << f.parent << "\n"
     << "  order        " << f.order << "\n"
     << "  points       " << join(idx, ",") << "\n"
     << "  alpha        " << join(alphas, " ") << "\n"
     << "  C(" << format_double(mid) << ") " << (v.pole ? "pole" : format_double(v.value.real())) << "\n"
     << "  first value  " << format_double(f.fraction.values().front()) << "\n"
     << "  coefficients " << join(coeffs, " ") << "\n";
  if (f.forced) os << "  forced over " << f.overridden.size() << " avoided crossing(s)\n";
  return os.str();
}

void print_hint(const std::exception& e) {
  if (dynamic_cast<const CrossingGuardError*>(&e))
    std::cerr << "hint: pick points inside one stable window (see 'windows'), or pass --force\n";
  else if (const auto* v = dynamic_cast<const ValidationError*>(&e))
    std::cerr << "hint: check " << v->field() << "; --help lists the options, --show-config the settings\n";
  else if (dynamic_cast<const TrackingError*>(&e))
    std::cerr << "hint: use a denser alpha grid or lower sweep.min_quality\n";
  else if (const auto* c = dynamic_cast<const ConvergenceError*>(&e)) {
    std::cerr << c->trace();
    std::cerr << "hint: raise the iteration limits or start from another seed region\n";
  } else if (dynamic_cast<const IllConditionedOverlapError*>(&e))
    std::cerr << "hint: the basis is near-dependent; reduce its size or widen its exponent ratio\n";
  else if (dynamic_cast<const NumericError*>(&e))
    std::cerr << "hint: try another window or a finer alpha grid\n";
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Stabilization plus analytic continuation for resonance energies"};
  app.set_help_all_flag("--help-all");
  app.fallthrough();
  app.option_defaults()->always_capture_default();
  app.add_option("--config", o.config_file, "key = value settings file")->check(CLI::ExistingFile);
  app.add_option("--set", o.overrides, "override one setting, key=value");
  app.add_flag("--show-config", o.show_config, "print every setting and exit");
  app.add_option("--threads", o.threads, "worker thread cap (0: all cores)");
  app.add_option("--session", o.session_file, "session file to resume from and save to");

  const auto source = [&](CLI::App* sub) {
    sub->add_option("--model", o.model, "benchmark | harmonic | free | family:params (default benchmark)");
    sub->add_option("--basis", o.basis, "ho:N[:omega] | etg:N:beta0:ratio (default ho:60)");
    sub->add_option("--alpha", o.alpha, "alpha grid start:stop:count (default 0.6:1.6:101)");
    sub->add_option("--import", o.import_path, "stabilization data file instead of a model")->check(CLI::ExistingFile);
    sub->add_option("--format", o.import_format, "import format, csv or json");
    sub->add_option("--units", o.units, "model_units or hartree");
  };
  const auto output = [&](CLI::App* sub) { sub->add_option("-o,--out", o.out, "write data here instead of stdout"); };

  auto* stab = app.add_subcommand("stabilize", "compute or import the stabilization graph (CSV out)");
  source(stab);
  output(stab);
  std::string export_format = "csv";
  stab->add_option("--export-format", export_format, "csv or json");

  auto* win = app.add_subcommand("windows", "detect stable windows and avoided crossings");
  source(win);

  auto* fit_cmd = app.add_subcommand("fit", "fit the continued fraction over a window");
  source(fit_cmd);
  std::string window;
  std::optional<int> order, points;
  std::vector<int> indices;
  bool force = false;
  fit_cmd->add_option("--window", window, "window id, window number, or a stabilization file")->required();
  fit_cmd->add_option("--order,-M", order, "number of fit points (default fit.order)");
  fit_cmd->add_option("--points", points, "fit this many points spread over the window");
  fit_cmd->add_option("--indices", indices, "explicit grid indices")->delimiter(',');
  fit_cmd->add_flag("--force", force, "fit even over a detected avoided crossing");

  auto* traj = app.add_subcommand("trajectory", "theta or alpha trajectory of the fitted fraction (CSV out)");
  source(traj);
  output(traj);
  std::optional<double> fixed_alpha, fixed_theta;
  std::string traj_grid, fit_id;
  auto* fa = traj->add_option("--fixed-alpha", fixed_alpha, "theta trajectory at this alpha");
  auto* ft = traj->add_option("--fixed-theta", fixed_theta, "alpha trajectory at this theta");
  fa->excludes(ft);
  traj->add_option("--grid", traj_grid, "grid of the free coordinate, start:stop:count")->required();
  traj->add_option("--fit", fit_id, "fit id (default: latest, or the resonance fit)");

  auto* res = app.add_subcommand("resonance", "stabilize, detect, fit and find the stationary point");
  source(res);
  std::optional<std::string> res_window;
  res->add_option("--window", res_window, "window id or number (default: flattest above threshold)");

  auto* xc = app.add_subcommand("crosscheck", "compare the Pade stationary point with direct complex scaling");
  source(xc);
  std::string stationary_id;
  xc->add_option("--stationary", stationary_id, "stationary point id (default: the resonance)");

  auto* land = app.add_subcommand("landscape", "|dE/dtheta| and |dE/dalpha| over a grid (CSV out)");
  source(land);
  output(land);
  std::string land_kind = "pade", land_alpha, land_theta;
  land->add_option("--kind", land_kind, "pade or ucs")->check(CLI::IsMember({"pade", "ucs"}));
  land->add_option("--alpha-grid", land_alpha, "alpha grid (default: the fit's seed region)");
  land->add_option("--theta-grid", land_theta, "theta grid (default landscape.theta)");
  land->add_option("--fit", fit_id, "fit id (default: latest, or the resonance fit)");

  auto* srv = app.add_subcommand("serve", "HTTP service for the explorer");
  std::string host = "127.0.0.1", session_dir;
  int port = 8080;
  srv->add_option("--host", host, "interface to bind");
  srv->add_option("--port", port, "port")->check(CLI::Range(1, 65535));
  srv->add_option("--session-dir", session_dir, "keep sessions here as <id>.json");

  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const Config config = build_config(o);
    set_thread_count(config.threads);
    if (o.show_config) {
      std::cout << show_config(config);
      return 0;
    }
    if (app.get_subcommands().empty()) {
      std::cerr << app.help();
      return 2;
    }

    if (srv->parsed()) {
      std::cerr << "listening on http://" << host << ":" << port << "\n";
      serve(host, port, config, session_dir);
      return 0;
    }

    // fit --window <file>: a stabilization file stands in for --import
    if (fit_cmd->parsed() && !o.import_path && std::filesystem::is_regular_file(window)) {
      o.import_path = window;
      window = "0";
    }

    Session s = open_session(o);

    if (stab->parsed()) {
      ensure_stabilized(o, s, config);
      std::ostringstream os;
      if (export_format == "json")
        write_stabilization_json(os, s.stabilization->data);
      else if (export_format == "csv")
        write_stabilization_csv(os, s.stabilization->data);
      else
        throw ValidationError("export-format", "csv or json");
      emit(o, os.str());
    } else if (win->parsed()) {
      ensure_stabilized(o, s, config);
      std::cout << render_windows(s, detect(s, config));
    } else if (fit_cmd->parsed()) {
      ensure_stabilized(o, s, config);
      FitRequest req{resolve_window(s, window, config), indices, order, force};
      if (points) {
        if (!indices.empty()) throw ValidationError("points", "give --points or --indices, not both");
        if (order && *order != *points) throw ValidationError("points", "--points and --order disagree");
        req.order = points;
      }
      std::cout << render_fit(s, fit_window(s, req, config));
    } else if (traj->parsed()) {
      if (!fixed_alpha && !fixed_theta) throw ValidationError("trajectory", "give --fixed-alpha or --fixed-theta");
      const std::string fid = resolve_fit(o, s, fit_id, config);
      const TrajectoryRecord t =
          fixed_alpha ? add_trajectory(s, fid, TrajectoryKind::theta_trajectory, *fixed_alpha, parse_grid(traj_grid))
                      : add_trajectory(s, fid, TrajectoryKind::alpha_trajectory, *fixed_theta, parse_grid(traj_grid));
      std::ostringstream os;
      write_trajectory_csv(os, t.trajectory);
      emit(o, os.str());
    } else if (res->parsed()) {
      std::optional<std::string> wid;
      if (res_window) {
        ensure_stabilized(o, s, config);
        wid = resolve_window(s, *res_window, config);
      }
      const StationaryRecord r = resonance(s, alpha_grid(o, s), config, wid);
      std::cout << render_stationary(r, config.stationary.width);
    } else if (xc->parsed()) {
      const StationaryRecord* p = nullptr;
      StationaryRecord fresh;
      if (!stationary_id.empty()) {
        p = s.find_stationary(stationary_id);
        if (!p) throw ValidationError("stationary", "no stationary point '" + stationary_id + "'");
      } else {
        fresh = resonance(s, alpha_grid(o, s), config);
        p = &fresh;
      }
      const StationaryRecord pade = *p;
      const CrosscheckRecord x = crosscheck(s, pade.id, config);
      std::cout << render_crosscheck(x, pade, config.crosscheck_tolerance);
    } else if (land->parsed()) {
      const std::vector<double> theta = parse_grid(land_theta.empty() ? config.landscape_theta : land_theta);
      LandscapeRecord r;
      if (land_kind == "pade") {
        const FitRecord f = *s.find_fit(resolve_fit(o, s, fit_id, config));
        r = add_pade_landscape(s, f.id, land_alpha.empty() ? landscape_alpha_grid(f, config) : parse_grid(land_alpha),
                               theta);
      } else {
        // centred on the resonance, targeting its energy
        const StationaryRecord p = resonance(s, alpha_grid(o, s), config);
        const FitRecord f = *s.find_fit(p.parent);
        r = add_ucs_landscape(s, land_alpha.empty() ? landscape_alpha_grid(f, config) : parse_grid(land_alpha), theta,
                              p.point.energy, config);
      }
      std::ostringstream os;
      write_landscape_csv(os, r.landscape);
      emit(o, os.str());
    }
    save(o, s);
    return 0;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    print_hint(e);
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    print_hint(e);
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
