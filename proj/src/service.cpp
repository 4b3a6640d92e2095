#include "stabpade/service.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <thread>

#include "httplib.h"
#include "stabpade/serialize.hpp"

namespace stabpade {

namespace {

class NotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Busy : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string body_text(const json& j) { return j.dump(1) + "\n"; }

// Status and body for the exception in flight.
std::pair<int, json> describe_error(std::exception_ptr ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const CrossingGuardError& e) {
    return {422, json{{"error", e.what()}, {"kind", "crossing_guard"}, {"field", e.field()}, {"crossings", e.crossings()}}};
  } catch (const ValidationError& e) {
    return {400, json{{"error", e.what()}, {"kind", "validation"}, {"field", e.field()}}};
  } catch (const NumericError& e) {
    return {422, json{{"error", e.what()}, {"kind", "numeric"}}};
  } catch (const NotFound& e) {
    return {404, json{{"error", e.what()}, {"kind", "not_found"}}};
  } catch (const Busy& e) {
    return {409, json{{"error", e.what()}, {"kind", "busy"}}};
  } catch (const json::exception& e) {
    return {400, json{{"error", e.what()}, {"kind", "validation"}, {"field", "body"}}};
  } catch (const std::exception& e) {
    return {500, json{{"error", e.what()}, {"kind", "internal"}}};
  }
}

json parse_body(const std::string& text) {
  if (text.empty()) return json::object();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("body", e.what());
  }
  if (!j.is_object()) throw ValidationError("body", "expected a JSON object");
  return j;
}

std::string as_text(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

// "start:stop:count" or an explicit array
std::vector<double> grid_field(const json& body, const char* key) {
  const auto it = body.find(key);
  if (it == body.end()) throw ValidationError(key, "missing field");
  try {
    return it->is_string() ? parse_grid(it->get<std::string>()) : it->get<std::vector<double>>();
  } catch (const ValidationError& e) {
    throw ValidationError(key, e.what());
  } catch (const json::exception& e) {
    throw ValidationError(key, e.what());
  }
}

struct Slot {
  std::mutex writer;          // one writer per session
  mutable std::mutex guard;   // the snapshot pointer and job_step only
  std::shared_ptr<const Session> current;
  std::string job_step;

  std::shared_ptr<const Session> snapshot() const {
    std::lock_guard lock(guard);
    return current;
  }
};

struct Job {
  std::string id, session, step;
  std::string status = "running";
  json result;
  json error;
  int error_status = 0;
};

json job_json(const Job& j) {
  json out{{"id", j.id}, {"session", j.session}, {"step", j.step}, {"status", j.status}};
  if (j.status == "done") out["result"] = j.result;
  if (j.status == "failed") {
    out["error"] = j.error;
    out["error_status"] = j.error_status;
  }
  return out;
}

}  // namespace

struct Service::Impl {
  Config base;
  std::string dir;

  std::mutex sessions_mutex;
  std::map<std::string, std::shared_ptr<Slot>> sessions;

  std::mutex jobs_mutex;
  std::map<std::string, Job> jobs;
  std::vector<std::thread> threads;
  std::size_t job_counter = 0;

  Impl(Config c, std::string d) : base(std::move(c)), dir(std::move(d)) {
    if (dir.empty()) return;
    std::filesystem::create_directories(dir);
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
      if (e.path().extension() != ".json") continue;
      Session s = load_session(e.path().string());
      auto slot = std::make_shared<Slot>();
      const std::string id = s.id;
      slot->current = std::make_shared<const Session>(std::move(s));
      sessions[id] = slot;
    }
  }

  Config request_config(const json& body) const {
    Config c = base;
    if (const auto it = body.find("config"); it != body.end()) {
      if (!it->is_object()) throw ValidationError("config", "expected an object of key: value");
      for (const auto& [k, v] : it->items()) c.set(k, as_text(v));
    }
    return c;
  }

  std::shared_ptr<Slot> slot(const std::string& id) {
    std::lock_guard lock(sessions_mutex);
    const auto it = sessions.find(id);
    if (it == sessions.end()) throw NotFound("no session '" + id + "'");
    return it->second;
  }

  void publish(Slot& slot, Session s) {
    if (!dir.empty()) save_session(s, (std::filesystem::path(dir) / (s.id + ".json")).string());
    auto next = std::make_shared<const Session>(std::move(s));
    std::lock_guard lock(slot.guard);
    slot.current = std::move(next);
  }

  // Synchronous step: refused while a job holds the session.
  json write(Slot& slot, const std::function<json(Session&)>& step) {
    {
      std::lock_guard lock(slot.guard);
      if (!slot.job_step.empty()) throw Busy("a " + slot.job_step + " job is running on this session");
    }
    std::lock_guard w(slot.writer);
    Session s = *slot.snapshot();
    json out = step(s);
    publish(slot, std::move(s));
    return out;
  }

  json start_job(const std::shared_ptr<Slot>& slot, const std::string& session_id, const std::string& step,
                 std::function<json(Session&)> work) {
    {
      std::lock_guard lock(slot->guard);
      if (!slot->job_step.empty()) throw Busy("a " + slot->job_step + " job is already running on this session");
      slot->job_step = step;
    }
    std::lock_guard lock(jobs_mutex);
    const std::string id = "job-" + std::to_string(++job_counter);
    Job& job = jobs[id];
    job.id = id;
    job.session = session_id;
    job.step = step;
    threads.emplace_back([this, slot, id, work = std::move(work)] {
      json result, error;
      int status = 0;
      try {
        std::lock_guard w(slot->writer);
        Session s = *slot->snapshot();
        result = work(s);
        publish(*slot, std::move(s));
      } catch (...) {
        std::tie(status, error) = describe_error(std::current_exception());
      }
      {
        std::lock_guard jl(jobs_mutex);
        Job& j = jobs[id];
        j.status = status ? "failed" : "done";
        j.result = std::move(result);
        j.error = std::move(error);
        j.error_status = status;
      }
      std::lock_guard g(slot->guard);
      slot->job_step.clear();
    });
    return json{{"job_id", id}, {"status", "running"}, {"poll", "/jobs/" + id}};
  }

  std::pair<int, json> create_session(const json& body) {
    const Units units = body.contains("units") ? units_from_string(get_field<std::string>(body, "units"))
                                               : Units::model_units;
    Session s;
    if (const auto up = body.find("upload"); up != body.end()) {
      const std::string format = up->value("format", "csv");
      s = new_import_session_from_text(get_field<std::string>(*up, "content"), up->value("name", "upload"),
                                       import_format_from_string(format), units);
    } else {
      if (!body.contains("model")) throw ValidationError("model", "missing field (or give an upload)");
      if (!body.contains("basis")) throw ValidationError("basis", "missing field");
      const json& m = body["model"];
      const json& b = body["basis"];
      const ModelSpec model = m.is_string() ? parse_model(m.get<std::string>()) : get_field<ModelSpec>(body, "model");
      const BasisSpec basis = b.is_string() ? parse_basis(b.get<std::string>()) : get_field<BasisSpec>(body, "basis");
      s = new_session(model, basis, units);
    }
    std::lock_guard lock(sessions_mutex);
    if (const auto it = sessions.find(s.id); it != sessions.end())
      return {200, session_to_json(*it->second->snapshot())};
    auto slot = std::make_shared<Slot>();
    json out = session_to_json(s);
    publish(*slot, std::move(s));
    sessions[out["id"].get<std::string>()] = slot;
    return {201, out};
  }

  std::pair<int, json> post_step(const std::string& id, const std::string& step, const json& body) {
    const auto sl = slot(id);
    const Config config = request_config(body);
    const auto snap = sl->snapshot();

    if (step == "stabilize") {
      const std::vector<double> grid = grid_field(body, "alpha_grid");
      if (snap->stabilization && snap->stabilization->alpha_grid == grid) return {200, json(*snap->stabilization)};
      if (!snap->computed) throw ValidationError("session", "stabilize needs a model; this session holds imported data");
      if (snap->stabilization)
        throw ValidationError("alpha_grid", "session is already stabilized on grid " +
                                                grid_to_string(snap->stabilization->alpha_grid));
      return {202, start_job(sl, id, step, [grid, config](Session& s) { return json(stabilize(s, grid, config)); })};
    }
    if (step == "windows") {
      Config c = config;
      if (body.contains("options")) c.windows = get_field<WindowOptions>(body, "options");
      return {200, write(*sl, [&](Session& s) {
                const DetectionRecord det = detect(s, c);
                json windows = json::array();
                for (const auto& w : s.windows)
                  if (w.parent == det.id) windows.push_back(w);
                return json{{"detection", det}, {"windows", windows}};
              })};
    }
    if (step == "fit") {
      FitRequest req;
      req.window_id = get_field<std::string>(body, "window_id");
      if (body.contains("point_indices")) req.point_indices = get_field<std::vector<int>>(body, "point_indices");
      if (body.contains("order") && !body["order"].is_null()) req.order = get_field<int>(body, "order");
      if (body.contains("force")) req.force = get_field<bool>(body, "force");
      bool created = false;
      json out = write(*sl, [&](Session& s) {
        const std::size_t before = s.fits.size();
        const FitRecord f = fit_window(s, req, config);
        created = s.fits.size() > before;
        return json(f);
      });
      return {created ? 201 : 200, out};
    }
    if (step == "trajectory") {
      const std::string fit_id = get_field<std::string>(body, "fit_id");
      const TrajectoryKind kind = trajectory_kind_from_string(get_field<std::string>(body, "kind"));
      const double fixed = get_field<double>(body, "fixed_value");
      const std::vector<double> grid = grid_field(body, "grid");
      return {200, write(*sl, [&](Session& s) { return json(add_trajectory(s, fit_id, kind, fixed, grid)); })};
    }
    if (step == "stationary") {
      const std::string fit_id = get_field<std::string>(body, "fit_id");
      std::optional<SeedRegion> region;
      if (body.contains("region") && !body["region"].is_null()) {
        region = get_field<SeedRegion>(body, "region");
        region->validate();
      }
      return {200, write(*sl, [&](Session& s) {
                const StationaryOutcome o = find_stationary_points(s, fit_id, region, config);
                const StationaryRecord* best = best_stationary(o.points);
                return json{{"points", o.points},
                            {"best", best ? json(best->id) : json(nullptr)},
                            {"diagnostics", o.diagnostics},
                            {"landscape_id", o.landscape.id}};
              })};
    }
    if (step == "crosscheck") {
      const std::string sid = get_field<std::string>(body, "stationary_id");
      return {200, write(*sl, [&](Session& s) {
                const CrosscheckRecord r = crosscheck(s, sid, config);
                json out = r;
                out["within_tolerance"] = r.distance <= config.crosscheck_tolerance;
                return out;
              })};
    }
    if (step == "branch_point") {
      const std::string det = get_field<std::string>(body, "detection_id");
      const int k = get_field<int>(body, "crossing");
      return {200, write(*sl, [&](Session& s) { return json(add_branch_point(s, det, k)); })};
    }
    throw NotFound("no step '" + step + "'");
  }

  std::pair<int, json> get_landscape(const std::string& id, const httplib::Request& req) {
    const auto sl = slot(id);
    const auto param = [&](const char* key) -> std::optional<std::string> {
      if (!req.has_param(key)) return std::nullopt;
      return req.get_param_value(key);
    };
    json cfg = json::object();
    for (const auto& k : Config::keys())
      if (auto v = param(k.c_str())) cfg[k] = *v;
    const Config config = request_config(json{{"config", cfg}});
    const auto snap = sl->snapshot();

    const std::string kind = param("kind").value_or("pade");
    if (kind != "pade" && kind != "ucs") throw ValidationError("kind", "pade or ucs");
    const std::optional<std::string> fit_id = param("fit_id");
    const FitRecord* fit = fit_id ? snap->find_fit(*fit_id) : nullptr;
    if (fit_id && !fit) throw ValidationError("fit_id", "no fit '" + *fit_id + "'");
    const auto grid_param = [&](const char* key) -> std::optional<std::vector<double>> {
      const auto v = param(key);
      if (!v) return std::nullopt;
      try {
        return parse_grid(*v);
      } catch (const ValidationError& e) {
        throw ValidationError(key, e.what());
      }
    };
    std::vector<double> alpha;
    if (auto a = grid_param("alpha"))
      alpha = *a;
    else if (fit)
      alpha = landscape_alpha_grid(*fit, config);
    else
      throw ValidationError("alpha", "give an alpha grid or a fit_id");
    const std::vector<double> theta = grid_param("theta").value_or(parse_grid(config.landscape_theta));

    if (kind == "pade") {
      if (!fit) throw ValidationError("fit_id", "a pade landscape needs a fit");
      if (const LandscapeRecord* r = find_landscape(*snap, kind, fit->id, 0.0, alpha, theta)) return {200, json(*r)};
      const std::string fid = fit->id;
      return {202, start_job(sl, id, "landscape", [fid, alpha, theta](Session& s) {
                return json(add_pade_landscape(s, fid, alpha, theta));
              })};
    }
    const auto target_text = param("target");
    if (!target_text) throw ValidationError("target", "a ucs landscape needs target=re,im");
    cplx target;
    try {
      const auto comma = target_text->find(',');
      target = {std::stod(target_text->substr(0, comma)),
                comma == std::string::npos ? 0.0 : std::stod(target_text->substr(comma + 1))};
    } catch (const std::exception&) {
      throw ValidationError("target", "expected re,im");
    }
    if (!snap->computed) throw ValidationError("session", "a ucs landscape needs a model");
    if (const LandscapeRecord* r = find_landscape(*snap, kind, snap->id, target, alpha, theta)) return {200, json(*r)};
    return {202, start_job(sl, id, "landscape", [alpha, theta, target, config](Session& s) {
              return json(add_ucs_landscape(s, alpha, theta, target, config));
            })};
  }

  void wait() {
    std::vector<std::thread> running;
    {
      std::lock_guard lock(jobs_mutex);
      running.swap(threads);
    }
    for (auto& t : running) t.join();
  }
};

Service::Service(Config config, std::string session_dir)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(session_dir))) {}

Service::~Service() { wait_for_jobs(); }

void Service::wait_for_jobs() { impl_->wait(); }

void Service::mount(httplib::Server& server) {
  Impl* impl = impl_.get();
  const auto handler = [](auto fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      int status;
      json body;
      try {
        std::tie(status, body) = fn(req);
      } catch (...) {
        std::tie(status, body) = describe_error(std::current_exception());
      }
      res.status = status;
      res.set_content(body_text(body), "application/json");
    };
  };
  server.Post("/sessions", handler([impl](const httplib::Request& req) {
                return impl->create_session(parse_body(req.body));
              }));
  server.Get(R"(/sessions/([^/]+))", handler([impl](const httplib::Request& req) {
               return std::pair<int, json>{200, session_to_json(*impl->slot(req.matches[1])->snapshot())};
             }));
  server.Post(R"(/sessions/([^/]+)/([a-z_]+))", handler([impl](const httplib::Request& req) {
                return impl->post_step(req.matches[1], req.matches[2], parse_body(req.body));
              }));
  server.Get(R"(/sessions/([^/]+)/landscape)", handler([impl](const httplib::Request& req) {
               return impl->get_landscape(req.matches[1], req);
             }));
  server.Get(R"(/jobs/([^/]+))", handler([impl](const httplib::Request& req) {
               std::lock_guard lock(impl->jobs_mutex);
               const auto it = impl->jobs.find(req.matches[1]);
               if (it == impl->jobs.end()) throw NotFound("no job '" + std::string(req.matches[1]) + "'");
               return std::pair<int, json>{200, job_json(it->second)};
             }));
}

void serve(const std::string& host, int port, const Config& config, const std::string& session_dir) {
  Service service(config, session_dir);
  httplib::Server server;
  service.mount(server);
  if (!server.bind_to_port(host, port)) throw ValidationError("port", "cannot listen on " + host + ":" + std::to_string(port));
  server.listen_after_bind();
}

}  // namespace stabpade
