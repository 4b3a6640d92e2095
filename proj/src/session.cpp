#include "stabpade/session.hpp"

#include <chrono>
#include <ctime>
#include <sstream>

#include "stabpade/serialize.hpp"

namespace stabpade {

std::string to_string(Units units) { return units == Units::hartree ? "hartree" : "model_units"; }

Units units_from_string(const std::string& name) {
  if (name == "model_units") return Units::model_units;
  if (name == "hartree") return Units::hartree;
  throw ValidationError("units", "unknown units '" + name + "' (model_units or hartree)");
}

namespace {

template <class R>
const R* find_by_id(const std::vector<R>& v, const std::string& id) {
  for (const auto& r : v)
    if (r.id == id) return &r;
  return nullptr;
}

json computed_json(const ComputedSource& s) { return json{{"model", s.model}, {"basis", s.basis}}; }

json imported_json(const ImportDescriptor& d) {
  return json{{"path", d.path}, {"format", to_string(d.format)}, {"content_id", d.content_id}};
}

}  // namespace

const WindowRecord* Session::find_window(const std::string& id) const { return find_by_id(windows, id); }
const FitRecord* Session::find_fit(const std::string& id) const { return find_by_id(fits, id); }
const StationaryRecord* Session::find_stationary(const std::string& id) const {
  return find_by_id(stationary_points, id);
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string record_id(const std::string& prefix, const json& content) {
  json c = content;
  c.erase("id");
  return prefix + "-" + content_id(c.dump());
}

Session new_session(const ModelSpec& model, const BasisSpec& basis, Units units, std::string created_at) {
  model.validate();
  basis.validate();
  Session s;
  s.computed = ComputedSource{model, basis};
  s.units = units;
  s.created_at = created_at.empty() ? utc_timestamp() : std::move(created_at);
  s.id = record_id("session", json{{"computed", computed_json(*s.computed)}, {"units", to_string(units)}});
  return s;
}

Session new_import_session(const std::string& path, ImportFormat format, Units units, std::string created_at) {
  return new_import_session_from_text(read_file(path), path, format, units, std::move(created_at));
}

Session new_import_session_from_text(const std::string& text, const std::string& label, ImportFormat format,
                                     Units units, std::string created_at) {
  Session s;
  s.imported = ImportDescriptor{label, format, content_id(text)};
  s.units = units;
  s.created_at = created_at.empty() ? utc_timestamp() : std::move(created_at);
  // the label is not part of the id: the same bytes are the same data
  s.id = record_id("session", json{{"imported", content_id(text)}, {"format", to_string(format)}, {"units", to_string(units)}});
  std::istringstream in(text);
  StabilizationRecord rec;
  rec.data = format == ImportFormat::csv ? read_stabilization_csv(in) : read_stabilization_json(in);
  rec.id = record_id("stab", json{{"parent", s.id}, {"data", rec.data}});
  s.stabilization = std::move(rec);
  return s;
}

std::string id_of(const json& j) { return get_field<std::string>(j, "id"); }
std::string parent_of(const json& j) { return get_field<std::string>(j, "parent"); }

void to_json(json& j, const StabilizationRecord& r) {
  j = json{{"id", r.id}, {"alpha_grid", r.alpha_grid}, {"data", r.data}};
}
void from_json(const json& j, StabilizationRecord& r) {
  r = {id_of(j), get_field<std::vector<double>>(j, "alpha_grid"), get_field<StabilizationData>(j, "data")};
}

void to_json(json& j, const DetectionRecord& r) {
  j = json{{"id", r.id}, {"parent", r.parent}, {"options", r.options}, {"report", r.report}};
}
void from_json(const json& j, DetectionRecord& r) {
  r = {id_of(j), parent_of(j), get_field<WindowOptions>(j, "options"), get_field<WindowReport>(j, "report")};
}

void to_json(json& j, const WindowRecord& r) { j = json{{"id", r.id}, {"parent", r.parent}, {"window", r.window}}; }
void from_json(const json& j, WindowRecord& r) { r = {id_of(j), parent_of(j), get_field<StableWindow>(j, "window")}; }

void to_json(json& j, const FitRecord& r) {
  j = json{{"id", r.id},         {"parent", r.parent},         {"point_indices", r.point_indices},
           {"order", r.order},   {"forced", r.forced},         {"overridden", r.overridden},
           {"fraction", r.fraction}};
}
void from_json(const json& j, FitRecord& r) {
  r = {id_of(j),
       parent_of(j),
       get_field<std::vector<int>>(j, "point_indices"),
       get_field<int>(j, "order"),
       get_field<bool>(j, "forced"),
       get_field<std::vector<AvoidedCrossing>>(j, "overridden"),
       get_field<ContinuedFraction>(j, "fraction")};
}

void to_json(json& j, const TrajectoryRecord& r) {
  j = json{{"id", r.id}, {"parent", r.parent}, {"trajectory", r.trajectory}};
}
void from_json(const json& j, TrajectoryRecord& r) {
  r = {id_of(j), parent_of(j), get_field<Trajectory>(j, "trajectory")};
}

void to_json(json& j, const StationaryRecord& r) {
  j = json{{"id", r.id}, {"parent", r.parent}, {"region", r.region}, {"point", r.point}};
}
void from_json(const json& j, StationaryRecord& r) {
  r = {id_of(j), parent_of(j), get_field<SeedRegion>(j, "region"), get_field<StationaryPoint>(j, "point")};
}

void to_json(json& j, const BranchPointRecord& r) {
  j = json{{"id", r.id}, {"parent", r.parent}, {"estimate", r.estimate}};
}
void from_json(const json& j, BranchPointRecord& r) {
  r = {id_of(j), parent_of(j), get_field<BranchPointEstimate>(j, "estimate")};
}

void to_json(json& j, const CrosscheckRecord& r) {
  j = json{{"id", r.id}, {"parent", r.parent}, {"ucs", r.ucs}, {"distance", number_to_json(r.distance)}};
}
void from_json(const json& j, CrosscheckRecord& r) {
  if (!j.contains("distance")) throw ValidationError("distance", "missing field");
  r = {id_of(j), parent_of(j), get_field<UcsStationaryPoint>(j, "ucs"), number_from_json(j.at("distance"))};
}

void to_json(json& j, const LandscapeRecord& r) {
  j = json{{"id", r.id},
           {"parent", r.parent},
           {"kind", r.kind},
           {"target", complex_to_json(r.target)},
           {"landscape", r.landscape}};
}
void from_json(const json& j, LandscapeRecord& r) {
  if (!j.contains("target")) throw ValidationError("target", "missing field");
  r = {id_of(j), parent_of(j), get_field<std::string>(j, "kind"), complex_from_json(j.at("target")),
       get_field<DerivativeLandscape>(j, "landscape")};
}

json session_to_json(const Session& s) {
  json j;
  j["schema_version"] = kSessionSchemaVersion;
  j["id"] = s.id;
  j["created_at"] = s.created_at;
  j["units"] = to_string(s.units);
  j["computed"] = s.computed ? computed_json(*s.computed) : json(nullptr);
  j["imported"] = s.imported ? imported_json(*s.imported) : json(nullptr);
  j["stabilization"] = s.stabilization ? json(*s.stabilization) : json(nullptr);
  j["detections"] = s.detections;
  j["windows"] = s.windows;
  j["fits"] = s.fits;
  j["trajectories"] = s.trajectories;
  j["stationary_points"] = s.stationary_points;
  j["branch_points"] = s.branch_points;
  j["crosschecks"] = s.crosschecks;
  j["landscapes"] = s.landscapes;
  return j;
}

Session session_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("session", "expected a JSON object");
  const int version = get_field<int>(j, "schema_version");
  if (version != kSessionSchemaVersion) throw MigrationError(version);
  Session s;
  s.id = get_field<std::string>(j, "id");
  s.created_at = get_field<std::string>(j, "created_at");
  s.units = units_from_string(get_field<std::string>(j, "units"));
  if (j.contains("computed") && !j["computed"].is_null())
    s.computed = ComputedSource{get_field<ModelSpec>(j["computed"], "model"), get_field<BasisSpec>(j["computed"], "basis")};
  if (j.contains("imported") && !j["imported"].is_null()) {
    const json& d = j["imported"];
    s.imported = ImportDescriptor{get_field<std::string>(d, "path"),
                                  import_format_from_string(get_field<std::string>(d, "format")),
                                  get_field<std::string>(d, "content_id")};
  }
  if (j.contains("stabilization") && !j["stabilization"].is_null())
    s.stabilization = get_field<StabilizationRecord>(j, "stabilization");
  const auto list = [&](const char* key, auto& out) {
    using V = std::decay_t<decltype(out)>;
    if (j.contains(key)) out = get_field<V>(j, key);
  };
  list("detections", s.detections);
  list("windows", s.windows);
  list("fits", s.fits);
  list("trajectories", s.trajectories);
  list("stationary_points", s.stationary_points);
  list("branch_points", s.branch_points);
  list("crosschecks", s.crosschecks);
  list("landscapes", s.landscapes);
  return s;
}

std::string serialize_session(const Session& session) { return session_to_json(session).dump(1) + "\n"; }

Session deserialize_session(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(0, "session", e.what());
  }
  return session_from_json(j);
}

void save_session(const Session& session, const std::string& path) { write_file(path, serialize_session(session)); }

Session load_session(const std::string& path) { return deserialize_session(read_file(path)); }

}  // namespace stabpade
