#include "doctest.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <limits>
#include <sstream>

#include "stabpade/io.hpp"
#include "stabpade/session.hpp"

using namespace stabpade;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("stabpade_test_" + name)).string();
}

StabilizationData parse_csv(const std::string& text) {
  std::istringstream in(text);
  return read_stabilization_csv(in);
}

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_CASE("minimal csv: two roots at three alphas") {
  const auto d = parse_csv("alpha,root,energy\n1,0,-0.5\n1,1,0.25\n1.5,0,-0.4\n1.5,1,0.2\n2,1,0.1\n2,0,-0.3\n");
  REQUIRE(d.root_count() == 2);
  CHECK(d.grid_size() == 3);
  CHECK(d.curves[0] == std::vector<double>{-0.5, -0.4, -0.3});
  CHECK(d.curves[1] == std::vector<double>{0.25, 0.2, 0.1});
  CHECK(d.tracking_quality == std::vector<double>{1.0, 1.0});
  CHECK(d.tracking == TrackingMethod::imported);
  CHECK(d.source == DataSource::imported);
}

TEST_CASE("csv without a root column is tracked by nearest energy") {
  // the two levels approach without meeting; nearest energy keeps each on its side
  const auto d = parse_csv("alpha,energy\n1,3.0\n1,1.0\n2,2.2\n2,1.1\n3,2.9\n3,0.9\n");
  CHECK(d.tracking == TrackingMethod::nearest_energy);
  CHECK(d.curves[0] == std::vector<double>{1.0, 1.1, 0.9});
  CHECK(d.curves[1] == std::vector<double>{3.0, 2.2, 2.9});
}

TEST_CASE("csv errors name the line and field") {
  try {
    parse_csv("alpha,root,energy\n1,0,0.5\n2,0,abc\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(e.field() == "energy");
  }
  CHECK_THROWS_AS(parse_csv("alpha,root,value\n1,0,1\n"), ParseError);
  CHECK_THROWS_AS(parse_csv("1,0,1\n"), ParseError);
  CHECK_THROWS_AS(parse_csv("alpha,root,energy\n1,0,1\n1,1\n"), ParseError);
  CHECK_THROWS_AS(parse_csv("alpha,root,energy\n1,0,1\n1,1,2\n2,0,1\n"), ParseError);
  CHECK_THROWS_AS(parse_csv("alpha,root,energy\n1,0,1\n1,0,2\n2,0,1\n2,1,1\n"), ParseError);
  try {
    parse_csv("alpha,root,energy\n2,0,1\n1,0,1\n");
    FAIL("expected a validation error");
  } catch (const ParseError&) {
    FAIL("non-monotone grid is a validation error, not a parse error");
  } catch (const ValidationError& e) {
    CHECK(e.field() == "alpha_grid");
  }
}

TEST_CASE("annotated fixture keeps its comments as metadata") {
  const auto d = import_stabilization(STABPADE_FIXTURES "/he_2s2_annotated.csv", ImportFormat::csv);
  CHECK(d.root_count() == 4);
  CHECK(d.grid_size() == 21);
  CHECK(d.metadata.at("system") == "helium 2s^2 autoionization resonance");
  CHECK(d.metadata.at("units") == "hartree");
  CHECK(d.metadata.count("pade_ucs_cusp_distances") == 1);
}

TEST_CASE("stabilization export then import is bit-identical") {
  auto d = sweep(benchmark_model(), build_basis(ho_basis(30)), linear_grid(0.6, 1.6, 37));
  d.metadata["origin"] = "benchmark";
  for (ImportFormat f : {ImportFormat::csv, ImportFormat::json}) {
    const std::string path = temp_path("stab." + to_string(f));
    export_stabilization(path, d, f);
    const auto back = import_stabilization(path, f);
    REQUIRE(back.alpha_grid.size() == d.alpha_grid.size());
    REQUIRE(back.curves.size() == d.curves.size());
    bool same = true;
    for (std::size_t k = 0; k < d.alpha_grid.size(); ++k) same &= bit_equal(back.alpha_grid[k], d.alpha_grid[k]);
    for (std::size_t c = 0; c < d.curves.size(); ++c)
      for (std::size_t k = 0; k < d.alpha_grid.size(); ++k) same &= bit_equal(back.curves[c][k], d.curves[c][k]);
    CHECK(same);
    CHECK(back.metadata == d.metadata);
    std::filesystem::remove(path);
  }
}

TEST_CASE("format_double is the shortest round trip") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-2.5e-17) == "-2.5e-17");
  for (double x : {1.0 / 3.0, 1e300, 5e-324, 1.4209709513})
    CHECK(std::strtod(format_double(x).c_str(), nullptr) == x);
}

TEST_CASE("fnv1a reference values") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(content_id("foobar") == "85944171f73967e8");
}

namespace {

Session sample_session() {
  Session s = new_session(benchmark_model(), ho_basis(20), Units::model_units, "2026-01-01T00:00:00Z");
  StabilizationRecord stab;
  stab.alpha_grid = linear_grid(0.6, 1.6, 12);
  stab.data = sweep(benchmark_model(), build_basis(ho_basis(20)), stab.alpha_grid);
  stab.id = record_id("stab", json{{"parent", s.id}, {"data", stab.data}});
  s.stabilization = stab;

  WindowRecord w{"", stab.id, StableWindow{1, 0.6, 1.0, 0, 4, 1e-3, 1.42}};
  w.id = record_id("window", json{{"parent", w.parent}, {"window", w.window}});
  s.windows.push_back(w);

  FitRecord f;
  f.parent = w.id;
  f.point_indices = {0, 1, 2, 3, 4};
  f.order = 5;
  std::vector<SamplePoint> pts;
  for (int i : f.point_indices) pts.push_back({stab.data.alpha_grid[i], stab.data.curves[1][i]});
  f.fraction = fit(pts);
  f.id = record_id("fit", json{{"parent", f.parent}, {"fraction", f.fraction}});
  s.fits.push_back(f);

  StationaryRecord p;
  p.parent = f.id;
  p.region = SeedRegion{0.6, 1.0, 0.0, 0.5};
  p.point.eta_star = {0.8, 0.3};
  p.point.energy = {1.4209, -5.8e-5};
  p.point.width = 1.16e-4;
  p.point.pade_error = std::numeric_limits<double>::infinity();
  p.point.window_id = w.id;
  p.point.theta_cut = theta_trajectory(f.fraction, 0.8, linear_grid(0.2, 0.4, 5));
  p.point.alpha_cut = alpha_trajectory(f.fraction, 0.3, linear_grid(0.7, 0.9, 5));
  p.id = record_id("stationary", json{{"parent", p.parent}, {"point", p.point}});
  s.stationary_points.push_back(p);

  LandscapeRecord l;
  l.parent = f.id;
  l.kind = "pade";
  l.landscape = pade_landscape(f.fraction, linear_grid(0.7, 0.9, 3), linear_grid(0.0, 0.3, 4));
  l.landscape.d_alpha[1][2] = std::numeric_limits<double>::quiet_NaN();
  l.id = record_id("landscape", json{{"parent", l.parent}, {"landscape", l.landscape}});
  s.landscapes.push_back(l);
  return s;
}

// Session == treats NaN as unequal; compare through the serialized form too.
bool same_session(const Session& a, const Session& b) { return serialize_session(a) == serialize_session(b); }

}  // namespace

TEST_CASE("empty session round trip") {
  const Session s = new_session(benchmark_model(), ho_basis(60), Units::hartree, "2026-01-01T00:00:00Z");
  const std::string path = temp_path("empty.json");
  save_session(s, path);
  CHECK(load_session(path) == s);
  std::filesystem::remove(path);
}

TEST_CASE("session round trip keeps provenance links") {
  const Session s = sample_session();
  const Session back = deserialize_session(serialize_session(s));
  CHECK(same_session(s, back));
  REQUIRE(back.stationary_points.size() == 1);
  const auto& p = back.stationary_points[0];
  const FitRecord* f = back.find_fit(p.parent);
  REQUIRE(f != nullptr);
  const WindowRecord* w = back.find_window(f->parent);
  REQUIRE(w != nullptr);
  CHECK(w->parent == back.stabilization->id);
  CHECK(p.point.window_id == w->id);
  CHECK(std::isinf(p.point.pade_error));
  CHECK(std::isnan(back.landscapes[0].landscape.d_alpha[1][2]));
  CHECK(back.fits[0].fraction == s.fits[0].fraction);
  CHECK(back.stationary_points[0].point.theta_cut == s.stationary_points[0].point.theta_cut);
}

TEST_CASE("identical sessions serialize to identical bytes") {
  CHECK(serialize_session(sample_session()) == serialize_session(sample_session()));
  const Session a = new_session(benchmark_model(), ho_basis(60), Units::model_units, "t");
  const Session b = new_session(benchmark_model(), ho_basis(60), Units::model_units, "t");
  CHECK(a.id == b.id);
  CHECK(new_session(harmonic_model(), ho_basis(60), Units::model_units, "t").id != a.id);
}

TEST_CASE("unknown schema version is a migration error") {
  json j = session_to_json(sample_session());
  j["schema_version"] = kSessionSchemaVersion + 1;
  CHECK_THROWS_AS(session_from_json(j), MigrationError);
  CHECK_THROWS_AS(deserialize_session("{\"schema_version\": 1,"), ParseError);
  j["schema_version"] = kSessionSchemaVersion;
  j.erase("units");
  try {
    session_from_json(j);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(e.field() == "units");
  }
}

TEST_CASE("import session hashes the file") {
  const Session s = new_import_session(STABPADE_FIXTURES "/he_2s2_annotated.csv", ImportFormat::csv);
  REQUIRE(s.stabilization.has_value());
  CHECK(s.imported->content_id == content_id(read_file(STABPADE_FIXTURES "/he_2s2_annotated.csv")));
  CHECK(deserialize_session(serialize_session(s)) == s);
}

TEST_CASE("trajectory and landscape csv exports") {
  const auto cf = fit({{1.0, 2.0}, {2.0, 3.0}, {3.0, 5.0}});
  const Trajectory t = theta_trajectory(cf, 2.0, {0.0, 0.1});
  std::ostringstream os;
  write_trajectory_csv(os, t);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "theta,alpha,re_e,im_e,pade_error");
  std::getline(in, line);
  CHECK(line.rfind("0,2,3,0,", 0) == 0);

  DerivativeLandscape l{{1.0, 2.0}, {0.0, 0.5}, {{1, 2}, {3, std::nan("")}}, {{4, 5}, {6, 7}}};
  std::ostringstream ls;
  write_landscape_csv(ls, l);
  CHECK(ls.str() == "alpha,theta,d_theta,d_alpha\n1,0,1,4\n1,0.5,2,5\n2,0,3,6\n2,0.5,nan,7\n");
}

TEST_CASE("a 10 MB landscape session loads in under a second") {
  Session s = new_session(benchmark_model(), ho_basis(60), Units::model_units, "t");
  LandscapeRecord l;
  l.kind = "ucs";
  l.parent = s.id;
  const int na = 400, nt = 640;
  l.landscape.alpha_grid = linear_grid(0.5, 2.0, na);
  l.landscape.theta_grid = linear_grid(0.0, kMaxTheta, nt);
  l.landscape.d_theta.assign(na, std::vector<double>(nt));
  l.landscape.d_alpha.assign(na, std::vector<double>(nt));
  for (int i = 0; i < na; ++i)
    for (int j = 0; j < nt; ++j) {
      l.landscape.d_theta[i][j] = std::exp(-0.01 * i) * std::sin(1.0 + j) * 1e-3;
      l.landscape.d_alpha[i][j] = std::cos(0.37 * i + j) / 3.0;
    }
  l.id = record_id("landscape", json{{"parent", l.parent}, {"landscape", l.landscape}});
  s.landscapes.push_back(l);
  const std::string path = temp_path("big.json");
  save_session(s, path);
  const auto bytes = std::filesystem::file_size(path);
  CHECK(bytes >= 10'000'000);
  const auto t0 = std::chrono::steady_clock::now();
  const Session back = load_session(path);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  MESSAGE("loaded " << bytes << " bytes in " << seconds << " s");
  CHECK(seconds < 1.0);
  CHECK(back == s);
  std::filesystem::remove(path);
}
