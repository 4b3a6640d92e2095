#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "stabpade/pipeline.hpp"

using namespace stabpade;

namespace {

// A flat diabatic level at 0 crossed by 2(alpha - 1.5), coupled by g = 0.02.
std::string hyperbolic_fixture() {
  const std::string path = (std::filesystem::temp_directory_path() / "stabpade_hyperbolic.csv").string();
  std::ofstream out(path);
  out << "# fixture: hyperbolic avoided crossing at alpha = 1.5\nalpha,root,energy\n";
  for (double a : linear_grid(1.0, 2.0, 101)) {
    const double s = 2.0 * (a - 1.5), r = std::sqrt(0.25 * s * s + 0.0004);
    out << format_double(a) << ",0," << format_double(0.5 * s - r) << "\n";
    out << format_double(a) << ",1," << format_double(0.5 * s + r) << "\n";
  }
  return path;
}

}  // namespace

TEST_CASE("config prints every key and reads its own output") {
  Config c;
  c.fit_order = 17;
  c.stationary.width = WidthConvention::half_gamma;
  const std::string text = show_config(c);
  for (const auto& k : Config::keys()) CHECK(text.find(k + " = ") != std::string::npos);
  CHECK(show_config(parse_config(text)) == text);
  const Config d = parse_config("# comment\n\nfit.order = 9  # trailing\nucs.fd_step=2e-4\n");
  CHECK(d.fit_order == 9);
  CHECK(d.ucs.fd_step == 2e-4);
  try {
    parse_config("fit.order = 9\nno.such.key = 1\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse_config("fit.order = nine\n"), ParseError);
  CHECK_THROWS_AS(parse_config("landscape.theta = 0:1\n"), ParseError);
  CHECK_THROWS_AS(parse_config("just words\n"), ParseError);
}

TEST_CASE("grid, model and basis syntax") {
  const auto g = parse_grid("0.6:1.6:101");
  CHECK(g.size() == 101);
  CHECK(g.front() == 0.6);
  CHECK(g.back() == 1.6);
  CHECK(grid_to_string(g) == "0.6:1.6:101");
  CHECK_THROWS_AS(parse_grid("0.6:1.6"), ValidationError);
  CHECK_THROWS_AS(parse_grid("1:0:5"), ValidationError);
  CHECK(parse_model("benchmark") == benchmark_model());
  CHECK(parse_model("gaussian_well_barrier:0.8,0.1") == benchmark_model());
  CHECK(parse_model("custom_polynomial_gaussian:0.1,0.8,-0.8,0,0.5").family ==
        PotentialFamily::custom_polynomial_gaussian);
  CHECK_THROWS_AS(parse_model("helium"), ValidationError);
  CHECK(parse_basis("ho:60") == ho_basis(60));
  CHECK(parse_basis("ho:40:1.5").width == 1.5);
  CHECK(parse_basis("etg:12:0.01:2").kind == BasisKind::even_tempered_gaussian);
  CHECK_THROWS_AS(parse_basis("ho"), ValidationError);
}

TEST_CASE("crossing guard on the hyperbolic fixture") {
  Session s = new_import_session(hyperbolic_fixture(), ImportFormat::csv, Units::model_units, "t");
  Config c;
  const DetectionRecord det = detect(s, c);
  REQUIRE(!det.report.crossings.empty());
  CHECK(std::abs(det.report.crossings.front().alpha_at_min_gap - 1.5) < 1e-3);
  REQUIRE(!s.windows.empty());
  const WindowRecord w = s.windows.front();
  CHECK(det.report.windows.front() == w.window);

  // straddling the crossing is refused, naming the crossing
  FitRequest across{w.id, {40, 44, 48, 52, 56, 60}, std::nullopt, false};
  try {
    fit_window(s, across, c);
    FAIL("expected the crossing guard");
  } catch (const CrossingGuardError& e) {
    CHECK(e.crossings().size() == 1);
    CHECK(e.field() == "point_indices");
  }
  CHECK(s.fits.empty());
  across.force = true;
  const FitRecord forced = fit_window(s, across, c);
  CHECK(forced.forced);
  CHECK(forced.overridden.size() == 1);

  // the window itself fits without complaint
  const FitRecord clean = fit_window(s, FitRequest{w.id, {}, 8, false}, c);
  CHECK_FALSE(clean.forced);
  CHECK(clean.order == 8);
  CHECK(clean.point_indices.front() == w.window.first_index);
  CHECK(clean.point_indices.back() == w.window.last_index);
  // repeating a request returns the stored record
  CHECK(fit_window(s, FitRequest{w.id, {}, 8, false}, c) == clean);
  CHECK(s.fits.size() == 2);

  CHECK_THROWS_AS(fit_window(s, FitRequest{"window-none", {}, std::nullopt, false}, c), ValidationError);
  CHECK_THROWS_AS(fit_window(s, FitRequest{w.id, {0, 500}, std::nullopt, false}, c), ValidationError);
  CHECK_THROWS_AS(stabilize(s, linear_grid(1, 2, 11), c), ValidationError);
  const auto t = add_trajectory(s, clean.id, TrajectoryKind::theta_trajectory, 1.2, linear_grid(0, 0.3, 7));
  CHECK(t.parent == clean.id);
  CHECK(t.trajectory.grid.size() + t.trajectory.pole_values.size() == 7);
}

TEST_CASE("benchmark resonance end to end, deterministic") {
  Config c;
  const auto grid = parse_grid("0.6:1.6:101");
  Session a = new_session(benchmark_model(), ho_basis(60), Units::model_units, "t");
  const StationaryRecord r = resonance(a, grid, c);
  CHECK(std::abs(r.point.energy - cplx(1.4209708, -5.83e-5)) < 1e-5);
  CHECK(cusp_coincides(r.point));
  CHECK(r.parent == a.fits.back().id);
  CHECK(a.find_window(a.find_fit(r.parent)->parent) != nullptr);

  // rerun on the same session adds nothing; a fresh session gives the same bytes
  const std::string before = serialize_session(a);
  CHECK(resonance(a, grid, c) == r);
  CHECK(serialize_session(a) == before);
  Session b = new_session(benchmark_model(), ho_basis(60), Units::model_units, "t");
  const StationaryRecord rb = resonance(b, grid, c);
  CHECK(render_stationary(rb, WidthConvention::gamma) == render_stationary(r, WidthConvention::gamma));
  CHECK(serialize_session(b) == before);

  // the saved session resumes with the same ids
  Session reloaded = deserialize_session(before);
  CHECK(resonance(reloaded, grid, c) == r);

  const CrosscheckRecord x = crosscheck(a, r.id, c);
  CHECK(x.distance <= 5e-4);
  CHECK(render_crosscheck(x, r, c.crosscheck_tolerance).find("within") != std::string::npos);

  const auto land = add_pade_landscape(a, r.parent, linear_grid(0.8, 1.2, 5), linear_grid(0.0, 0.4, 5));
  CHECK(land.kind == "pade");
  CHECK(land.landscape.d_theta.size() == 5);
}

TEST_CASE("model-only steps refuse imported sessions") {
  Session s = new_import_session(hyperbolic_fixture(), ImportFormat::csv, Units::model_units, "t");
  Config c;
  CHECK_THROWS_AS(add_ucs_landscape(s, linear_grid(1, 2, 3), linear_grid(0, 0.1, 3), 0.0, c), ValidationError);
  CHECK_THROWS_AS(stabilize(s, linear_grid(1, 2, 11), c), ValidationError);
}

TEST_CASE("branch point record from a detected crossing") {
  Session s = new_session(benchmark_model(), ho_basis(60), Units::model_units, "t");
  Config c;
  stabilize(s, parse_grid("0.6:1.6:101"), c);
  const DetectionRecord det = detect(s, c);
  int k = -1;
  for (std::size_t i = 0; i < det.report.crossings.size(); ++i)
    if (std::abs(det.report.crossings[i].alpha_at_min_gap - 1.0136) < 2e-3 && det.report.crossings[i].min_gap > 5e-3)
      k = static_cast<int>(i);
  REQUIRE(k >= 0);
  const BranchPointRecord bp = add_branch_point(s, det.id, k);
  CHECK(bp.parent == det.id);
  CHECK(std::abs(bp.estimate.eta_bp - cplx(1.013456, 0.003155)) < 1e-5);
  CHECK_FALSE(bp.estimate.poor_fit);
  CHECK_THROWS_AS(add_branch_point(s, det.id, 10000), ValidationError);
}
