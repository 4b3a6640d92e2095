#include "stabpade/serialize.hpp"

#include <charconv>
#include <cmath>
#include <limits>

namespace stabpade {

json number_to_json(double x) {
  if (std::isnan(x)) return nullptr;
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

double number_from_json(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw ValidationError("", "expected a number, got \"" + s + "\"");
  }
  if (!j.is_number()) throw ValidationError("", "expected a number");
  return j.get<double>();
}

json complex_to_json(cplx z) { return json::array({number_to_json(z.real()), number_to_json(z.imag())}); }

cplx complex_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ValidationError("", "complex numbers are [re, im]");
  return {number_from_json(j[0]), number_from_json(j[1])};
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

namespace {

json numbers(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(number_to_json(x));
  return a;
}

std::vector<double> numbers_from(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw ValidationError(key, "missing field");
  if (!it->is_array()) throw ValidationError(key, "expected an array");
  std::vector<double> out;
  out.reserve(it->size());
  try {
    for (const auto& x : *it) out.push_back(number_from_json(x));
  } catch (const ValidationError& e) {
    throw ValidationError(key, e.what());
  }
  return out;
}

json complexes(const std::vector<cplx>& v) {
  json a = json::array();
  for (cplx z : v) a.push_back(complex_to_json(z));
  return a;
}

std::vector<cplx> complexes_from(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw ValidationError(key, "missing field");
  if (!it->is_array()) throw ValidationError(key, "expected an array");
  std::vector<cplx> out;
  try {
    for (const auto& x : *it) out.push_back(complex_from_json(x));
  } catch (const ValidationError& e) {
    throw ValidationError(key, e.what());
  }
  return out;
}

double number_field(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw ValidationError(key, "missing field");
  try {
    return number_from_json(*it);
  } catch (const ValidationError& e) {
    throw ValidationError(key, e.what());
  }
}

cplx complex_field(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw ValidationError(key, "missing field");
  try {
    return complex_from_json(*it);
  } catch (const ValidationError& e) {
    throw ValidationError(key, e.what());
  }
}

json matrix(const std::vector<std::vector<double>>& m) {
  json a = json::array();
  for (const auto& row : m) a.push_back(numbers(row));
  return a;
}

std::vector<std::vector<double>> matrix_from(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_array()) throw ValidationError(key, "missing or not an array");
  std::vector<std::vector<double>> out;
  for (const auto& row : *it) out.push_back(numbers_from(json{{key, row}}, key));
  return out;
}

}  // namespace

void to_json(json& j, const ModelSpec& v) {
  j = json{{"family", to_string(v.family)}, {"parameters", numbers(v.parameters)}, {"mass", v.mass}, {"hbar", v.hbar}};
}

void from_json(const json& j, ModelSpec& v) {
  v.family = potential_family_from_string(get_field<std::string>(j, "family"));
  v.parameters = numbers_from(j, "parameters");
  v.mass = j.contains("mass") ? number_field(j, "mass") : 1.0;
  v.hbar = j.contains("hbar") ? number_field(j, "hbar") : 1.0;
}

void to_json(json& j, const BasisSpec& v) {
  j = json{{"kind", to_string(v.kind)},        {"size", v.size},   {"width", v.width},
           {"base_exponent", v.base_exponent}, {"ratio", v.ratio}, {"quadrature_order", v.quadrature_order}};
}

void from_json(const json& j, BasisSpec& v) {
  v = BasisSpec{};
  v.kind = basis_kind_from_string(get_field<std::string>(j, "kind"));
  v.size = get_field<int>(j, "size");
  if (j.contains("width")) v.width = number_field(j, "width");
  if (j.contains("base_exponent")) v.base_exponent = number_field(j, "base_exponent");
  if (j.contains("ratio")) v.ratio = number_field(j, "ratio");
  if (j.contains("quadrature_order")) v.quadrature_order = get_field<int>(j, "quadrature_order");
}

void to_json(json& j, const ScalingParameter& v) { j = json{{"alpha", v.alpha}, {"theta", v.theta}}; }

void from_json(const json& j, ScalingParameter& v) {
  v.alpha = number_field(j, "alpha");
  v.theta = number_field(j, "theta");
}

void to_json(json& j, const StabilizationData& v) {
  j = json{{"alpha_grid", numbers(v.alpha_grid)},
           {"curves", matrix(v.curves)},
           {"tracking_quality", numbers(v.tracking_quality)},
           {"source", to_string(v.source)},
           {"tracking", to_string(v.tracking)},
           {"metadata", v.metadata}};
}

void from_json(const json& j, StabilizationData& v) {
  v.alpha_grid = numbers_from(j, "alpha_grid");
  v.curves = matrix_from(j, "curves");
  v.tracking_quality = numbers_from(j, "tracking_quality");
  v.source = data_source_from_string(get_field<std::string>(j, "source"));
  v.tracking = tracking_method_from_string(get_field<std::string>(j, "tracking"));
  v.metadata = j.contains("metadata") ? get_field<std::map<std::string, std::string>>(j, "metadata")
                                      : std::map<std::string, std::string>{};
}

void to_json(json& j, const AvoidedCrossing& v) {
  j = json{{"lower_level", v.lower_level}, {"upper_level", v.upper_level},
           {"curve_a", v.curve_a},         {"curve_b", v.curve_b},
           {"grid_index", v.grid_index},   {"alpha_at_min_gap", v.alpha_at_min_gap},
           {"min_gap", v.min_gap}};
}

void from_json(const json& j, AvoidedCrossing& v) {
  v.lower_level = get_field<int>(j, "lower_level");
  v.upper_level = get_field<int>(j, "upper_level");
  v.curve_a = get_field<int>(j, "curve_a");
  v.curve_b = get_field<int>(j, "curve_b");
  v.grid_index = get_field<int>(j, "grid_index");
  v.alpha_at_min_gap = number_field(j, "alpha_at_min_gap");
  v.min_gap = number_field(j, "min_gap");
}

void to_json(json& j, const StableWindow& v) {
  j = json{{"root_index", v.root_index},   {"alpha_lo", v.alpha_lo},       {"alpha_hi", v.alpha_hi},
           {"first_index", v.first_index}, {"last_index", v.last_index},   {"flatness", v.flatness},
           {"mean_energy", v.mean_energy}};
}

void from_json(const json& j, StableWindow& v) {
  v.root_index = get_field<int>(j, "root_index");
  v.alpha_lo = number_field(j, "alpha_lo");
  v.alpha_hi = number_field(j, "alpha_hi");
  v.first_index = get_field<int>(j, "first_index");
  v.last_index = get_field<int>(j, "last_index");
  v.flatness = number_field(j, "flatness");
  v.mean_energy = number_field(j, "mean_energy");
}

void to_json(json& j, const WindowOptions& v) {
  j = json{{"flatness_tol", v.flatness_tol},
           {"min_points", v.min_points},
           {"guard_margin", v.guard_margin},
           {"gap_tol", v.gap_tol}};
}

void from_json(const json& j, WindowOptions& v) {
  v = WindowOptions{};
  if (j.contains("flatness_tol")) v.flatness_tol = number_field(j, "flatness_tol");
  if (j.contains("min_points")) v.min_points = get_field<int>(j, "min_points");
  if (j.contains("guard_margin")) v.guard_margin = get_field<int>(j, "guard_margin");
  if (j.contains("gap_tol")) v.gap_tol = number_field(j, "gap_tol");
}

void to_json(json& j, const WindowReport& v) {
  j = json{{"windows", v.windows}, {"crossings", v.crossings}, {"gap_tol", v.gap_tol}, {"diagnostics", v.diagnostics}};
}

void from_json(const json& j, WindowReport& v) {
  v.windows = get_field<std::vector<StableWindow>>(j, "windows");
  v.crossings = get_field<std::vector<AvoidedCrossing>>(j, "crossings");
  v.gap_tol = number_field(j, "gap_tol");
  v.diagnostics = get_field<std::vector<std::string>>(j, "diagnostics");
}

void to_json(json& j, const ContinuedFraction& v) {
  j = json{{"abscissae", numbers(v.abscissae())},
           {"values", numbers(v.values())},
           {"coefficients", complexes(v.coefficients())},
           {"order", v.order()},
           {"reordered", v.reordered()}};
}

void from_json(const json& j, ContinuedFraction& v) {
  v = ContinuedFraction::restore(numbers_from(j, "abscissae"), numbers_from(j, "values"),
                                 complexes_from(j, "coefficients"), get_field<std::vector<int>>(j, "order"),
                                 get_field<bool>(j, "reordered"));
}

void to_json(json& j, const Trajectory& v) {
  j = json{{"kind", to_string(v.kind)},
           {"fixed_value", v.fixed_value},
           {"grid", numbers(v.grid)},
           {"energies", complexes(v.energies)},
           {"pade_errors", numbers(v.pade_errors)},
           {"pole_values", numbers(v.pole_values)}};
}

void from_json(const json& j, Trajectory& v) {
  v.kind = trajectory_kind_from_string(get_field<std::string>(j, "kind"));
  v.fixed_value = number_field(j, "fixed_value");
  v.grid = numbers_from(j, "grid");
  v.energies = complexes_from(j, "energies");
  v.pade_errors = numbers_from(j, "pade_errors");
  v.pole_values = numbers_from(j, "pole_values");
  if (v.energies.size() != v.grid.size() || v.pade_errors.size() != v.grid.size())
    throw ValidationError("energies", "grid, energies and pade_errors differ in length");
}

void to_json(json& j, const SeedRegion& v) {
  j = json{{"alpha_lo", v.alpha_lo}, {"alpha_hi", v.alpha_hi}, {"theta_lo", v.theta_lo}, {"theta_hi", v.theta_hi}};
}

void from_json(const json& j, SeedRegion& v) {
  v.alpha_lo = number_field(j, "alpha_lo");
  v.alpha_hi = number_field(j, "alpha_hi");
  v.theta_lo = j.contains("theta_lo") ? number_field(j, "theta_lo") : 0.0;
  v.theta_hi = j.contains("theta_hi") ? number_field(j, "theta_hi") : kMaxTheta;
}

void to_json(json& j, const StationaryPoint& v) {
  j = json{{"eta_star", v.eta_star},
           {"energy", complex_to_json(v.energy)},
           {"width", number_to_json(v.width)},
           {"derivative_norm", number_to_json(v.derivative_norm)},
           {"pade_error", number_to_json(v.pade_error)},
           {"window_id", v.window_id},
           {"theta_cut", v.theta_cut},
           {"alpha_cut", v.alpha_cut}};
}

void from_json(const json& j, StationaryPoint& v) {
  v.eta_star = get_field<ScalingParameter>(j, "eta_star");
  v.energy = complex_field(j, "energy");
  v.width = number_field(j, "width");
  v.derivative_norm = number_field(j, "derivative_norm");
  v.pade_error = number_field(j, "pade_error");
  v.window_id = get_field<std::string>(j, "window_id");
  v.theta_cut = get_field<Trajectory>(j, "theta_cut");
  v.alpha_cut = get_field<Trajectory>(j, "alpha_cut");
}

void to_json(json& j, const DerivativeLandscape& v) {
  j = json{{"alpha_grid", numbers(v.alpha_grid)},
           {"theta_grid", numbers(v.theta_grid)},
           {"d_theta", matrix(v.d_theta)},
           {"d_alpha", matrix(v.d_alpha)}};
}

void from_json(const json& j, DerivativeLandscape& v) {
  v.alpha_grid = numbers_from(j, "alpha_grid");
  v.theta_grid = numbers_from(j, "theta_grid");
  v.d_theta = matrix_from(j, "d_theta");
  v.d_alpha = matrix_from(j, "d_alpha");
  const auto shaped = [&](const std::vector<std::vector<double>>& m) {
    if (m.size() != v.alpha_grid.size()) return false;
    for (const auto& row : m)
      if (row.size() != v.theta_grid.size()) return false;
    return true;
  };
  if (!shaped(v.d_theta) || !shaped(v.d_alpha))
    throw ValidationError("d_theta", "landscape arrays do not match the alpha x theta grid");
}

void to_json(json& j, const BranchPointEstimate& v) {
  j = json{{"eta_bp", complex_to_json(v.eta_bp)},
           {"energy_bp", complex_to_json(v.energy_bp)},
           {"b", complex_to_json(v.b)},
           {"residual", number_to_json(v.residual)},
           {"poor_fit", v.poor_fit}};
}

void from_json(const json& j, BranchPointEstimate& v) {
  v.eta_bp = complex_field(j, "eta_bp");
  v.energy_bp = complex_field(j, "energy_bp");
  v.b = complex_field(j, "b");
  v.residual = number_field(j, "residual");
  v.poor_fit = get_field<bool>(j, "poor_fit");
}

void to_json(json& j, const UcsStationaryPoint& v) {
  j = json{{"eta_star", v.eta_star},
           {"energy", complex_to_json(v.energy)},
           {"numerical_derivative_norm", number_to_json(v.numerical_derivative_norm)},
           {"rounds", v.rounds}};
}

void from_json(const json& j, UcsStationaryPoint& v) {
  v.eta_star = get_field<ScalingParameter>(j, "eta_star");
  v.energy = complex_field(j, "energy");
  v.numerical_derivative_norm = number_field(j, "numerical_derivative_norm");
  v.rounds = get_field<int>(j, "rounds");
}

}  // namespace stabpade
