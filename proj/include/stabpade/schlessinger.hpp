#pragma once

#include <string>
#include <vector>

#include "stabpade/errors.hpp"
#include "stabpade/model.hpp"
#include "stabpade/stabilization.hpp"

namespace stabpade {

struct SamplePoint {
  double alpha = 0.0;
  double energy = 0.0;

  bool operator==(const SamplePoint&) const = default;
};

// Degenerate input to the Schlessinger recursion; point is the index into the
// caller's point list.
class DegenerateDataError : public NumericError {
 public:
  DegenerateDataError(int point, const std::string& what) : NumericError(what), point_(point) {}
  int point() const noexcept { return point_; }

 private:
  int point_;
};

// C_M(eta) = E_1 / (1 + z_1 (eta - a_1) / (1 + z_2 (eta - a_2) / ( ... / (1 + z_{M-1} (eta - a_{M-1})))))
//
// Interpolates (a_i, E_i) for i = 1..M.  Immutable after fit().
class ContinuedFraction {
 public:
  ContinuedFraction() = default;

  const std::vector<double>& abscissae() const noexcept { return abscissae_; }
  const std::vector<double>& values() const noexcept { return values_; }
  const std::vector<cplx>& coefficients() const noexcept { return coefficients_; }
  // order()[i] is the caller's index of the point fed i-th into the recursion.
  const std::vector<int>& order() const noexcept { return order_; }
  int size() const noexcept { return static_cast<int>(abscissae_.size()); }
  bool reordered() const noexcept { return reordered_; }

  // The fraction built from the first m points (same leading coefficients).
  ContinuedFraction truncated(int m) const;

  // Rebuilds a stored fraction without refitting; sizes must agree.
  static ContinuedFraction restore(std::vector<double> abscissae, std::vector<double> values,
                                   std::vector<cplx> coefficients, std::vector<int> order, bool reordered);

  bool operator==(const ContinuedFraction&) const = default;

 private:
  friend ContinuedFraction fit(const std::vector<SamplePoint>& points);
  std::vector<double> abscissae_;
  std::vector<double> values_;
  std::vector<cplx> coefficients_;
  std::vector<int> order_;
  bool reordered_ = false;
};

// Points are used in the given order.  At least two points with distinct
// abscissae; a near-zero Moebius denominator moves the offending point last
// and refits once.
ContinuedFraction fit(const std::vector<SamplePoint>& points);

struct PadeValue {
  cplx value{};
  cplx derivative{};         // dC/deta
  cplx second_derivative{};  // d2C/deta2
  double pade_error = 0.0;   // |C_M - C_{M-1}|
  bool pole = false;         // intermediate denominator < 1e-30: other fields unset
};

PadeValue evaluate(const ContinuedFraction& cf, cplx eta);

// Value only; returns false at a pole.
bool evaluate_value(const ContinuedFraction& cf, cplx eta, cplx& value);

// Evenly spaced subsample of count indices out of [first, last].
std::vector<int> subsample(int first, int last, int count);

constexpr int kDefaultOrder = 25;

// Points of a window, subsampled to min(size, order) when order > 0.
std::vector<SamplePoint> window_points(const StabilizationData& data, const StableWindow& window,
                                       int order = kDefaultOrder);

struct FitDiagnostics {
  std::vector<double> interpolation_residuals;  // at the fit abscissae
  std::vector<double> off_sample_alpha;         // window points not used by the fit
  std::vector<double> off_sample_residuals;
  std::vector<double> leave_one_out_residuals;  // refit without point i, evaluated there
  std::vector<double> coefficient_magnitudes;
  double coefficient_growth = 0.0;  // geometric-mean ratio |z_{k+1}| / |z_k|
  double min_spacing = 0.0;         // smallest consecutive abscissa gap (sorted)
  double window_span = 0.0;
  std::vector<std::string> warnings;

  double max_interpolation_residual() const;
  double max_leave_one_out_residual() const;
  double max_off_sample_residual() const;
};

// window holds every point of the stable window (the fit may use a subsample).
FitDiagnostics diagnose(const ContinuedFraction& cf, const std::vector<SamplePoint>& window);

}  // namespace stabpade
