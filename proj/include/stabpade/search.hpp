#pragma once

#include <functional>
#include <string>
#include <vector>

#include "stabpade/model.hpp"

namespace stabpade {

struct GoldenResult {
  double x = 0.0;
  double f = 0.0;
  bool interior = true;  // false when the minimum sits at a bracket end
  int evaluations = 0;
};

// Golden-section minimization of f on [lo, hi] down to a bracket of xtol.
GoldenResult golden_section(const std::function<double(double)>& f, double lo, double hi, double xtol);

// Alternating one-dimensional minimization: theta at fixed alpha, then alpha
// at fixed theta, repeated until eta moves by less than tol between rounds.
// Brackets are centred on the current point and halve whenever the line
// minimum is interior, so the iteration settles even on noisy objectives.
struct AlternatingOptions {
  double tol = 1e-6;
  bool relative = false;          // tol scaled by max(1, |eta|)
  int max_rounds = 50;
  double theta_half_width = 0.1;
  double alpha_half_width = 0.1;  // fraction of alpha
  double line_tol = 1e-9;         // golden bracket, in theta / relative alpha units
  double theta_min = 0.0;
  double theta_max = kMaxTheta;
  double flat_value = -1.0;       // stop once both objectives are <= this
};

struct AlternatingResult {
  ScalingParameter eta;
  double theta_objective = 0.0;
  double alpha_objective = 0.0;
  int rounds = 0;
  bool flat = false;              // stopped on flat_value
  std::vector<ScalingParameter> path;

  std::string trace() const;
};

using Objective = std::function<double(double alpha, double theta)>;

// Throws ConvergenceError (with the path as trace) after max_rounds.
AlternatingResult alternating_search(const Objective& theta_objective, const Objective& alpha_objective,
                                     ScalingParameter start, const AlternatingOptions& options = {});

}  // namespace stabpade
