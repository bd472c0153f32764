#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include <Eigen/Dense>

#include "acerax/errors.hpp"

namespace acerax {

struct GradCheckReport {
  double max_relative_error = 0.0;
  Eigen::Index worst_index = -1;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
  Eigen::Index coordinates = 0;
  bool passed = true;
};

// Denominator floor so that coordinates where both gradients vanish do not
// divide by zero.
inline constexpr double kRelativeErrorFloor = 1e-6;

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), kRelativeErrorFloor});
}

/// Compares an analytic gradient against central differences of `loss`
/// around `params`, coordinate by coordinate.
inline GradCheckReport finite_diff_check(const std::function<double(const Eigen::VectorXd&)>& loss,
                                         const Eigen::VectorXd& params, const Eigen::VectorXd& analytic,
                                         double tolerance, double step = 1e-6) {
  detail::require_shape(params.size() == analytic.size(), "gradcheck: gradient length mismatch");
  GradCheckReport report;
  report.coordinates = params.size();
  Eigen::VectorXd probe = params;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    probe[i] = params[i] + step;
    const double up = loss(probe);
    probe[i] = params[i] - step;
    const double down = loss(probe);
    probe[i] = params[i];
    const double numeric = (up - down) / (2.0 * step);
    const double err = relative_error(analytic[i], numeric);
    if (err > report.max_relative_error || report.worst_index < 0) {
      report.max_relative_error = err;
      report.worst_index = i;
      report.analytic_at_worst = analytic[i];
      report.numeric_at_worst = numeric;
    }
  }
  report.passed = report.max_relative_error <= tolerance;
  return report;
}

}  // namespace acerax
