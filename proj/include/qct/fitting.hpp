#pragma once

// Curve fits for the fidelity -> 1 edge (y = a (b - x)^c) and for complexity
// growth in n (linear, and exponential base 2).

#include <string>
#include <utility>
#include <vector>

#include "qct/linalg.hpp"

namespace qct {

struct Envelope;

enum class FitModel { Power, Linear, Exp2 };

const char* model_name(FitModel m);
FitModel parse_model(const std::string& name);

struct FitPoint {
  double x = 0.0;
  double y = 0.0;
};

struct FitResult {
  FitModel model = FitModel::Power;
  // Power: {a, b, c}. Linear: {slope, intercept}. Exp2: {prefactor p, rate q}.
  std::vector<double> parameters;
  double residual_sum_squares = 0.0;
  int point_count = 0;
  double window_low = 0.0;  // y-window for Power; x-range of the data otherwise
  double window_high = 0.0;
  int iterations = 0;
  bool converged = true;

  /// b for Power fits, the T(U)/T2max estimate.
  double estimate() const;
  double evaluate(double x) const;
};

/// Thrown when the power fit fails to converge; carries the best iterate.
class FitNoConvergence : public NoConvergence {
 public:
  FitNoConvergence(const std::string& what, FitResult best)
      : NoConvergence(what), best_(std::move(best)) {}
  const FitResult& best() const { return best_; }

 private:
  FitResult best_;
};

struct PowerFitOptions {
  double window_low = 0.002;
  double window_high = 0.01;
  int max_iterations = 500;
  double step_tolerance = 1e-13;
};

/// Least squares y = a (b - x)^c with a > 0, b > max x, c > 0 over points whose
/// y lies in the window. Damped Gauss-Newton from b0 = max x + 0.1 (max x -
/// min x), c0 = 3, a0 matched to the two extreme window points.
FitResult fit_power(const std::vector<FitPoint>& points, const PowerFitOptions& opts = {});

/// Ordinary least squares t = slope * n + intercept.
FitResult fit_linear(const std::vector<FitPoint>& points);

/// t = p * 2^(q n) via least squares on log2 t.
FitResult fit_exp2(const std::vector<FitPoint>& points);

/// Power fit of (T/T2max, 1 - F) over the converged envelope points.
FitResult estimate_time_complexity(const Envelope& envelope, const PowerFitOptions& opts = {});

}  // namespace qct
