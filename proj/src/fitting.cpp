#include "qct/fitting.hpp"

#include <algorithm>
#include <cmath>

#include "qct/continuation.hpp"

namespace qct {

const char* model_name(FitModel m) {
  switch (m) {
    case FitModel::Power: return "power";
    case FitModel::Linear: return "linear";
    case FitModel::Exp2: return "exp2";
  }
  return "?";
}

FitModel parse_model(const std::string& name) {
  if (name == "power") return FitModel::Power;
  if (name == "linear") return FitModel::Linear;
  if (name == "exp2") return FitModel::Exp2;
  throw InvalidArgument("unknown fit model: " + name);
}

double FitResult::estimate() const {
  if (model != FitModel::Power || parameters.size() != 3)
    throw InvalidArgument("estimate() is defined for power fits only");
  return parameters[1];
}

double FitResult::evaluate(double x) const {
  switch (model) {
    case FitModel::Power: return parameters[0] * std::pow(parameters[1] - x, parameters[2]);
    case FitModel::Linear: return parameters[0] * x + parameters[1];
    case FitModel::Exp2: return parameters[0] * std::exp2(parameters[1] * x);
  }
  return 0.0;
}

namespace {

// Sorting first makes every fit independent of input order, bit for bit.
std::vector<FitPoint> sorted(std::vector<FitPoint> pts) {
  std::sort(pts.begin(), pts.end(), [](const FitPoint& l, const FitPoint& r) {
    return l.x < r.x || (l.x == r.x && l.y < r.y);
  });
  return pts;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rss = 0.0;
};

LineFit ols(const std::vector<FitPoint>& pts) {
  const double n = static_cast<double>(pts.size());
  double mx = 0.0, my = 0.0;
  for (const auto& p : pts) {
    mx += p.x;
    my += p.y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& p : pts) {
    sxx += (p.x - mx) * (p.x - mx);
    sxy += (p.x - mx) * (p.y - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  for (const auto& p : pts) {
    const double r = p.y - (f.slope * p.x + f.intercept);
    f.rss += r * r;
  }
  return f;
}

void require_distinct_x(const std::vector<FitPoint>& pts, const char* who) {
  if (pts.size() < 2) throw InsufficientData(std::string(who) + ": need at least 2 points");
  const bool distinct = std::any_of(pts.begin(), pts.end(),
                                    [&](const FitPoint& p) { return p.x != pts.front().x; });
  if (!distinct) throw InsufficientData(std::string(who) + ": need at least 2 distinct x values");
}

double power_rss(const std::vector<FitPoint>& pts, double a, double b, double c) {
  double rss = 0.0;
  for (const auto& p : pts) {
    const double r = p.y - a * std::pow(b - p.x, c);
    rss += r * r;
  }
  return rss;
}

// For fixed b the model is linear in log space: log y = log a + c log(b - x).
// Returns the log-space residual and sets (a, c).
double log_profile(const std::vector<FitPoint>& pts, double b, double& a, double& c) {
  std::vector<FitPoint> logs;
  for (const auto& p : pts) logs.push_back({std::log(b - p.x), std::log(p.y)});
  const LineFit f = ols(logs);
  c = f.slope;
  a = std::exp(f.intercept);
  return f.rss;
}

// Start values: the scan starts at b0 = max x + 0.1 (max x - min x) and walks
// b - max x geometrically outwards; the best log-space profile point, refined
// by golden section, seeds Gauss-Newton. A narrow x range otherwise leaves b0
// so close to the pole that the iteration escapes along the (b, c) valley.
void profile_seed(const std::vector<FitPoint>& pts, double& b, double& a, double& c) {
  const double xmax = pts.back().x;
  const double d0 = std::max(b - xmax, 1e-9);
  auto cost = [&](double log_d) {
    double aa, cc;
    return log_profile(pts, xmax + std::exp(log_d), aa, cc);
  };
  // d from d0 / 100 to d0 * 1e5, 50 points per decade.
  const double lo = std::log(d0) - std::log(100.0);
  const double hi = std::log(d0) + std::log(1e5);
  const int steps = 350;
  int best = 0;
  double best_cost = cost(lo);
  for (int k = 1; k <= steps; ++k) {
    const double v = cost(lo + (hi - lo) * k / steps);
    if (v < best_cost) {
      best_cost = v;
      best = k;
    }
  }
  double l = lo + (hi - lo) * std::max(best - 1, 0) / steps;
  double r = lo + (hi - lo) * std::min(best + 1, steps) / steps;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 100 && r - l > 1e-14; ++it) {
    const double m1 = r - g * (r - l);
    const double m2 = l + g * (r - l);
    if (cost(m1) < cost(m2)) r = m2; else l = m1;
  }
  const double log_d = 0.5 * (l + r);
  b = xmax + std::exp(log_d);
  log_profile(pts, b, a, c);
}

}  // namespace

FitResult fit_power(const std::vector<FitPoint>& points, const PowerFitOptions& opts) {
  std::vector<FitPoint> pts;
  for (const auto& p : sorted(points))
    if (p.y >= opts.window_low && p.y <= opts.window_high) pts.push_back(p);
  if (pts.size() < 4)
    throw InsufficientData("fit_power: " + std::to_string(pts.size()) +
                           " points inside the fit window, need at least 4");

  const double xmin = pts.front().x;
  const double xmax = pts.back().x;
  double b = xmax + 0.1 * (xmax - xmin);
  double c = 3.0;
  double a = 0.0;
  profile_seed(pts, b, a, c);

  FitResult res;
  res.model = FitModel::Power;
  res.point_count = static_cast<int>(pts.size());
  res.window_low = opts.window_low;
  res.window_high = opts.window_high;
  res.converged = false;

  double rss = power_rss(pts, a, b, c);
  const auto m = static_cast<Eigen::Index>(pts.size());
  for (int it = 1; it <= opts.max_iterations; ++it) {
    res.iterations = it;
    Eigen::MatrixXd J(m, 3);
    Eigen::VectorXd r(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double d = b - pts[i].x;
      const double pw = std::pow(d, c);
      r[i] = pts[i].y - a * pw;
      J(i, 0) = pw;
      J(i, 1) = a * c * std::pow(d, c - 1.0);
      J(i, 2) = a * pw * std::log(d);
    }
    // Column scaling keeps the strongly correlated (a, b, c) system solvable.
    const Eigen::VectorXd scale = J.colwise().norm().transpose().cwiseMax(1e-300);
    const Eigen::MatrixXd Js = J * scale.cwiseInverse().asDiagonal();
    const Eigen::VectorXd step =
        Js.completeOrthogonalDecomposition().solve(r).cwiseQuotient(scale);

    double damping = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving, damping *= 0.5) {
      const double na = a + damping * step[0];
      const double nb = b + damping * step[1];
      const double nc = c + damping * step[2];
      if (!(na > 0.0 && nb > xmax && nc > 0.0)) continue;
      const double nrss = power_rss(pts, na, nb, nc);
      if (nrss <= rss) {
        const double rel = std::abs(na - a) / a + std::abs(nb - b) / std::abs(b) + std::abs(nc - c) / c;
        a = na;
        b = nb;
        c = nc;
        rss = nrss;
        accepted = true;
        if (rel < opts.step_tolerance) res.converged = true;
        break;
      }
    }
    if (!accepted || rss == 0.0) res.converged = true;  // no further descent possible
    if (res.converged) break;
  }

  res.parameters = {a, b, c};
  res.residual_sum_squares = rss;
  if (!res.converged) throw FitNoConvergence("fit_power: iteration limit reached", res);
  return res;
}

FitResult fit_linear(const std::vector<FitPoint>& points) {
  const auto pts = sorted(points);
  require_distinct_x(pts, "fit_linear");
  const LineFit f = ols(pts);
  FitResult res;
  res.model = FitModel::Linear;
  res.parameters = {f.slope, f.intercept};
  res.residual_sum_squares = f.rss;
  res.point_count = static_cast<int>(pts.size());
  res.window_low = pts.front().x;
  res.window_high = pts.back().x;
  return res;
}

FitResult fit_exp2(const std::vector<FitPoint>& points) {
  auto pts = sorted(points);
  for (const auto& p : pts)
    if (!(p.y > 0.0)) throw InvalidArgument("fit_exp2: all values must be positive");
  require_distinct_x(pts, "fit_exp2");
  std::vector<FitPoint> logs;
  for (const auto& p : pts) logs.push_back({p.x, std::log2(p.y)});
  const LineFit f = ols(logs);
  FitResult res;
  res.model = FitModel::Exp2;
  res.parameters = {std::exp2(f.intercept), f.slope};
  res.point_count = static_cast<int>(pts.size());
  res.window_low = pts.front().x;
  res.window_high = pts.back().x;
  for (const auto& p : pts) {
    const double r = p.y - res.evaluate(p.x);
    res.residual_sum_squares += r * r;
  }
  return res;
}

FitResult estimate_time_complexity(const Envelope& envelope, const PowerFitOptions& opts) {
  std::vector<FitPoint> pts;
  for (const auto& e : envelope.entries)
    if (e.converged) pts.push_back({e.T_over_T2max, 1.0 - e.fidelity});
  return fit_power(pts, opts);
}

}  // namespace qct
