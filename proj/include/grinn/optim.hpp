#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace grinn {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;
};

/// One bias-corrected Adam update of `params` in place.
void adam_step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& grad, AdamState& state,
               const AdamOptions& options = {});

/// Objective returning f(x) and writing its gradient.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct LbfgsOptions {
  int memory = 10;
  int max_iterations = 1000;
  double gtol = 1e-10;   // infinity norm of the gradient
  double ftol = 1e-14;   // relative decrease between accepted iterates
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_line_search = 30;
};

enum class LbfgsStatus { gradient_converged, function_converged, max_iterations, line_search_failed };

const char* to_string(LbfgsStatus status);

struct LbfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int iterations = 0;
  int evaluations = 0;
  LbfgsStatus status = LbfgsStatus::max_iterations;
  /// Set when the line search failed and the best-seen point was returned.
  bool warning = false;
  /// Objective at every accepted iterate, starting with f(x0).
  std::vector<double> history;
};

/// Called after each accepted iterate with (iteration, f).
using IterationCallback = std::function<void(int, double)>;

/// Limited-memory BFGS (two-loop recursion) with a strong-Wolfe line search.
LbfgsResult lbfgs_minimize(const Objective& objective, Eigen::VectorXd x0,
                           const LbfgsOptions& options = {},
                           const IterationCallback& on_iteration = {});

}  // namespace grinn
