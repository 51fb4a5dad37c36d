#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "grinn/error.hpp"
#include "grinn/optim.hpp"

namespace grinn {

const char* to_string(LbfgsStatus status) {
  switch (status) {
    case LbfgsStatus::gradient_converged: return "gradient_converged";
    case LbfgsStatus::function_converged: return "function_converged";
    case LbfgsStatus::max_iterations: return "max_iterations";
    case LbfgsStatus::line_search_failed: return "line_search_failed";
  }
  return "unknown";
}

namespace {

struct Sample {
  double a = 0.0;
  double f = 0.0;
  double d = 0.0;  // directional derivative
};

// Minimizer of the cubic interpolating (a, f, d) at both ends, or the
// midpoint when the cubic is degenerate or lands outside the safeguard.
double cubic_step(const Sample& lo, const Sample& hi) {
  const double d1 = lo.d + hi.d - 3.0 * (lo.f - hi.f) / (lo.a - hi.a);
  const double disc = d1 * d1 - lo.d * hi.d;
  const double mid = 0.5 * (lo.a + hi.a);
  if (disc < 0.0) return mid;
  const double d2 = std::copysign(std::sqrt(disc), hi.a - lo.a);
  const double a = hi.a - (hi.a - lo.a) * (hi.d + d2 - d1) / (hi.d - lo.d + 2.0 * d2);
  const double left = std::min(lo.a, hi.a);
  const double right = std::max(lo.a, hi.a);
  const double margin = 0.1 * (right - left);
  if (!std::isfinite(a) || a < left + margin || a > right - margin) return mid;
  return a;
}

class LineSearch {
 public:
  LineSearch(const Objective& objective, const LbfgsOptions& options, const Eigen::VectorXd& x,
             const Eigen::VectorXd& p, double f0, double d0)
      : objective_(objective), o_(options), x_(x), p_(p), f0_(f0), d0_(d0) {
    best_.f = std::numeric_limits<double>::infinity();
  }

  // Returns true when a strong-Wolfe point was found; the point is in
  // (x_new, f_new, g_new). best_* track the lowest objective seen.
  bool run(double a_init) {
    Sample prev{0.0, f0_, d0_};
    double a = a_init;
    for (int i = 0; i < o_.max_line_search; ++i) {
      Sample cur = eval(a);
      if (!std::isfinite(cur.f) || cur.f > f0_ + o_.c1 * a * d0_ || (i > 0 && cur.f >= prev.f)) {
        if (!std::isfinite(cur.f)) {
          // Step too long: shrink and retry without a bracket.
          a *= 0.1;
          continue;
        }
        return zoom(prev, cur);
      }
      if (std::abs(cur.d) <= -o_.c2 * d0_) return accept();
      if (cur.d >= 0.0) return zoom(cur, prev);
      prev = cur;
      a *= 2.0;
    }
    return false;
  }

  int evaluations() const { return evaluations_; }
  Eigen::VectorXd x_new, g_new;
  double f_new = 0.0;
  Eigen::VectorXd best_x, best_g;
  Sample best_;

 private:
  Sample eval(double a) {
    trial_x_ = x_ + a * p_;
    trial_g_.resize(x_.size());
    const double f = objective_(trial_x_, trial_g_);
    ++evaluations_;
    Sample s{a, f, trial_g_.dot(p_)};
    if (std::isfinite(f) && f < best_.f) {
      best_ = s;
      best_x = trial_x_;
      best_g = trial_g_;
    }
    last_ = s;
    return s;
  }

  bool accept() {
    x_new = trial_x_;
    g_new = trial_g_;
    f_new = last_.f;
    return true;
  }

  bool zoom(Sample lo, Sample hi) {
    while (evaluations_ < o_.max_line_search) {
      if (std::abs(hi.a - lo.a) < 1e-16 * std::max(1.0, std::abs(lo.a))) return false;
      const double a = std::isfinite(hi.f) ? cubic_step(lo, hi) : 0.5 * (lo.a + hi.a);
      Sample cur = eval(a);
      if (!std::isfinite(cur.f) || cur.f > f0_ + o_.c1 * a * d0_ || cur.f >= lo.f) {
        hi = cur;
      } else {
        if (std::abs(cur.d) <= -o_.c2 * d0_) return accept();
        if (cur.d * (hi.a - lo.a) >= 0.0) hi = lo;
        lo = cur;
      }
    }
    return false;
  }

  const Objective& objective_;
  const LbfgsOptions& o_;
  const Eigen::VectorXd& x_;
  const Eigen::VectorXd& p_;
  double f0_;
  double d0_;
  Eigen::VectorXd trial_x_, trial_g_;
  Sample last_;
  int evaluations_ = 0;
};

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& objective, Eigen::VectorXd x0,
                           const LbfgsOptions& o, const IterationCallback& on_iteration) {
  if (o.memory < 1) throw Error(ErrorKind::invalid_config, "L-BFGS memory must be >= 1");
  LbfgsResult result;
  Eigen::VectorXd x = std::move(x0);
  Eigen::VectorXd g(x.size());
  double f = objective(x, g);
  result.evaluations = 1;
  if (!std::isfinite(f)) throw Error(ErrorKind::training_failure, "non-finite initial objective");
  result.history.push_back(f);

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  std::vector<double> alpha(static_cast<std::size_t>(o.memory));

  Eigen::VectorXd best_x = x;
  double best_f = f;

  result.status = LbfgsStatus::max_iterations;
  for (int iter = 0; iter < o.max_iterations; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() < o.gtol) {
      result.status = LbfgsStatus::gradient_converged;
      break;
    }
    // Two-loop recursion for p = -H g.
    Eigen::VectorXd q = g;
    const int m = static_cast<int>(s_hist.size());
    for (int i = m - 1; i >= 0; --i) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    double gamma = 1.0;
    if (m > 0) gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    q *= gamma;
    for (int i = 0; i < m; ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(q);
      q += (alpha[i] - beta) * s_hist[i];
    }
    Eigen::VectorXd p = -q;
    double d0 = g.dot(p);
    if (!(d0 < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      p = -g;
      d0 = -g.squaredNorm();
    }
    const double a_init = (m == 0) ? std::min(1.0, 1.0 / g.lpNorm<1>()) : 1.0;

    LineSearch ls(objective, o, x, p, f, d0);
    const bool ok = ls.run(a_init);
    result.evaluations += ls.evaluations();
    if (ls.best_.f < best_f) {
      best_f = ls.best_.f;
      best_x = ls.best_x;
    }
    if (!ok) {
      if (ls.best_.f < f) {
        x = ls.best_x;
        g = ls.best_g;
        f = ls.best_.f;
      }
      result.status = LbfgsStatus::line_search_failed;
      result.warning = true;
      break;
    }
    Eigen::VectorXd s = ls.x_new - x;
    Eigen::VectorXd y = ls.g_new - g;
    const double f_prev = f;
    x = std::move(ls.x_new);
    g = std::move(ls.g_new);
    f = ls.f_new;
    ++result.iterations;
    result.history.push_back(f);
    if (on_iteration) on_iteration(result.iterations, f);

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (static_cast<int>(s_hist.size()) == o.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
    }
    const double scale = std::max({std::abs(f_prev), std::abs(f), 1e-300});
    if ((f_prev - f) / scale < o.ftol) {
      result.status = LbfgsStatus::function_converged;
      break;
    }
  }
  if (best_f < f) {
    x = std::move(best_x);
    f = best_f;
  }
  result.x = std::move(x);
  result.f = f;
  return result;
}

}  // namespace grinn
