// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance                  run every criterion
//   acceptance --criterion 3    run one (repeatable)

#include <malloc.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "grinn/error.hpp"
#include "grinn/fd_reference.hpp"
#include "grinn/grinn_model.hpp"
#include "grinn/harness.hpp"
#include "grinn/linear_theory.hpp"
#include "grinn/network.hpp"
#include "grinn/random.hpp"

using namespace grinn;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string format(const char* fmt, ...) {
  char buf[1024];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, args);
  va_end(args);
  return buf;
}

void note(const std::string& line) { std::fprintf(stderr, "  %s\n", line.c_str()); }

double max_density_eps(const MismatchReport& r) { return r.field("rho").max; }

// Amplitude of the density perturbation on a snapshot.
double amplitude(std::span<const double> rho, double rho0 = 1.0) {
  double a = 0.0;
  for (double r : rho) a = std::max(a, std::abs(r - rho0));
  return a;
}

std::vector<double> range(double first, double last, double step) {
  std::vector<double> out;
  for (double t = first; t <= last + 1e-9; t += step) out.push_back(t);
  return out;
}

TrainOptions progress(const char* label) {
  TrainOptions o;
  o.on_progress = [label](const LossReport& r) {
    if (r.epoch % 500 != 0) return;
    std::fprintf(stderr, "  [%s %s %5d] loss %.3e\n", label, to_string(r.phase), r.epoch, r.total);
  };
  return o;
}

// ---------------------------------------------------------------------------

Outcome linear_theory_constants() {
  const double tau = 1.0 / growth_rate(1.0 / 1.11);
  const double v1a = velocity_amplitude(0.03, 1.25);
  const bool ok = tau >= 2.28 && tau <= 2.33 && std::abs(v1a - 0.018) <= 1e-6;
  return {ok, format("tau = %.4f (want [2.28, 2.33]); v1a = %.8f (want 0.018 +- 1e-6)", tau, v1a)};
}

Outcome poisson_exactness() {
  struct Grid {
    int d;
    Shape shape;
  };
  const std::vector<Grid> grids{{1, {4096, 1, 1}}, {1, {300, 1, 1}}, {2, {256, 96, 1}},
                                {3, {128, 128, 128}}, {3, {30, 20, 10}}};
  double worst = 0.0;
  for (const Grid& g : grids) {
    const std::size_t n = static_cast<std::size_t>(g.shape[0]) * g.shape[1] * g.shape[2];
    const Vec3 dx{0.7 / g.shape[0], 1.3 / g.shape[1], 0.9 / g.shape[2]};
    CounterRng rng(derive_seed(n, "poisson"));
    std::vector<double> rho(n);
    double mean = 0.0;
    for (double& r : rho) {
      r = 0.2 + rng.uniform();
      mean += r;
    }
    mean /= static_cast<double>(n);
    const auto phi = solve_poisson(rho, g.d, g.shape, dx);
    const auto lap = discrete_laplacian(phi, g.d, g.shape, dx);
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      err = std::max(err, std::abs(lap[i] - (rho[i] - mean)));
      scale = std::max(scale, std::abs(rho[i] - mean));
    }
    worst = std::max(worst, err / scale);
    note(format("grid %dx%dx%d: relative error %.2e", g.shape[0], g.shape[1], g.shape[2],
                err / scale));
  }
  return {worst <= 1e-10, format("worst relative Laplacian error %.2e (want <= 1e-10)", worst)};
}

Outcome fd_case1() {
  const CaseConfig c = paper_case(CaseId::case1);
  const std::vector<double> times{0.5, 1.5, 2.5};
  const auto reports = compare_case(c, {SolverKind::fd, SolverKind::lt}, times, EvalGrid{});
  bool ok = true;
  std::string detail = "density eps max/mean:";
  for (const auto& r : reports) {
    ok = ok && max_density_eps(r) < 1.0;
    detail += format(" t=%.1f %.3f/%.3f%%", r.t, max_density_eps(r), r.field("rho").mean);
  }
  return {ok, detail + " (want < 1%)"};
}

Outcome fd_case3() {
  const CaseConfig c = paper_case(CaseId::case3);
  const std::vector<double> times{1, 2, 3, 4, 5, 6, 7, 8};
  const Trajectory tr = evolve(c, times);
  const auto reports =
      compare_case(c, {SolverKind::fd, SolverKind::lt, nullptr, &tr}, times, EvalGrid{});
  double rho_worst = 0.0, v_worst = 0.0;
  for (const auto& r : reports) {
    note(format("t=%.0f rho max %.3f%% mean %.3f%%  vx max %.3f%% mean %.3f%%", r.t,
                r.field("rho").max, r.field("rho").mean, r.field("vx").max, r.field("vx").mean));
    if (r.t > 6.0 + 1e-9) continue;
    rho_worst = std::max(rho_worst, r.field("rho").max);
    v_worst = std::max(v_worst, r.field("vx").max);
  }
  const double late = amplitude(tr.snapshots.back().rho) / c.amplitude;
  const bool ok = rho_worst < 0.5 && v_worst < 1.0 && late < 0.99;
  return {ok, format("t<=6: density eps %.3f%% (want < 0.5%%), velocity eps %.3f%% (want < 1%%); "
                     "amplitude at t=8 is %.4f of the initial (want < 0.99)",
                     rho_worst, v_worst, late)};
}

Outcome jeans_boundary() {
  CaseConfig above = paper_case(CaseId::case1);
  above.wavelength_ratio = 1.05;
  above.t_end = 8.0;
  const Trajectory grow = evolve(above, range(0.25, 8.0, 0.25));
  bool monotone = true;
  for (std::size_t i = 1; i < grow.snapshots.size(); ++i) {
    monotone = monotone && grow.snapshots[i].max_density() > grow.snapshots[i - 1].max_density();
  }

  CaseConfig below = paper_case(CaseId::case1);
  below.wavelength_ratio = 0.95;
  const double k = 1.0 / 0.95;
  const double period = 2 * kPi / std::sqrt(k * k - 1.0);
  below.t_end = period;
  const Trajectory osc = evolve(below, range(period / 80, period, period / 80));
  double peak = 0.0;
  for (const auto& s : osc.snapshots) peak = std::max(peak, s.max_density());
  const double bound = 1.0 + 1.5 * below.amplitude;
  return {monotone && peak < bound,
          format("1.05 lambda_J: max density %s over t in (0, 8] (%.4f -> %.4f); "
                 "0.95 lambda_J: peak %.4f over one period %.2f (want < %.3f)",
                 monotone ? "increases monotonically" : "NOT monotone",
                 grow.snapshots.front().max_density(), grow.snapshots.back().max_density(), peak,
                 period, bound)};
}

Outcome measured_rates() {
  const CaseConfig c1 = paper_case(CaseId::case1);
  const double alpha = measure_growth_rate(evolve(c1, range(0.25, 3.0, 0.25)));
  const double alpha_lt = growth_rate(1.0 / 1.11);

  const CaseConfig c3 = paper_case(CaseId::case3);
  const double vp = measure_phase_speed(evolve(c3, range(0.5, 3.0, 0.5)));
  const double vp_lt = phase_speed(1.25);

  const CaseConfig s = paper_case(CaseId::soundwave_linear);
  const double cs = measure_phase_speed(evolve(s, range(0.25, 1.5, 0.25)));

  const double ea = std::abs(alpha / alpha_lt - 1), ev = std::abs(vp / vp_lt - 1),
               ec = std::abs(cs - 1);
  return {ea < 0.02 && ev < 0.02 && ec < 0.02,
          format("growth %.4f vs %.4f (%.2f%%); phase speed %.4f vs %.4f (%.2f%%); "
                 "sound speed %.4f vs 1 (%.2f%%); want each < 2%%",
                 alpha, alpha_lt, 100 * ea, vp, vp_lt, 100 * ev, cs, 100 * ec)};
}

Outcome derivative_correctness() {
  // Input derivatives of a random network against central differences.
  NetworkSpec spec;
  spec.input_width = 3;
  spec.hidden = {16, 16, 16};
  spec.output_width = 4;
  spec.omega0 = 2.0;
  spec.input_lower = {0, 0, 0};
  spec.input_upper = {4, 3, 2};
  const NetworkParams p = init_params(spec, 17);
  Eigen::MatrixXd X(3, 40);
  CounterRng rng(5);
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    X(0, j) = rng.uniform(0, 4);
    X(1, j) = rng.uniform(0, 3);
    X(2, j) = rng.uniform(0, 2);
  }
  const Jet jet = input_jet(p, X, {true, {0, 1}});
  double first = 0.0, second = 0.0;
  for (int in = 0; in < 3; ++in) {
    Eigen::MatrixXd Xp = X, Xm = X;
    Xp.row(in).array() += 1e-5;
    Xm.row(in).array() -= 1e-5;
    const Eigen::MatrixXd fd = (forward(p, Xp) - forward(p, Xm)) / 2e-5;
    first = std::max(first, (jet.first(in) - fd).norm() / fd.norm());
  }
  for (int axis : {0, 1}) {
    const double h = 1e-4;
    Eigen::MatrixXd Xp = X, Xm = X;
    Xp.row(axis).array() += h;
    Xm.row(axis).array() -= h;
    const Eigen::MatrixXd fd = (forward(p, Xp) - 2 * forward(p, X) + forward(p, Xm)) / (h * h);
    second = std::max(second, (jet.second(axis) - fd).norm() / fd.norm());
  }

  // Full loss gradient on a 2x8 network with 50 collocation points.
  CaseConfig c = paper_case(CaseId::case1);
  c.pinn.hidden_layers = {8, 8};
  const CollocationSet set = sample_collocation(case_domain(c), 50, 50, 50, 3);
  const GrinnLoss loss(c, set);
  const NetworkParams q = init_params(loss.network_spec(), 9);
  Eigen::VectorXd grad;
  loss.evaluate(q, &grad);
  Eigen::VectorXd fd(grad.size());
  for (Eigen::Index i = 0; i < grad.size(); ++i) {
    NetworkParams w = q;
    w.flat()[i] += 1e-6;
    const double fp = loss.evaluate(w).total;
    w.flat()[i] -= 2e-6;
    fd[i] = (fp - loss.evaluate(w).total) / 2e-6;
  }
  const double g = (grad - fd).norm() / fd.norm();
  return {first < 1e-6 && second < 1e-4 && g < 1e-5,
          format("first %.2e (want < 1e-6), second %.2e (want < 1e-4), loss gradient %.2e "
                 "(want < 1e-5)",
                 first, second, g)};
}

Outcome grinn_case1() {
  const CaseConfig c = paper_case(CaseId::case1);
  const auto start = std::chrono::steady_clock::now();
  const TrainedModel m = train_case(c, {}, progress("case1"));
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const std::vector<double> times{0.5, 1.5, 2.5};
  EvalGrid cut;
  cut.points = 200;
  const auto reports = compare_case(c, {SolverKind::grinn, SolverKind::lt, &m}, times, cut);
  double worst = 0.0;
  std::string detail;
  for (const auto& r : reports) {
    worst = std::max(worst, max_density_eps(r));
    detail += format(" t=%.1f %.3f%%", r.t, max_density_eps(r));
  }
  return {worst < 2.0 && !m.aborted,
          format("density eps vs LT:%s (want < 2%%; %s 1%%); final loss %.2e; %.0f s",
                 detail.c_str(), worst < 1.0 ? "also meets" : "misses", m.final_loss.total,
                 secs)};
}

Outcome grinn_case3() {
  const CaseConfig c = paper_case(CaseId::case3);
  const TrainedModel m = train_case(c, {}, progress("case3"));
  EvalGrid cut;
  cut.points = 400;
  const std::vector<double> times{1, 2, 3, 4, 5};
  const auto reports = compare_case(c, {SolverKind::grinn, SolverKind::lt, &m}, times, cut);
  double worst = 0.0;
  std::vector<double> amps;
  std::string detail;
  for (const auto& r : reports) {
    const auto pts = grid_points(cut, case_domain(c), 400, r.t);
    amps.push_back(amplitude(sample_model(m, pts).rho));
    if (r.t == 1 || r.t == 3 || r.t == 5) {
      worst = std::max(worst, max_density_eps(r));
      detail += format(" t=%.0f %.3f%%", r.t, max_density_eps(r));
    }
  }
  const double drift = amps.back() / amps.front() - 1.0;
  return {worst < 2.0 && drift > -0.01 && !m.aborted,
          format("density eps vs LT:%s (want < 2%%); amplitude change t=1..5 %+.2f%% "
                 "(want no decay beyond -1%%)",
                 detail.c_str(), 100 * drift)};
}

Outcome extrapolation() {
  CaseConfig c = paper_case(CaseId::case1);
  c.t_end = 1.0;
  const TrainedModel m = train_case(c, {}, progress("extrapolate"));
  const std::vector<double> times{1.0, 2.0, 3.0};
  const auto reports = compare_case(c, {SolverKind::grinn, SolverKind::fd, &m}, times, EvalGrid{});
  std::string detail;
  for (const auto& r : reports) detail += format(" t=%.0f %.3f%%", r.t, r.field("rho").mean);
  const double at3 = reports.back().field("rho").mean;
  return {at3 < 5.0 && !m.aborted,
          format("volume-averaged density eps vs FD:%s (want < 5%% at t=3)", detail.c_str())};
}

Outcome scaling() {
  const ScalingOptions o;
  const auto t = fd_time_scaling(o);
  const auto g = grinn_dimension_scaling(o);
  const auto f = fd_dimension_scaling(o);
  const double g_ratio = g.back().seconds / g.front().seconds;
  const double f_ratio = f.back().seconds / f.front().seconds;
  const double dev = linearity_deviation(t);
  std::string series;
  for (const auto& r : t) series += format(" %.3f", r.normalized);
  return {g_ratio < 3.0 && f_ratio > 100.0 && dev < 0.10,
          format("GRINN T(3D)/T(1D) = %.2f (want < 3); FD T(64^3)/T(64) = %.0f (want > 100); "
                 "FD T/T(t=1) linearity deviation %.1f%% (want < 10%%; T/T(t=1) =%s)",
                 g_ratio, f_ratio, 100 * dev, series.c_str())};
}

// Largest |dv/dx| on a uniform periodic sampling.
double max_velocity_gradient(std::span<const double> v, double dx) {
  const std::size_t n = v.size();
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    m = std::max(m, std::abs(v[(i + 1) % n] - v[(i + n - 1) % n]) / (2 * dx));
  }
  return m;
}

Outcome shock() {
  const CaseConfig c = paper_case(CaseId::soundwave_shock);
  const TrainedModel m = train_case(c, {}, progress("shock"));
  const DomainSpec dom = case_domain(c);
  const int n = 2000;
  const double dx = dom.extent[0] / n;
  EvalGrid cut;
  cut.points = n;

  const std::vector<double> times = range(0.0, c.t_end, 0.25);
  std::vector<double> steep;
  for (double t : times) {
    const auto pts = grid_points(cut, dom, n, t);
    steep.push_back(max_velocity_gradient(sample_model(m, pts).v[0], dx));
  }
  bool monotone = true;
  for (std::size_t i = 1; i < steep.size(); ++i) monotone = monotone && steep[i] > steep[i - 1];

  const std::vector<double> check = range(0.5, c.t_end, 0.5);
  const Trajectory tr = evolve(c, check);
  double worst = 0.0;
  for (double t : check) {
    const FieldState* fd = nullptr;
    for (const auto& s : tr.snapshots) {
      if (s.t == t) fd = &s;
    }
    const auto pts = grid_points(cut, dom, n, t);
    const SampledFields a = sample_model(m, pts);
    const SampledFields b = sample_state(*fd, pts);
    // Front: steepest point of the reference velocity.
    std::size_t front = 0;
    double g = -1.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double d = std::abs(b.v[0][(i + 1) % n] - b.v[0][(i + n - 1) % n]);
      if (d > g) {
        g = d;
        front = i;
      }
    }
    const auto eps = grinn::mismatch(a.rho, b.rho, MismatchKind::density);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double sep = std::abs(pts[i].x[0] - pts[front].x[0]);
      if (std::min(sep, dom.extent[0] - sep) <= 0.5) continue;
      worst = std::max(worst, eps[i]);
    }
  }
  std::string series;
  for (std::size_t i = 0; i < steep.size(); ++i) series += format(" %.4f", steep[i]);
  return {monotone && worst < 2.0 && !m.aborted,
          format("max |dv/dx| %s (t=0..%.1f step 0.25:%s); density eps vs FD away from "
                 "the front %.3f%% (want < 2%%)",
                 monotone ? "steepens monotonically" : "NOT monotone", times.back(),
                 series.c_str(), worst)};
}

const std::map<int, std::pair<const char*, std::function<Outcome()>>>& criteria() {
  static const std::map<int, std::pair<const char*, std::function<Outcome()>>> all{
      {1, {"linear theory constants", linear_theory_constants}},
      {2, {"discrete Poisson exactness", poisson_exactness}},
      {3, {"FD vs LT, case 1", fd_case1}},
      {4, {"FD vs LT, case 3", fd_case3}},
      {5, {"Jeans stability boundary", jeans_boundary}},
      {6, {"measured growth and phase rates", measured_rates}},
      {7, {"derivative correctness", derivative_correctness}},
      {8, {"GRINN case 1 vs LT", grinn_case1}},
      {9, {"GRINN case 3 vs LT", grinn_case3}},
      {10, {"GRINN extrapolation vs FD", extrapolation}},
      {11, {"wall-clock scaling properties", scaling}},
      {12, {"GRINN shock steepening", shock}},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);

  CLI::App app{"acceptance criteria"};
  std::vector<int> selected;
  app.add_option("--criterion", selected, "criterion number (repeatable)")
      ->check(CLI::Range(1, 12));
  CLI11_PARSE(app, argc, argv);
  if (selected.empty()) {
    for (const auto& [id, c] : criteria()) selected.push_back(id);
  }

  int failed = 0;
  for (int id : selected) {
    const auto& [name, run] = criteria().at(id);
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const Error& e) {
      o = {false, format("error kind=%s: %s", to_string(e.kind()), e.what())};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %2d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
