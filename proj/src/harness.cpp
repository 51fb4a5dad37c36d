#include "grinn/harness.hpp"

#include <algorithm>
#include <memory>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>

#include "grinn/linear_theory.hpp"
#include "grinn/reduce.hpp"

namespace grinn {

const char* to_string(MismatchKind kind) {
  switch (kind) {
    case MismatchKind::density: return "density";
    case MismatchKind::signed_field: return "signed";
    case MismatchKind::literal: return "literal";
  }
  return "unknown";
}

const char* to_string(ScalingMode mode) {
  return mode == ScalingMode::dimension ? "dimension" : "time";
}

std::vector<double> mismatch(std::span<const double> a, std::span<const double> b,
                             MismatchKind kind) {
  if (a.size() != b.size()) throw Error(ErrorKind::shape, "mismatch: fields differ in size");
  std::vector<double> eps(a.size());
  double bmax = 0.0;
  if (kind == MismatchKind::signed_field) {
    for (double x : b) bmax = std::max(bmax, std::abs(x));
    bmax = std::max(bmax, kMismatchFloor);
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = std::abs(a[i] - b[i]);
    switch (kind) {
      case MismatchKind::density:
        eps[i] = diff == 0.0 ? 0.0 : 200.0 * diff / (a[i] + b[i]);
        break;
      case MismatchKind::signed_field:
        eps[i] = 100.0 * diff / bmax;
        break;
      case MismatchKind::literal:
        eps[i] = 200.0 * diff / std::max(std::abs(a[i] + b[i]), kMismatchFloor);
        break;
    }
  }
  return eps;
}

MeanSpread volume_avg_mismatch(std::span<const double> eps) {
  if (eps.empty()) throw Error(ErrorKind::shape, "volume_avg_mismatch: empty input");
  const double n = static_cast<double>(eps.size());
  const double mean = pairwise_sum(eps) / n;
  std::vector<double> dev(eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i) dev[i] = (eps[i] - mean) * (eps[i] - mean);
  return {mean, std::sqrt(pairwise_sum(dev) / n)};
}

std::string EvalGrid::describe() const {
  char buf[160];
  if (volume) {
    std::snprintf(buf, sizeof buf, "volume n=%d", points);
  } else {
    std::snprintf(buf, sizeof buf, "cut axis=%d at (%g %g %g) n=%d", axis, transverse[0],
                  transverse[1], transverse[2], points);
  }
  return buf;
}

std::vector<SpaceTimePoint> grid_points(const EvalGrid& grid, const DomainSpec& domain,
                                        int default_points, double t) {
  const int d = domain.dimension;
  const int n = grid.points > 0 ? grid.points : default_points;
  if (n < 1) throw Error(ErrorKind::invalid_config, "evaluation grid needs points >= 1");
  if (grid.axis < 0 || grid.axis >= d) {
    throw Error(ErrorKind::invalid_config, "evaluation grid axis outside the dimension");
  }
  std::vector<SpaceTimePoint> pts;
  if (!grid.volume || d == 1) {
    pts.resize(static_cast<std::size_t>(n));
    const double h = domain.extent[grid.axis] / n;
    for (int i = 0; i < n; ++i) {
      SpaceTimePoint& p = pts[static_cast<std::size_t>(i)];
      for (int a = 0; a < d; ++a) p.x[a] = grid.transverse[a];
      p.x[grid.axis] = (i + 0.5) * h;
      p.t = t;
    }
    return pts;
  }
  const int n1 = n;
  const int n2 = d == 3 ? n : 1;
  pts.reserve(static_cast<std::size_t>(n) * n1 * n2);
  for (int k = 0; k < n2; ++k) {
    for (int j = 0; j < n1; ++j) {
      for (int i = 0; i < n; ++i) {
        SpaceTimePoint p;
        p.x[0] = (i + 0.5) * domain.extent[0] / n;
        p.x[1] = (j + 0.5) * domain.extent[1] / n1;
        if (d == 3) p.x[2] = (k + 0.5) * domain.extent[2] / n2;
        p.t = t;
        pts.push_back(p);
      }
    }
  }
  return pts;
}

const FieldMismatch& MismatchReport::field(std::string_view name) const {
  for (const auto& f : fields) {
    if (f.field == name) return f;
  }
  throw Error(ErrorKind::query, "no mismatch field named " + std::string(name));
}

namespace {

FieldMismatch make_field(std::string name, MismatchKind kind, std::span<const double> a,
                         std::span<const double> b) {
  FieldMismatch f;
  f.field = std::move(name);
  f.kind = kind;
  f.eps = mismatch(a, b, kind);
  const MeanSpread ms = volume_avg_mismatch(f.eps);
  f.mean = ms.mean;
  f.stddev = ms.stddev;
  f.max = *std::max_element(f.eps.begin(), f.eps.end());
  return f;
}

constexpr const char* kVelocityNames[3] = {"vx", "vy", "vz"};

}  // namespace

MismatchReport compare_fields(const SampledFields& a, const SampledFields& b,
                              std::vector<SpaceTimePoint> points, std::string solver_a,
                              std::string solver_b, std::string grid) {
  if (a.dimension != b.dimension) throw Error(ErrorKind::shape, "compare: dimension mismatch");
  MismatchReport r;
  r.solver_a = std::move(solver_a);
  r.solver_b = std::move(solver_b);
  r.t = points.empty() ? 0.0 : points.front().t;
  r.grid = std::move(grid);
  r.points = std::move(points);
  r.fields.push_back(make_field("rho", MismatchKind::density, a.rho, b.rho));
  for (int i = 0; i < a.dimension; ++i) {
    r.fields.push_back(make_field(kVelocityNames[i], MismatchKind::signed_field, a.v[i], b.v[i]));
  }
  r.fields.push_back(make_field("phi", MismatchKind::signed_field, a.phi, b.phi));
  for (int i = 0; i < a.dimension; ++i) {
    r.fields.push_back(make_field(std::string(kVelocityNames[i]) + "_literal",
                                  MismatchKind::literal, a.v[i], b.v[i]));
  }
  r.fields.push_back(make_field("phi_literal", MismatchKind::literal, a.phi, b.phi));
  return r;
}

SampledFields sample_mode(const WaveMode& mode, std::span<const SpaceTimePoint> points) {
  SampledFields s;
  s.dimension = mode.dimension;
  const std::size_t n = points.size();
  s.rho.resize(n);
  s.phi.resize(n);
  for (int i = 0; i < mode.dimension; ++i) s.v[i].resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const ModeValues mv = evaluate_mode(mode, points[k].x, points[k].t);
    s.rho[k] = mv.rho;
    s.phi[k] = mv.phi;
    for (int i = 0; i < mode.dimension; ++i) s.v[i][k] = mv.v[i];
  }
  return s;
}

SampledFields sample_state(const FieldState& state, std::span<const SpaceTimePoint> points) {
  SampledFields s;
  s.dimension = state.dimension;
  const std::size_t n = points.size();
  s.rho.resize(n);
  s.phi.resize(n);
  for (int i = 0; i < state.dimension; ++i) s.v[i].resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    s.rho[k] = interpolate(state, state.rho, points[k].x);
    s.phi[k] = interpolate(state, state.phi, points[k].x);
    for (int i = 0; i < state.dimension; ++i) s.v[i][k] = interpolate(state, state.v[i], points[k].x);
  }
  return s;
}

SampledFields sample_model(const TrainedModel& model, std::span<const SpaceTimePoint> points) {
  const Prediction p = predict(model, points);
  SampledFields s;
  s.dimension = p.dimension;
  s.rho.assign(p.rho.data(), p.rho.data() + p.rho.size());
  s.phi.assign(p.phi.data(), p.phi.data() + p.phi.size());
  for (int i = 0; i < p.dimension; ++i) s.v[i].assign(p.v[i].data(), p.v[i].data() + p.v[i].size());
  return s;
}

std::vector<MismatchReport> compare_case(const CaseConfig& config, const CompareInputs& inputs,
                                         std::span<const double> times, const EvalGrid& grid,
                                         const UnitSystem& units) {
  config.validate();
  const bool uses_fd = inputs.a == SolverKind::fd || inputs.b == SolverKind::fd;
  const bool uses_grinn = inputs.a == SolverKind::grinn || inputs.b == SolverKind::grinn;
  if (uses_grinn && !inputs.model) {
    throw Error(ErrorKind::invalid_config, "compare: grinn requires a trained model");
  }
  const DomainSpec domain = case_domain(config, units);
  const WaveMode mode = case_mode(config, units);
  int default_points = config.fd.grid_points;
  if (inputs.trajectory && !inputs.trajectory->snapshots.empty()) {
    default_points = inputs.trajectory->snapshots.front().shape[grid.axis];
  }

  std::vector<std::size_t> order(times.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return times[i] < times[j]; });

  const FdSettings settings{config.fd.courant, config.gravity, units};
  std::optional<FieldState> fd_state;
  if (uses_fd && !inputs.trajectory) fd_state = init_grid(config, units);

  auto sample = [&](SolverKind kind, const std::vector<SpaceTimePoint>& pts,
                    double t) -> SampledFields {
    switch (kind) {
      case SolverKind::lt: return sample_mode(mode, pts);
      case SolverKind::grinn: return sample_model(*inputs.model, pts);
      case SolverKind::fd: {
        if (inputs.trajectory) {
          for (const auto& s : inputs.trajectory->snapshots) {
            if (std::abs(s.t - t) <= 1e-9 * std::max(1.0, std::abs(t))) {
              return sample_state(s, pts);
            }
          }
          throw Error(ErrorKind::query, "compare: trajectory has no snapshot at the requested time");
        }
        if (t < fd_state->t - 1e-12) {
          throw Error(ErrorKind::query, "compare: fd times must not precede the start time");
        }
        if (t > fd_state->t) {
          Trajectory tr = evolve_state(std::move(*fd_state), settings, {t});
          fd_state = std::move(tr.snapshots.back());
        }
        return sample_state(*fd_state, pts);
      }
    }
    throw Error(ErrorKind::invalid_config, "compare: unknown solver");
  };

  std::vector<MismatchReport> sorted;
  std::vector<std::size_t> done;
  try {
    for (std::size_t idx : order) {
      const double t = times[idx];
      std::vector<SpaceTimePoint> pts = grid_points(grid, domain, default_points, t);
      SampledFields fa = sample(inputs.a, pts, t);
      SampledFields fb = sample(inputs.b, pts, t);
      sorted.push_back(compare_fields(fa, fb, std::move(pts), std::string(to_string(inputs.a)),
                                      std::string(to_string(inputs.b)), grid.describe()));
      sorted.back().t = t;
      done.push_back(idx);
    }
  } catch (const CompareFailure&) {
    throw;
  } catch (const Error& e) {
    throw CompareFailure(e, std::move(sorted));
  }
  std::vector<MismatchReport> out(times.size());
  for (std::size_t k = 0; k < done.size(); ++k) out[done[k]] = std::move(sorted[k]);
  return out;
}

double measure_growth_rate(std::span<const FieldState> snapshots, double rho0) {
  std::vector<double> ts, ys;
  for (const auto& s : snapshots) {
    const double amp = s.max_density() - rho0;
    if (amp > 0.0 && amp < 0.3 * rho0) {
      ts.push_back(s.t);
      ys.push_back(std::log(amp));
    }
  }
  if (ts.size() < 5) {
    throw Error(ErrorKind::fit_failure, "growth-rate fit needs at least 5 snapshots in the linear window");
  }
  const double n = static_cast<double>(ts.size());
  const double tm = pairwise_sum(ts) / n;
  const double ym = pairwise_sum(ys) / n;
  std::vector<double> sxy(ts.size()), sxx(ts.size()), syy(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    sxy[i] = (ts[i] - tm) * (ys[i] - ym);
    sxx[i] = (ts[i] - tm) * (ts[i] - tm);
    syy[i] = (ys[i] - ym) * (ys[i] - ym);
  }
  const double Sxx = pairwise_sum(sxx);
  const double Sxy = pairwise_sum(sxy);
  const double Syy = pairwise_sum(syy);
  if (Sxx <= 0.0) throw Error(ErrorKind::fit_failure, "growth-rate fit: snapshots share one time");
  const double slope = Sxy / Sxx;
  if (!(slope > 0.0)) throw Error(ErrorKind::fit_failure, "growth-rate fit: perturbation does not grow");
  const double r2 = Syy > 0.0 ? Sxy * Sxy / (Sxx * Syy) : 1.0;
  if (r2 < 0.9) throw Error(ErrorKind::fit_failure, "growth-rate fit: data is not exponential");
  return slope;
}

double measure_growth_rate(const Trajectory& trajectory, double rho0) {
  return measure_growth_rate(std::span<const FieldState>(trajectory.snapshots), rho0);
}

namespace {

std::vector<double> axis_line(const FieldState& s) {
  const int n = s.shape[0];
  std::vector<double> line(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) line[static_cast<std::size_t>(i)] = s.rho[s.index(i)];
  const double mean = pairwise_sum(line) / n;
  for (double& x : line) x -= mean;
  return line;
}

// Shift (in cells, fractional) that best maps line a onto line b.
double correlation_shift(const std::vector<double>& a, const std::vector<double>& b) {
  const int n = static_cast<int>(a.size());
  std::vector<double> c(static_cast<std::size_t>(n));
  std::vector<double> terms(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    for (int i = 0; i < n; ++i) terms[i] = a[i] * b[(i + s) % n];
    c[s] = pairwise_sum(terms);
  }
  const double peak = *std::max_element(c.begin(), c.end());
  if (!(peak > 0.0)) throw Error(ErrorKind::fit_failure, "phase-speed fit: no correlated signal");
  auto signed_shift = [n](int s) { return s > n / 2 ? s - n : s; };
  int best = -1;
  for (int s = 0; s < n; ++s) {
    const double l = c[(s + n - 1) % n], r = c[(s + 1) % n];
    if (c[s] < 0.5 * peak || c[s] < l || c[s] < r) continue;
    if (best < 0 || std::abs(signed_shift(s)) < std::abs(signed_shift(best))) best = s;
  }
  for (int s = 0; s < n; ++s) {
    const double l = c[(s + n - 1) % n], r = c[(s + 1) % n];
    if (s == best || c[s] < 0.5 * peak || c[s] < l || c[s] < r) continue;
    if (std::abs(std::abs(signed_shift(s)) - std::abs(signed_shift(best))) <= 1 &&
        signed_shift(s) * signed_shift(best) < 0) {
      throw Error(ErrorKind::fit_failure, "phase-speed fit: ambiguous correlation peak");
    }
  }
  const double l = c[(best + n - 1) % n], m = c[best], r = c[(best + 1) % n];
  const double denom = l - 2.0 * m + r;
  const double frac = denom < 0.0 ? 0.5 * (l - r) / denom : 0.0;
  return signed_shift(best) + frac;
}

}  // namespace

double measure_phase_speed(std::span<const FieldState> snapshots) {
  if (snapshots.size() < 2) throw Error(ErrorKind::fit_failure, "phase-speed fit needs two snapshots");
  std::vector<double> speeds;
  for (std::size_t k = 1; k < snapshots.size(); ++k) {
    const double dt = snapshots[k].t - snapshots[k - 1].t;
    if (!(dt > 0.0)) throw Error(ErrorKind::fit_failure, "phase-speed fit: snapshots must advance in time");
    const double shift = correlation_shift(axis_line(snapshots[k - 1]), axis_line(snapshots[k]));
    speeds.push_back(std::abs(shift) * snapshots[k].spacing[0] / dt);
  }
  return pairwise_sum(speeds) / static_cast<double>(speeds.size());
}

double measure_phase_speed(const Trajectory& trajectory) {
  return measure_phase_speed(std::span<const FieldState>(trajectory.snapshots));
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void finish(ScalingRecord& r) {
  r.repetitions = static_cast<int>(r.samples.size());
  r.seconds = *std::min_element(r.samples.begin(), r.samples.end());
  const MeanSpread ms = volume_avg_mismatch(r.samples);
  r.mean = ms.mean;
  r.stddev = r.repetitions > 1 ? ms.stddev : 0.0;
}

void normalize(std::vector<ScalingRecord>& rs) {
  for (auto& r : rs) r.normalized = r.seconds / rs.front().seconds;
}

CaseConfig scaling_case(int d, int points, const ScalingOptions& o) {
  CaseConfig c = paper_case(CaseId::case1);
  c.amplitude = o.amplitude;
  c.dimension = d;
  c.direction = {1.0, 0.0, 0.0};
  c.fd.grid_points = points;
  c.fd.courant = o.courant;
  return c;
}

}  // namespace

std::vector<ScalingRecord> fd_dimension_scaling(const ScalingOptions& o) {
  std::vector<ScalingRecord> out;
  for (int d = 1; d <= 3; ++d) {
    const CaseConfig c = scaling_case(d, o.fd_points, o);
    const FieldState initial = init_grid(c);
    const FdSettings settings{o.courant, true, {}};
    ScalingRecord r;
    r.solver = "fd";
    r.mode = ScalingMode::dimension;
    r.dimension = d;
    r.t = o.fd_time;
    for (int rep = 0; rep < o.repetitions; ++rep) {
      const auto t0 = Clock::now();
      const Trajectory tr = evolve_state(initial, settings, {o.fd_time});
      r.samples.push_back(seconds_since(t0));
    }
    finish(r);
    out.push_back(std::move(r));
  }
  normalize(out);
  return out;
}

std::vector<ScalingRecord> fd_time_scaling(const ScalingOptions& o) {
  const CaseConfig c = scaling_case(1, o.fd_time_points, o);
  const FieldState initial = init_grid(c);
  const FdSettings settings{o.courant, true, {}};
  std::vector<ScalingRecord> out;
  for (double t : o.times) {
    ScalingRecord r;
    r.solver = "fd";
    r.mode = ScalingMode::time;
    r.dimension = 1;
    r.t = t;
    out.push_back(std::move(r));
  }
  // Untimed warm-up, then repetitions interleaved over t, alternating the
  // order, so slow spells and drift of the machine hit the whole series.
  evolve_state(initial, settings, {o.times.front()});
  for (int rep = 0; rep < o.repetitions; ++rep) {
    for (std::size_t k = 0; k < out.size(); ++k) {
      ScalingRecord& r = out[rep % 2 == 0 ? k : out.size() - 1 - k];
      const auto t0 = Clock::now();
      const Trajectory tr = evolve_state(initial, settings, {r.t});
      r.samples.push_back(seconds_since(t0));
    }
  }
  for (auto& r : out) finish(r);
  normalize(out);
  return out;
}

std::vector<ScalingRecord> grinn_dimension_scaling(const ScalingOptions& o) {
  struct Setup {
    std::unique_ptr<GrinnLoss> loss;
    NetworkParams params;
    AdamState adam;
    Eigen::VectorXd grad;
  };
  std::vector<Setup> setups;
  std::vector<ScalingRecord> out;
  for (int d = 1; d <= 3; ++d) {
    CaseConfig c = scaling_case(d, 64, o);
    c.pinn.hidden_layers = o.hidden;
    const CollocationSet set =
        sample_collocation(case_domain(c), o.n_interior, o.n_boundary, o.n_initial, 7);
    Setup su;
    su.loss = std::make_unique<GrinnLoss>(c, set);
    su.params = init_params(su.loss->network_spec(), 11);
    su.loss->evaluate(su.params, &su.grad);
    setups.push_back(std::move(su));
    ScalingRecord r;
    r.solver = "grinn";
    r.mode = ScalingMode::dimension;
    r.dimension = d;
    out.push_back(std::move(r));
  }
  // Repetitions interleaved over d, as in the FD time study.
  for (int rep = 0; rep < o.repetitions; ++rep) {
    for (std::size_t k = 0; k < out.size(); ++k) {
      const std::size_t i = rep % 2 == 0 ? k : out.size() - 1 - k;
      Setup& su = setups[i];
      const auto t0 = Clock::now();
      for (int it = 0; it < o.iterations; ++it) {
        su.loss->evaluate(su.params, &su.grad);
        adam_step(su.params.flat(), su.grad, su.adam);
      }
      out[i].samples.push_back(seconds_since(t0) / o.iterations);
    }
  }
  for (auto& r : out) finish(r);
  normalize(out);
  return out;
}

double linearity_deviation(std::span<const ScalingRecord> rs) {
  if (rs.size() < 2) return 0.0;
  const double n = static_cast<double>(rs.size());
  double tm = 0.0, ym = 0.0;
  for (const auto& r : rs) {
    tm += r.t;
    ym += r.normalized;
  }
  tm /= n;
  ym /= n;
  double sxy = 0.0, sxx = 0.0;
  for (const auto& r : rs) {
    sxy += (r.t - tm) * (r.normalized - ym);
    sxx += (r.t - tm) * (r.t - tm);
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  double worst = 0.0;
  for (const auto& r : rs) {
    const double fit = ym + slope * (r.t - tm);
    worst = std::max(worst, std::abs(r.normalized - fit) / std::abs(fit));
  }
  return worst;
}

void write_mismatch_summary(std::ostream& out, std::span<const MismatchReport> reports) {
  out << "# grinn mismatch, eps in percent\n";
  out << "solver_a,solver_b,t,field,kind,mean,stddev,max,points,grid\n";
  char buf[256];
  for (const auto& r : reports) {
    for (const auto& f : r.fields) {
      std::snprintf(buf, sizeof buf, "%s,%s,%.17g,%s,%s,%.17g,%.17g,%.17g,%zu,", r.solver_a.c_str(),
                    r.solver_b.c_str(), r.t, f.field.c_str(), to_string(f.kind), f.mean, f.stddev,
                    f.max, f.eps.size());
      out << buf << r.grid << '\n';
    }
  }
}

void write_mismatch_points(std::ostream& out, const MismatchReport& report, int dimension) {
  static constexpr const char* axes[3] = {"x", "y", "z"};
  out << "# grinn pointwise mismatch " << report.solver_a << " vs " << report.solver_b
      << " at t=" << report.t << ", eps in percent\n";
  for (int i = 0; i < dimension; ++i) out << axes[i] << ',';
  out << 't';
  for (const auto& f : report.fields) out << ",eps_" << f.field;
  out << '\n';
  char buf[32];
  for (std::size_t k = 0; k < report.points.size(); ++k) {
    for (int i = 0; i < dimension; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g,", report.points[k].x[i]);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g", report.points[k].t);
    out << buf;
    for (const auto& f : report.fields) {
      std::snprintf(buf, sizeof buf, ",%.17g", f.eps[k]);
      out << buf;
    }
    out << '\n';
  }
}

void write_scaling(std::ostream& out, std::span<const ScalingRecord> records) {
  out << "# grinn scaling, seconds\n";
  out << "solver,mode,dimension,t,repetitions,seconds,mean,stddev,normalized\n";
  char buf[256];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%s,%s,%d,%.17g,%d,%.17g,%.17g,%.17g,%.17g\n",
                  r.solver.c_str(), to_string(r.mode), r.dimension, r.t, r.repetitions,
                  r.seconds, r.mean, r.stddev, r.normalized);
    out << buf;
  }
}

}  // namespace grinn
