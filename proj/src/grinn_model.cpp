#include "grinn/grinn_model.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "grinn/error.hpp"
#include "grinn/random.hpp"
#include "grinn/reduce.hpp"

namespace grinn {

PhysicsOptions case_physics(const CaseConfig& config, const UnitSystem& units) {
  return PhysicsOptions{units, config.gravity, config.pinn.mean_free_poisson};
}

const char* to_string(TrainingPhase phase) {
  switch (phase) {
    case TrainingPhase::none: return "none";
    case TrainingPhase::adam: return "adam";
    case TrainingPhase::lbfgs: return "lbfgs";
  }
  return "unknown";
}

Eigen::MatrixXd to_inputs(std::span<const SpaceTimePoint> points, int dimension) {
  Eigen::MatrixXd X(dimension + 1, static_cast<Eigen::Index>(points.size()));
  for (std::size_t n = 0; n < points.size(); ++n) {
    for (int i = 0; i < dimension; ++i) X(i, n) = points[n].x[i];
    X(dimension, n) = points[n].t;
  }
  return X;
}

namespace {

// Raw column-major view of a jet stack for per-point access.
struct JetView {
  const double* data;
  Eigen::Index rows;
  Eigen::Index batch;
  int first_count;

  double value(int out, Eigen::Index n) const { return data[out + n * rows]; }
  double first(int in, int out, Eigen::Index n) const {
    return data[out + ((1 + in) * batch + n) * rows];
  }
  double second(int slot, int out, Eigen::Index n) const {
    return data[out + ((1 + first_count + slot) * batch + n) * rows];
  }
};

struct JetAccum {
  double* data;
  Eigen::Index rows;
  Eigen::Index batch;
  int first_count;

  double& value(int out, Eigen::Index n) { return data[out + n * rows]; }
  double& first(int in, int out, Eigen::Index n) {
    return data[out + ((1 + in) * batch + n) * rows];
  }
  double& second(int slot, int out, Eigen::Index n) {
    return data[out + ((1 + first_count + slot) * batch + n) * rows];
  }
};

JetView view(const Jet& j) {
  return {j.stack.data(), j.stack.rows(), j.batch(), j.first_count()};
}

JetAccum accum(Jet& j) { return {j.stack.data(), j.stack.rows(), j.batch(), j.first_count()}; }

// Residuals of continuity, momentum and Poisson at every point of `jet`.
// When `adj` is given, adds coef * R * dR/dJet for each residual R, i.e. the
// adjoint of sum(coef/2 * R^2).
void pde_kernel(const Jet& jet, int d, const PhysicsOptions& ph, ResidualBundle& out, Jet* adj,
                double coef) {
  const Eigen::Index B = jet.batch();
  if (jet.first_count() != d + 1) {
    throw Error(ErrorKind::evaluation, "PDE residuals need first derivatives of every input");
  }
  std::array<int, 3> slot{-1, -1, -1};
  if (ph.gravity) {
    for (int i = 0; i < d; ++i) {
      slot[i] = jet.second_slot(i);
      if (slot[i] < 0) {
        throw Error(ErrorKind::evaluation, "Poisson residual needs second spatial derivatives");
      }
    }
  }
  out.dimension = d;
  out.continuity.resize(B);
  out.momentum.assign(static_cast<std::size_t>(d), Eigen::VectorXd(B));
  out.poisson.resize(ph.gravity ? B : 0);

  const JetView J = view(jet);
  JetAccum A{};
  if (adj) A = accum(*adj);
  const double cs2 = ph.units.sound_speed * ph.units.sound_speed;
  const double G4 = ph.units.four_pi_G;
  const double rho_ref = ph.mean_free_poisson ? ph.units.background_density : 0.0;
  const int T = d;        // time input index
  const int PHI = d + 1;  // potential output index

  for (Eigen::Index n = 0; n < B; ++n) {
    const double rho = J.value(0, n);
    double v[3] = {0, 0, 0};
    for (int i = 0; i < d; ++i) v[i] = J.value(1 + i, n);

    double r_rho = J.first(T, 0, n);
    for (int i = 0; i < d; ++i) {
      r_rho += J.first(i, 0, n) * v[i] + rho * J.first(i, 1 + i, n);
    }
    out.continuity[n] = r_rho;
    if (adj) {
      const double a = coef * r_rho;
      A.first(T, 0, n) += a;
      for (int i = 0; i < d; ++i) {
        A.first(i, 0, n) += a * v[i];
        A.value(1 + i, n) += a * J.first(i, 0, n);
        A.value(0, n) += a * J.first(i, 1 + i, n);
        A.first(i, 1 + i, n) += a * rho;
      }
    }

    for (int i = 0; i < d; ++i) {
      double accel = J.first(T, 1 + i, n);
      for (int j = 0; j < d; ++j) accel += v[j] * J.first(j, 1 + i, n);
      const double dphi = ph.gravity ? J.first(i, PHI, n) : 0.0;
      // -rho g_i with g = -grad(phi)
      const double r_v = rho * accel + cs2 * J.first(i, 0, n) + rho * dphi;
      out.momentum[i][n] = r_v;
      if (adj) {
        const double a = coef * r_v;
        A.value(0, n) += a * (accel + dphi);
        A.first(T, 1 + i, n) += a * rho;
        for (int j = 0; j < d; ++j) {
          A.value(1 + j, n) += a * rho * J.first(j, 1 + i, n);
          A.first(j, 1 + i, n) += a * rho * v[j];
        }
        A.first(i, 0, n) += a * cs2;
        if (ph.gravity) A.first(i, PHI, n) += a * rho;
      }
    }

    if (ph.gravity) {
      double lap = 0.0;
      for (int i = 0; i < d; ++i) lap += J.second(slot[i], PHI, n);
      const double r_phi = lap - G4 * (rho - rho_ref);
      out.poisson[n] = r_phi;
      if (adj) {
        const double a = coef * r_phi;
        for (int i = 0; i < d; ++i) A.second(slot[i], PHI, n) += a;
        A.value(0, n) -= G4 * a;
      }
    }
  }
}

// Squared periodicity mismatches per pair, summed over fields. Adjoint
// coefficient as in pde_kernel.
void boundary_kernel(const Jet& p, const Jet& q, std::span<const int> axes, int d,
                     std::vector<double>& per_pair, Jet* adj_p, Jet* adj_q, double coef) {
  const Eigen::Index B = p.batch();
  const JetView P = view(p);
  const JetView Q = view(q);
  JetAccum AP{}, AQ{};
  if (adj_p) {
    AP = accum(*adj_p);
    AQ = accum(*adj_q);
  }
  const int PHI = d + 1;
  for (Eigen::Index n = 0; n < B; ++n) {
    double s = 0.0;
    for (int o = 0; o < d + 2; ++o) {
      const double diff = P.value(o, n) - Q.value(o, n);
      s += diff * diff;
      if (adj_p) {
        AP.value(o, n) += coef * diff;
        AQ.value(o, n) -= coef * diff;
      }
    }
    const int axis = axes[static_cast<std::size_t>(n)];
    const double ddiff = P.first(axis, PHI, n) - Q.first(axis, PHI, n);
    s += ddiff * ddiff;
    if (adj_p) {
      AP.first(axis, PHI, n) += coef * ddiff;
      AQ.first(axis, PHI, n) -= coef * ddiff;
    }
    per_pair.push_back(s);
  }
}

void initial_kernel(const Jet& jet, const Eigen::MatrixXd& targets, Eigen::Index offset,
                    std::vector<double>& per_point, Jet* adj, double coef) {
  const Eigen::Index B = jet.batch();
  const JetView J = view(jet);
  JetAccum A{};
  if (adj) A = accum(*adj);
  for (Eigen::Index n = 0; n < B; ++n) {
    double s = 0.0;
    for (int o = 0; o < J.rows; ++o) {
      const double diff = J.value(o, n) - targets(o, offset + n);
      s += diff * diff;
      if (adj) A.value(o, n) += coef * diff;
    }
    per_point.push_back(s);
  }
}

std::vector<int> spatial_axes(int d) {
  std::vector<int> axes(static_cast<std::size_t>(d));
  std::iota(axes.begin(), axes.end(), 0);
  return axes;
}

}  // namespace

ResidualBundle compute_residuals(const Jet& jet, int dimension, const PhysicsOptions& physics) {
  if (!jet.stack.allFinite()) throw Error(ErrorKind::evaluation, "non-finite jet entries");
  ResidualBundle out;
  pde_kernel(jet, dimension, physics, out, nullptr, 0.0);
  return out;
}

ResidualBundle pde_residuals(const NetworkParams& params, const Eigen::MatrixXd& X,
                             const PhysicsOptions& physics) {
  const int d = params.spec().input_width - 1;
  JetRequest req{true, physics.gravity ? spatial_axes(d) : std::vector<int>{}};
  return compute_residuals(input_jet(params, X, req), d, physics);
}

double mse_pde(const NetworkParams& params, const Eigen::MatrixXd& X,
               const PhysicsOptions& physics) {
  if (X.cols() == 0) throw Error(ErrorKind::evaluation, "mse_pde needs at least one point");
  const ResidualBundle r = pde_residuals(params, X, physics);
  const double n = static_cast<double>(X.cols());
  auto mean_sq = [&](const Eigen::VectorXd& v) {
    std::vector<double> sq(v.data(), v.data() + v.size());
    for (double& s : sq) s *= s;
    return pairwise_sum(sq) / n;
  };
  double total = mean_sq(r.continuity);
  for (const auto& m : r.momentum) total += mean_sq(m);
  if (r.poisson.size() > 0) total += mean_sq(r.poisson);
  return total;
}

double mse_boundary(const Jet& p, const Jet& q, std::span<const int> axes, int dimension) {
  std::vector<double> per_pair;
  boundary_kernel(p, q, axes, dimension, per_pair, nullptr, nullptr, 0.0);
  return pairwise_sum(per_pair) / static_cast<double>(per_pair.size());
}

double mse_boundary(const NetworkParams& params, std::span<const BoundaryPair> pairs,
                    int dimension) {
  std::vector<SpaceTimePoint> ps, qs;
  std::vector<int> axes;
  for (const auto& bp : pairs) {
    ps.push_back(bp.p);
    qs.push_back(bp.q);
    axes.push_back(bp.axis);
  }
  const JetRequest req{true, {}};
  return mse_boundary(input_jet(params, to_inputs(ps, dimension), req),
                      input_jet(params, to_inputs(qs, dimension), req), axes, dimension);
}

Eigen::MatrixXd initial_targets(std::span<const SpaceTimePoint> points, const WaveMode& mode) {
  const int d = mode.dimension;
  Eigen::MatrixXd T(d + 2, static_cast<Eigen::Index>(points.size()));
  for (std::size_t n = 0; n < points.size(); ++n) {
    const ModeValues mv = initial_condition(mode, points[n].x);
    T(0, n) = mv.rho;
    for (int i = 0; i < d; ++i) T(1 + i, n) = mv.v[i];
    T(d + 1, n) = mv.phi;
  }
  return T;
}

double mse_initial(const NetworkParams& params, std::span<const SpaceTimePoint> points,
                   const WaveMode& mode) {
  const int d = mode.dimension;
  const Eigen::MatrixXd targets = initial_targets(points, mode);
  const Jet jet = input_jet(params, to_inputs(points, d), JetRequest{false, {}});
  std::vector<double> per_point;
  initial_kernel(jet, targets, 0, per_point, nullptr, 0.0);
  return pairwise_sum(per_point) / static_cast<double>(per_point.size());
}

NetworkSpec case_network_spec(const CaseConfig& config, const UnitSystem& units) {
  const DomainSpec domain = case_domain(config, units);
  const int d = config.dimension;
  NetworkSpec spec;
  spec.input_width = d + 1;
  spec.hidden = config.pinn.hidden_layers;
  spec.output_width = d + 2;
  spec.omega0 = config.pinn.omega0;
  spec.input_lower.assign(static_cast<std::size_t>(d + 1), 0.0);
  spec.input_upper.assign(static_cast<std::size_t>(d + 1), 0.0);
  for (int i = 0; i < d; ++i) spec.input_upper[i] = domain.extent[i];
  spec.input_lower[d] = domain.t_start;
  spec.input_upper[d] = config.pinn.time_span > 0.0 ? domain.t_start + config.pinn.time_span
                                                     : domain.t_end;
  return spec;
}

GrinnLoss::GrinnLoss(const CaseConfig& config, const CollocationSet& collocation,
                     const UnitSystem& units)
    : config_(config),
      physics_(case_physics(config, units)),
      domain_(case_domain(config, units)),
      mode_(case_mode(config, units)),
      spec_(case_network_spec(config, units)),
      dimension_(config.dimension) {
  if (collocation.dimension != dimension_) {
    throw Error(ErrorKind::shape, "collocation dimension does not match the case");
  }
  if (collocation.interior.empty() || collocation.boundary.empty() ||
      collocation.initial.empty()) {
    throw Error(ErrorKind::evaluation, "collocation sets must be nonempty");
  }
  interior_ = to_inputs(collocation.interior, dimension_);
  std::vector<SpaceTimePoint> ps, qs;
  for (const auto& bp : collocation.boundary) {
    ps.push_back(bp.p);
    qs.push_back(bp.q);
    pair_axis_.push_back(bp.axis);
  }
  pair_p_ = to_inputs(ps, dimension_);
  pair_q_ = to_inputs(qs, dimension_);
  initial_ = to_inputs(collocation.initial, dimension_);
  initial_targets_ = initial_targets(collocation.initial, mode_);
}

LossReport GrinnLoss::evaluate(const NetworkParams& params, Eigen::VectorXd* grad) const {
  const int d = dimension_;
  if (grad) grad->setZero(static_cast<Eigen::Index>(params.size()));
  const PinnParams& pp = config_.pinn;

  // PDE terms.
  const Eigen::Index nr = interior_.cols();
  std::vector<double> sq_cont, sq_poi;
  std::vector<std::vector<double>> sq_mom(static_cast<std::size_t>(d));
  sq_cont.reserve(nr);
  const JetRequest pde_req{true, physics_.gravity ? spatial_axes(d) : std::vector<int>{}};
  const double pde_coef = 2.0 * pp.weight_pde / static_cast<double>(nr);
  for (Eigen::Index start = 0; start < nr; start += kChunk) {
    const Eigen::Index len = std::min<Eigen::Index>(kChunk, nr - start);
    const JetTape tape(params, interior_.middleCols(start, len), pde_req);
    Jet adj;
    if (grad) adj = tape.make_adjoint();
    ResidualBundle r;
    pde_kernel(tape.jet(), d, physics_, r, grad ? &adj : nullptr, pde_coef);
    for (Eigen::Index n = 0; n < len; ++n) {
      sq_cont.push_back(r.continuity[n] * r.continuity[n]);
      for (int i = 0; i < d; ++i) sq_mom[i].push_back(r.momentum[i][n] * r.momentum[i][n]);
      if (physics_.gravity) sq_poi.push_back(r.poisson[n] * r.poisson[n]);
    }
    if (grad) tape.backward(adj, *grad);
  }
  LossReport rep;
  rep.pde = pairwise_sum(sq_cont) / static_cast<double>(nr);
  for (int i = 0; i < d; ++i) rep.pde += pairwise_sum(sq_mom[i]) / static_cast<double>(nr);
  if (physics_.gravity) rep.pde += pairwise_sum(sq_poi) / static_cast<double>(nr);

  // Periodic boundary pairs.
  const Eigen::Index nb = pair_p_.cols();
  std::vector<double> sq_b;
  sq_b.reserve(nb);
  const double b_coef = 2.0 * pp.weight_boundary / static_cast<double>(nb);
  for (Eigen::Index start = 0; start < nb; start += kChunk) {
    const Eigen::Index len = std::min<Eigen::Index>(kChunk, nb - start);
    const JetTape tp(params, pair_p_.middleCols(start, len), JetRequest{true, {}});
    const JetTape tq(params, pair_q_.middleCols(start, len), JetRequest{true, {}});
    const std::span<const int> axes(pair_axis_.data() + start, static_cast<std::size_t>(len));
    if (grad) {
      Jet ap = tp.make_adjoint();
      Jet aq = tq.make_adjoint();
      boundary_kernel(tp.jet(), tq.jet(), axes, d, sq_b, &ap, &aq, b_coef);
      tp.backward(ap, *grad);
      tq.backward(aq, *grad);
    } else {
      boundary_kernel(tp.jet(), tq.jet(), axes, d, sq_b, nullptr, nullptr, 0.0);
    }
  }
  rep.boundary = pairwise_sum(sq_b) / static_cast<double>(nb);

  // Initial slice.
  const Eigen::Index n0 = initial_.cols();
  std::vector<double> sq_0;
  sq_0.reserve(n0);
  const double i_coef = 2.0 * pp.weight_initial / static_cast<double>(n0);
  for (Eigen::Index start = 0; start < n0; start += kChunk) {
    const Eigen::Index len = std::min<Eigen::Index>(kChunk, n0 - start);
    const JetTape tape(params, initial_.middleCols(start, len), JetRequest{false, {}});
    Jet adj;
    if (grad) adj = tape.make_adjoint();
    initial_kernel(tape.jet(), initial_targets_, start, sq_0, grad ? &adj : nullptr, i_coef);
    if (grad) tape.backward(adj, *grad);
  }
  rep.initial = pairwise_sum(sq_0) / static_cast<double>(n0);

  rep.total = pp.weight_pde * rep.pde + pp.weight_boundary * rep.boundary +
              pp.weight_initial * rep.initial;
  return rep;
}

LossReport total_loss(const NetworkParams& params, const CollocationSet& collocation,
                      const CaseConfig& config, const UnitSystem& units) {
  CaseConfig unweighted = config;
  unweighted.pinn.weight_pde = unweighted.pinn.weight_boundary = unweighted.pinn.weight_initial =
      1.0;
  return GrinnLoss(unweighted, collocation, units).evaluate(params);
}

TrainedModel train(const CaseConfig& config, const CollocationSet& collocation,
                   std::uint64_t seed, const UnitSystem& units, const TrainOptions& options) {
  const GrinnLoss loss(config, collocation, units);
  TrainedModel model;
  model.config = config;
  model.units = units;
  model.domain = loss.domain();
  model.params = init_params(loss.network_spec(), seed);

  auto record = [&](LossReport rep, int epoch, TrainingPhase phase) {
    rep.epoch = epoch;
    rep.phase = phase;
    model.history.push_back(rep);
    if (options.on_progress) options.on_progress(rep);
  };

  const PinnParams& pp = config.pinn;
  AdamState adam;
  const AdamOptions adam_opts{pp.learning_rate, 0.9, 0.999, 1e-8};
  Eigen::VectorXd grad;
  Eigen::VectorXd previous = model.params.flat();
  for (int epoch = 1; epoch <= pp.adam_epochs; ++epoch) {
    const LossReport rep = loss.evaluate(model.params, &grad);
    if (!std::isfinite(rep.total) || !grad.allFinite()) {
      model.aborted = true;
      model.params.flat() = previous;
      model.final_loss = loss.evaluate(model.params);
      return model;
    }
    record(rep, epoch, TrainingPhase::adam);
    previous = model.params.flat();
    adam_step(model.params.flat(), grad, adam, adam_opts);
  }

  if (pp.lbfgs_iterations > 0) {
    NetworkParams work = model.params;
    LossReport last;
    const Objective objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
      work.flat() = x;
      last = loss.evaluate(work, &g);
      if (!g.allFinite()) return std::numeric_limits<double>::infinity();
      return last.total;
    };
    LbfgsOptions lopts;
    lopts.memory = pp.lbfgs_memory;
    lopts.max_iterations = pp.lbfgs_iterations;
    lopts.gtol = 1e-12;
    lopts.ftol = 0.0;
    const auto on_iter = [&](int it, double) { record(last, it, TrainingPhase::lbfgs); };
    try {
      LbfgsResult res = lbfgs_minimize(objective, model.params.flat(), lopts, on_iter);
      model.params.flat() = res.x;
      model.lbfgs_status = res.status;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::training_failure) throw;
      model.aborted = true;
    }
  }
  model.final_loss = loss.evaluate(model.params);
  return model;
}

TrainedModel train_case(const CaseConfig& config, const UnitSystem& units,
                        const TrainOptions& options) {
  const DomainSpec domain = case_domain(config, units);
  const CollocationSet set =
      sample_collocation(domain, config.pinn.n_interior, config.pinn.n_boundary,
                         config.pinn.n_initial, derive_seed(config.pinn.seed, "sampling"));
  return train(config, set, derive_seed(config.pinn.seed, "init"), units, options);
}

Prediction predict(const TrainedModel& model, std::span<const SpaceTimePoint> points) {
  const int d = model.config.dimension;
  for (const auto& p : points) {
    for (int i = 0; i < d; ++i) {
      const double tol = 1e-12 * model.domain.extent[i];
      if (!(p.x[i] >= -tol && p.x[i] <= model.domain.extent[i] + tol)) {
        throw Error(ErrorKind::query, "query point lies outside the spatial domain");
      }
    }
  }
  Prediction out;
  out.dimension = d;
  const Eigen::Index n = static_cast<Eigen::Index>(points.size());
  out.rho.resize(n);
  out.phi.resize(n);
  out.v.assign(static_cast<std::size_t>(d), Eigen::VectorXd(n));
  out.g.assign(static_cast<std::size_t>(d), Eigen::VectorXd(n));
  out.extrapolated.resize(points.size());
  const Eigen::MatrixXd X = to_inputs(points, d);
  for (Eigen::Index start = 0; start < n; start += GrinnLoss::kChunk) {
    const Eigen::Index len = std::min<Eigen::Index>(GrinnLoss::kChunk, n - start);
    const Jet jet = input_jet(model.params, X.middleCols(start, len), JetRequest{true, {}});
    out.rho.segment(start, len) = jet.value().row(0).transpose();
    out.phi.segment(start, len) = jet.value().row(d + 1).transpose();
    for (int i = 0; i < d; ++i) {
      out.v[i].segment(start, len) = jet.value().row(1 + i).transpose();
      out.g[i].segment(start, len) = -jet.first(i).row(d + 1).transpose();
    }
  }
  for (std::size_t k = 0; k < points.size(); ++k) {
    out.extrapolated[k] = points[k].t < model.domain.t_start || points[k].t > model.domain.t_end;
  }
  return out;
}

}  // namespace grinn
