#include <gtest/gtest.h>

#include <cmath>

#include "grinn/error.hpp"
#include "grinn/grinn_model.hpp"
#include "grinn/linear_theory.hpp"

using namespace grinn;

namespace {

CaseConfig small_case(CaseId id = CaseId::case1) {
  CaseConfig c = paper_case(id);
  c.pinn.hidden_layers = {8, 8};
  c.pinn.n_interior = 50;
  c.pinn.n_boundary = 10;
  c.pinn.n_initial = 10;
  return c;
}

// Jet of the exact linear mode: value, d/dx, d/dt, d2/dx2 for a 1D case.
Jet mode_jet(const WaveMode& m, const std::vector<double>& xs, double t) {
  const int B = static_cast<int>(xs.size());
  Jet j(3, B, 2, {0});
  const double h = 1e-4;
  for (int n = 0; n < B; ++n) {
    auto f = [&](double x, double tt) {
      const ModeValues mv = evaluate_mode(m, {x, 0, 0}, tt);
      return std::array<double, 3>{mv.rho, mv.v[0], mv.phi};
    };
    const auto c = f(xs[n], t);
    const auto xp = f(xs[n] + h, t), xm = f(xs[n] - h, t);
    const auto tp = f(xs[n], t + h), tm = f(xs[n], t - h);
    for (int o = 0; o < 3; ++o) {
      j.value()(o, n) = c[o];
      j.first(0)(o, n) = (xp[o] - xm[o]) / (2 * h);
      j.first(1)(o, n) = (tp[o] - tm[o]) / (2 * h);
      j.second(0)(o, n) = (xp[o] - 2 * c[o] + xm[o]) / (h * h);
    }
  }
  return j;
}

}  // namespace

TEST(Residuals, UniformBackgroundIsExact) {
  Jet j(3, 4, 2, {0});
  j.value().row(0).setOnes();
  const ResidualBundle r = compute_residuals(j, 1, PhysicsOptions{});
  EXPECT_EQ(r.continuity.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(r.momentum[0].cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(r.poisson.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Residuals, LiteralPoissonSourceKeepsBackground) {
  Jet j(3, 2, 2, {0});
  j.value().row(0).setOnes();
  PhysicsOptions ph;
  ph.mean_free_poisson = false;
  const ResidualBundle r = compute_residuals(j, 1, ph);
  EXPECT_DOUBLE_EQ(r.poisson[0], -1.0);
}

TEST(Residuals, LinearModesSatisfyEquationsToSecondOrder) {
  // Residuals of the linear solution in the nonlinear equations are O(A^2).
  for (double ratio : {1.11, 0.8}) {
    for (double amp : {1e-3, 1e-4}) {
      const double k = 2 * M_PI / (ratio * 2 * M_PI);
      const WaveMode m = make_mode(amp, {k, 0, 0}, 1);
      const Jet j = mode_jet(m, {0.1, 1.3, 2.9, 4.4}, 0.7);
      const ResidualBundle r = compute_residuals(j, 1, PhysicsOptions{});
      const double bound = 4 * amp * amp + 1e-7;
      EXPECT_LT(r.continuity.cwiseAbs().maxCoeff(), bound);
      EXPECT_LT(r.momentum[0].cwiseAbs().maxCoeff(), bound);
      EXPECT_LT(r.poisson.cwiseAbs().maxCoeff(), 1e-6);
    }
  }
}

TEST(Residuals, StableSoundModeIsSecondOrderAccurate) {
  const double amp = 0.03;
  const WaveMode m = make_mode(amp, {1.0, 0, 0}, 1, {}, false);
  PhysicsOptions ph;
  ph.gravity = false;
  const Jet j = mode_jet(m, {0.2, 1.9, 3.3, 5.0, 6.1}, 0.6);
  const ResidualBundle r = compute_residuals(j, 1, ph);
  EXPECT_LT(r.continuity.cwiseAbs().maxCoeff(), 3 * amp * amp);
  EXPECT_LT(r.momentum[0].cwiseAbs().maxCoeff(), 3 * amp * amp);
}

TEST(Residuals, UnstableModeAtStartIsOrderAmplitudeSquared) {
  const double amp = 0.03;
  const WaveMode m = case_mode(paper_case(CaseId::case1));
  std::vector<double> xs;
  for (int i = 0; i < 40; ++i) xs.push_back(0.5 * i);
  const Jet j = mode_jet(m, xs, 0.0);
  const ResidualBundle r = compute_residuals(j, 1, PhysicsOptions{});
  const double worst = std::max(r.continuity.cwiseAbs().maxCoeff(),
                                r.momentum[0].cwiseAbs().maxCoeff());
  EXPECT_GT(worst, 0.1 * amp * amp);
  EXPECT_LT(worst, 3 * amp * amp);
}

TEST(Residuals, NonFiniteJetRejected) {
  Jet j(3, 2, 2, {0});
  j.value()(0, 1) = std::nan("");
  try {
    compute_residuals(j, 1, PhysicsOptions{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::evaluation);
  }
}

TEST(Residuals, GravityOffDropsPoisson) {
  Jet j(3, 3, 2, {});
  j.value().row(0).setOnes();
  PhysicsOptions ph;
  ph.gravity = false;
  const ResidualBundle r = compute_residuals(j, 1, ph);
  EXPECT_EQ(r.poisson.size(), 0);
}

TEST(Residuals, MissingSecondDerivativesRejected) {
  Jet j(3, 3, 2, {});
  EXPECT_THROW(compute_residuals(j, 1, PhysicsOptions{}), Error);
}

TEST(Loss, GradientMatchesFiniteDifferences) {
  for (CaseId id : {CaseId::case1, CaseId::soundwave_linear}) {
    for (int d : {1, 2}) {
      CaseConfig c = small_case(id);
      c.dimension = d;
      c.pinn.weight_pde = 1.3;
      c.pinn.weight_boundary = 0.7;
      const CollocationSet set = sample_collocation(case_domain(c), 50, 10, 10, 5);
      const GrinnLoss loss(c, set);
      NetworkParams p = init_params(loss.network_spec(), 3);
      Eigen::VectorXd g;
      const LossReport base = loss.evaluate(p, &g);
      EXPECT_NEAR(base.total,
                  1.3 * base.pde + 0.7 * base.boundary + base.initial, 1e-15 * base.total);
      Eigen::VectorXd fd(g.size());
      const double h = 1e-6;
      for (Eigen::Index i = 0; i < g.size(); ++i) {
        NetworkParams q = p;
        q.flat()[i] += h;
        const double fp = loss.evaluate(q).total;
        q.flat()[i] -= 2 * h;
        const double fm = loss.evaluate(q).total;
        fd[i] = (fp - fm) / (2 * h);
      }
      EXPECT_LT((g - fd).norm() / g.norm(), 1e-5) << "case " << to_string(id) << " d=" << d;
    }
  }
}

TEST(Loss, EvaluationIsBitReproducible) {
  const CaseConfig c = small_case();
  const CollocationSet set = sample_collocation(case_domain(c), 3000, 40, 40, 9);
  const GrinnLoss loss(c, set);
  const NetworkParams p = init_params(loss.network_spec(), 4);
  Eigen::VectorXd g1, g2;
  const LossReport a = loss.evaluate(p, &g1);
  const LossReport b = loss.evaluate(p, &g2);
  EXPECT_EQ(a.total, b.total);
  EXPECT_EQ(g1, g2);
  EXPECT_EQ(loss.evaluate(p).total, a.total);
}

TEST(Loss, ComponentsMatchStandaloneMeans) {
  const CaseConfig c = small_case();
  const CollocationSet set = sample_collocation(case_domain(c), 200, 30, 20, 2);
  const GrinnLoss loss(c, set);
  const NetworkParams p = init_params(loss.network_spec(), 8);
  const LossReport r = loss.evaluate(p);
  const PhysicsOptions ph = case_physics(c);
  EXPECT_NEAR(r.pde, mse_pde(p, to_inputs(set.interior, 1), ph), 1e-14 * r.pde);
  EXPECT_NEAR(r.boundary, mse_boundary(p, set.boundary, 1), 1e-14 * r.boundary);
  EXPECT_NEAR(r.initial, mse_initial(p, set.initial, loss.mode()), 1e-14 * r.initial);
  const LossReport t = total_loss(p, set, c);
  EXPECT_NEAR(t.total, r.pde + r.boundary + r.initial, 1e-14 * t.total);
}

TEST(Loss, TimeSpanSetsTimeNormalization) {
  CaseConfig c = small_case();
  c.t_end = 1.0;
  c.pinn.time_span = 0.0;
  EXPECT_EQ(case_network_spec(c).input_upper[1], 1.0);
  c.pinn.time_span = 50.0;
  const NetworkSpec s = case_network_spec(c);
  EXPECT_EQ(s.input_lower[1], 0.0);
  EXPECT_EQ(s.input_upper[1], 50.0);
  EXPECT_EQ(s.input_upper[0], case_domain(c).extent[0]);
  c.pinn.time_span = -1.0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Loss, HardPeriodicNetworkHasNoBoundaryMismatch) {
  const CaseConfig c = small_case();
  const DomainSpec dom = case_domain(c);
  NetworkSpec spec = case_network_spec(c);
  spec.periods = {dom.extent[0], 0.0};
  const NetworkParams p = init_params(spec, 1);
  const CollocationSet set = sample_collocation(dom, 10, 40, 10, 6);
  EXPECT_LT(mse_boundary(p, set.boundary, 1), 1e-20);
}

TEST(Loss, InitialTargetsFollowLinearTheory) {
  const CaseConfig c = paper_case(CaseId::case1);
  const WaveMode m = case_mode(c);
  std::vector<SpaceTimePoint> pts{{{0.0, 0, 0}, 0.0}, {{1.7, 0, 0}, 0.0}};
  const Eigen::MatrixXd T = initial_targets(pts, m);
  EXPECT_DOUBLE_EQ(T(0, 0), 1.03);
  EXPECT_NEAR(T(1, 0), 0.0, 1e-18);
  const double k = m.k_mag();
  EXPECT_NEAR(T(1, 1), m.velocity_amplitude * std::sin(k * 1.7), 1e-15);
  EXPECT_NEAR(T(2, 1), -0.03 * std::cos(k * 1.7) / (k * k), 1e-15);
}

TEST(Train, ShortRunLowersLossAndRecordsHistory) {
  CaseConfig c = small_case();
  c.pinn.adam_epochs = 30;
  c.pinn.lbfgs_iterations = 20;
  c.pinn.n_interior = 200;
  c.pinn.n_boundary = 40;
  c.pinn.n_initial = 40;
  std::size_t calls = 0;
  TrainOptions o;
  o.on_progress = [&](const LossReport&) { ++calls; };
  const TrainedModel m = train_case(c, {}, o);
  ASSERT_FALSE(m.aborted);
  ASSERT_GE(m.history.size(), 31u);
  EXPECT_EQ(calls, m.history.size());
  EXPECT_EQ(m.history.front().phase, TrainingPhase::adam);
  EXPECT_EQ(m.history.back().phase, TrainingPhase::lbfgs);
  EXPECT_LT(m.final_loss.total, m.history.front().total);
  // Same seed, same result.
  const TrainedModel again = train_case(c);
  EXPECT_EQ(again.params.flat(), m.params.flat());
}

TEST(Loss, ZeroAmplitudeBackgroundIsStationary) {
  CaseConfig c = small_case();
  c.amplitude = 0.0;
  const CollocationSet set = sample_collocation(case_domain(c), 200, 40, 40, 3);
  const GrinnLoss loss(c, set);
  NetworkParams p = init_params(loss.network_spec(), 5);
  const int last = p.spec().layer_count() - 1;
  p.weight(last).setZero();
  p.bias(last).setZero();
  p.bias(last)[0] = 1.0;
  Eigen::VectorXd g;
  const LossReport r = loss.evaluate(p, &g);
  EXPECT_LT(r.total, 1e-10);
  EXPECT_LT(g.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Predict, GravityIsMinusPotentialGradient) {
  CaseConfig c = small_case();
  TrainedModel m;
  m.config = c;
  m.domain = case_domain(c);
  m.params = init_params(case_network_spec(c), 12);
  const double h = 1e-5;
  std::vector<SpaceTimePoint> pts{{{3.0, 0, 0}, 1.0}, {{3.0 + h, 0, 0}, 1.0},
                                  {{3.0 - h, 0, 0}, 1.0}};
  const Prediction p = predict(m, pts);
  EXPECT_NEAR(p.g[0][0], -(p.phi[1] - p.phi[2]) / (2 * h), 1e-7);
  EXPECT_FALSE(p.extrapolated[0]);
}

TEST(Predict, FlagsExtrapolationAndRejectsOutsidePoints) {
  CaseConfig c = small_case();
  TrainedModel m;
  m.config = c;
  m.domain = case_domain(c);
  m.params = init_params(case_network_spec(c), 12);
  std::vector<SpaceTimePoint> later{{{1.0, 0, 0}, 5.0}};
  EXPECT_TRUE(predict(m, later).extrapolated[0]);
  std::vector<SpaceTimePoint> outside{{{m.domain.extent[0] + 1.0, 0, 0}, 1.0}};
  try {
    predict(m, outside);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::query);
  }
}
