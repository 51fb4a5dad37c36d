#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "grinn/error.hpp"
#include "grinn/harness.hpp"
#include "grinn/linear_theory.hpp"

using namespace grinn;

namespace {

constexpr double kPi = std::numbers::pi;

FieldState wave_snapshot(int N, double L, double t, const std::function<double(double)>& rho) {
  FieldState s = make_state(1, {N, 1, 1}, {L / N, 1, 1});
  s.t = t;
  for (int i = 0; i < N; ++i) s.rho[i] = rho(s.coordinate(0, i));
  return s;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorKind::io;
}

}  // namespace

TEST(Mismatch, Formulas) {
  const std::vector<double> a{1.02}, b{1.00};
  EXPECT_NEAR(grinn::mismatch(a, b, MismatchKind::density)[0], 200 * 0.02 / 2.02, 1e-13);
  EXPECT_NEAR(grinn::mismatch(a, b, MismatchKind::density)[0], 1.98, 5e-3);

  const std::vector<double> va{0.001, 0.0}, vb{0.0, 0.018};
  EXPECT_NEAR(grinn::mismatch(va, vb, MismatchKind::signed_field)[0], 100 * 0.001 / 0.018, 1e-12);
  EXPECT_NEAR(grinn::mismatch(va, vb, MismatchKind::signed_field)[0], 5.6, 0.05);

  // The literal form divides by |a + b|.
  const std::vector<double> la{0.5}, lb{-0.3};
  EXPECT_NEAR(grinn::mismatch(la, lb, MismatchKind::literal)[0], 200 * 0.8 / 0.2, 1e-12);
}

TEST(Mismatch, IdenticalIsZeroAndSymmetric) {
  const std::vector<double> a{1.0, 1.1, 0.95}, b{1.05, 1.1, 0.9};
  for (double e : grinn::mismatch(a, a, MismatchKind::density)) EXPECT_EQ(e, 0.0);
  for (double e : grinn::mismatch(a, a, MismatchKind::signed_field)) EXPECT_EQ(e, 0.0);
  const auto ab = grinn::mismatch(a, b, MismatchKind::density);
  const auto ba = grinn::mismatch(b, a, MismatchKind::density);
  for (std::size_t i = 0; i < ab.size(); ++i) {
    EXPECT_EQ(ab[i], ba[i]);
    EXPECT_GE(ab[i], 0.0);
    EXPECT_EQ(ab[i] == 0.0, a[i] == b[i]);
  }
}

TEST(Mismatch, ShapeErrors) {
  const std::vector<double> a{1.0, 2.0}, b{1.0};
  EXPECT_EQ(kind_of([&] { grinn::mismatch(a, b, MismatchKind::density); }), ErrorKind::shape);
  EXPECT_EQ(kind_of([] { volume_avg_mismatch({}); }), ErrorKind::shape);
}

TEST(VolumeAverage, Examples) {
  const std::vector<double> flat(10, 2.0);
  const MeanSpread a = volume_avg_mismatch(flat);
  EXPECT_DOUBLE_EQ(a.mean, 2.0);
  EXPECT_DOUBLE_EQ(a.stddev, 0.0);
  std::vector<double> half(10, 0.0);
  for (int i = 5; i < 10; ++i) half[i] = 4.0;
  const MeanSpread b = volume_avg_mismatch(half);
  EXPECT_DOUBLE_EQ(b.mean, 2.0);
  EXPECT_DOUBLE_EQ(b.stddev, 2.0);
}

TEST(Growth, ExactExponentialRecovered) {
  for (double phase : {0.0, 1.1}) {
    for (double amp : {0.03, 0.001}) {
      const double k = 1 / 1.11, L = 3 * 2 * kPi / k;
      std::vector<FieldState> snaps;
      for (int i = 0; i <= 10; ++i) {
        const double t = 0.25 * i;
        snaps.push_back(wave_snapshot(
            2000, L, t, [&](double x) { return 1 + amp * std::exp(0.4338 * t) * std::cos(k * x + phase); }));
      }
      // Sampling can miss the crest, but the crest value scales uniformly.
      EXPECT_NEAR(measure_growth_rate(snaps), 0.4338, 0.4338 * 1e-6);
    }
  }
}

TEST(Growth, RejectsOscillatingAndShortData) {
  const WaveMode m = case_mode(paper_case(CaseId::case3));
  std::vector<FieldState> snaps;
  for (int i = 0; i <= 20; ++i) {
    const double t = 0.4 * i;
    snaps.push_back(wave_snapshot(400, 15.08, t, [&](double x) {
      return evaluate_mode(m, {x, 0, 0}, t).rho;
    }));
  }
  EXPECT_EQ(kind_of([&] { measure_growth_rate(snaps); }), ErrorKind::fit_failure);
  snaps.resize(3);
  EXPECT_EQ(kind_of([&] { measure_growth_rate(snaps); }), ErrorKind::fit_failure);
}

TEST(Growth, FdCaseOneMatchesLinearRate) {
  const CaseConfig c = paper_case(CaseId::case1);
  std::vector<double> times;
  for (int i = 1; i <= 12; ++i) times.push_back(0.25 * i);
  const Trajectory tr = evolve(c, times);
  EXPECT_NEAR(measure_growth_rate(tr), growth_rate(1 / 1.11), 0.02 * growth_rate(1 / 1.11));
}

TEST(PhaseSpeed, SyntheticTravelingWave) {
  const double k = 1.25, L = 3 * 2 * kPi / k;
  std::vector<FieldState> snaps;
  for (int i = 0; i <= 6; ++i) {
    const double t = 0.5 * i;
    snaps.push_back(wave_snapshot(1000, L, t, [&](double x) {
      return 1 + 0.03 * std::cos(0.75 * t - k * x);
    }));
  }
  EXPECT_NEAR(measure_phase_speed(snaps), 0.6, 0.006);
}

TEST(PhaseSpeed, FlatSignalFails) {
  std::vector<FieldState> snaps;
  for (int i = 0; i < 3; ++i) snaps.push_back(wave_snapshot(64, 10, i, [](double) { return 1.0; }));
  EXPECT_EQ(kind_of([&] { measure_phase_speed(snaps); }), ErrorKind::fit_failure);
}

TEST(PhaseSpeed, GravityOffSoundWave) {
  CaseConfig c = paper_case(CaseId::soundwave_linear);
  c.amplitude = 0.003;
  c.fd.grid_points = 1000;
  c.t_end = 1.0;
  const Trajectory tr = evolve(c, {0.25, 0.5, 0.75, 1.0});
  EXPECT_NEAR(measure_phase_speed(tr), 1.0, 0.02);
}

TEST(Compare, SolverAgainstItselfIsZero) {
  CaseConfig c = paper_case(CaseId::case3);
  c.fd.grid_points = 400;
  EvalGrid grid;
  const std::vector<double> times{0.0, 1.0};
  for (auto [a, b] : {std::pair{SolverKind::lt, SolverKind::lt},
                      std::pair{SolverKind::fd, SolverKind::fd}}) {
    const auto reports = compare_case(c, {a, b, nullptr, nullptr}, times, grid);
    ASSERT_EQ(reports.size(), 2u);
    for (const auto& r : reports) {
      for (const auto& f : r.fields) EXPECT_EQ(f.max, 0.0) << f.field;
    }
  }
}

TEST(Compare, PermutationOfTimesGivesSameReports) {
  CaseConfig c = paper_case(CaseId::case3);
  c.fd.grid_points = 400;
  EvalGrid grid;
  grid.points = 50;
  const std::vector<double> fwd{0.5, 1.0, 2.0};
  const std::vector<double> rev{2.0, 0.5, 1.0};
  const auto a = compare_case(c, {SolverKind::fd, SolverKind::lt}, fwd, grid);
  const auto b = compare_case(c, {SolverKind::fd, SolverKind::lt}, rev, grid);
  ASSERT_EQ(a.size(), 3u);
  ASSERT_EQ(b.size(), 3u);
  const int map[3] = {1, 2, 0};
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(a[i].t, b[map[i]].t);
    EXPECT_EQ(a[i].field("rho").eps, b[map[i]].field("rho").eps);
  }
  const FieldMismatch& rho = a[1].field("rho");
  double sum = 0.0;
  for (double e : rho.eps) sum += e;
  EXPECT_NEAR(rho.mean, sum / rho.eps.size(), 1e-12);
  EXPECT_EQ(kind_of([&] { a[0].field("nope"); }), ErrorKind::query);
  EXPECT_EQ(a[0].field("vx_literal").kind, MismatchKind::literal);
}

TEST(Compare, GrinnRequiresModel) {
  const CaseConfig c = paper_case(CaseId::case1);
  const std::vector<double> times{1.0};
  EXPECT_THROW(compare_case(c, {SolverKind::grinn, SolverKind::lt}, times, EvalGrid{}), Error);
}

TEST(Compare, VolumeGridCoversDomain) {
  const DomainSpec d = build_domain(2, 1, 4.0, 1.0);
  EvalGrid g;
  g.volume = true;
  g.points = 5;
  const auto pts = grid_points(g, d, 10, 0.5);
  EXPECT_EQ(pts.size(), 25u);
  EXPECT_DOUBLE_EQ(pts[0].x[0], 0.4);
  EXPECT_DOUBLE_EQ(pts[0].t, 0.5);
}

TEST(Scaling, LinearityDeviation) {
  std::vector<ScalingRecord> recs(4);
  for (int i = 0; i < 4; ++i) {
    recs[i].t = i + 1;
    recs[i].normalized = i + 1;
  }
  EXPECT_NEAR(linearity_deviation(recs), 0.0, 1e-12);
  recs[3].normalized = 4.4;
  EXPECT_GT(linearity_deviation(recs), 0.0);
}

TEST(Scaling, FdTimeScalingRecordsPerTime) {
  ScalingOptions o;
  o.repetitions = 2;
  o.fd_time_points = 200;
  o.times = {0.5, 1.0};
  const auto recs = fd_time_scaling(o);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].samples.size(), 2u);
  EXPECT_DOUBLE_EQ(recs[0].normalized, 1.0);
  for (const auto& r : recs) {
    EXPECT_EQ(r.seconds, *std::min_element(r.samples.begin(), r.samples.end()));
    EXPECT_LE(r.seconds, r.mean);
  }
  EXPECT_DOUBLE_EQ(recs[1].normalized, recs[1].seconds / recs[0].seconds);
  std::ostringstream out;
  write_scaling(out, recs);
  EXPECT_EQ(out.str().rfind("#", 0), 0u);
}
