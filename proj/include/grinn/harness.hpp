#pragma once

// Solver cross-comparison: pointwise and volume-averaged mismatch, rate
// measurements on trajectories, and wall-clock scaling studies.

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "grinn/error.hpp"
#include "grinn/fd_reference.hpp"
#include "grinn/grinn_model.hpp"
#include "grinn/units_domain.hpp"

namespace grinn {

enum class MismatchKind {
  /// 200 |a - b| / (a + b), for positive fields.
  density,
  /// 100 |a - b| / max(|b|_inf, floor), amplitude normalized.
  signed_field,
  /// 200 |a - b| / max(|a + b|, floor), the density formula applied as is.
  literal,
};

const char* to_string(MismatchKind kind);

inline constexpr double kMismatchFloor = 1e-12;

/// Pointwise mismatch in percent. Throws Error(shape) on size mismatch.
std::vector<double> mismatch(std::span<const double> a, std::span<const double> b,
                             MismatchKind kind);

struct MeanSpread {
  double mean = 0.0;
  double stddev = 0.0;
};

/// Mean and population standard deviation. Throws Error(shape) when empty.
MeanSpread volume_avg_mismatch(std::span<const double> eps);

/// Where both solutions are sampled: a 1D cut along `axis` with the other
/// coordinates fixed, or the full volume.
struct EvalGrid {
  bool volume = false;
  int axis = 0;
  Vec3 transverse{0.0, 0.0, 0.0};
  /// Points per axis; 0 uses the FD grid resolution.
  int points = 0;

  std::string describe() const;
};

/// Query points of the grid at time t (cell centers of a uniform partition).
std::vector<SpaceTimePoint> grid_points(const EvalGrid& grid, const DomainSpec& domain,
                                        int default_points, double t);

struct FieldMismatch {
  std::string field;
  MismatchKind kind = MismatchKind::density;
  std::vector<double> eps;
  double mean = 0.0;
  double stddev = 0.0;
  double max = 0.0;
};

struct MismatchReport {
  std::string solver_a;
  std::string solver_b;
  double t = 0.0;
  std::string grid;
  std::vector<SpaceTimePoint> points;
  std::vector<FieldMismatch> fields;

  /// Throws Error(query) when absent.
  const FieldMismatch& field(std::string_view name) const;
};

/// Fields of one solver at a set of points.
struct SampledFields {
  int dimension = 1;
  std::vector<double> rho;
  std::array<std::vector<double>, 3> v;
  std::vector<double> phi;
};

/// Builds the report for two samplings on the same points. The density uses
/// MismatchKind::density; velocity and potential get both signed_field
/// (named e.g. "vx") and literal ("vx_literal") variants.
MismatchReport compare_fields(const SampledFields& a, const SampledFields& b,
                              std::vector<SpaceTimePoint> points, std::string solver_a,
                              std::string solver_b, std::string grid);

SampledFields sample_mode(const WaveMode& mode, std::span<const SpaceTimePoint> points);
SampledFields sample_state(const FieldState& state, std::span<const SpaceTimePoint> points);
SampledFields sample_model(const TrainedModel& model, std::span<const SpaceTimePoint> points);

/// Raised when a solver fails mid-comparison; carries the reports finished
/// before the failure.
class CompareFailure : public Error {
 public:
  CompareFailure(const Error& cause, std::vector<MismatchReport> partial)
      : Error(cause.kind(), cause.what()), partial_(std::move(partial)) {}
  const std::vector<MismatchReport>& partial() const { return partial_; }

 private:
  std::vector<MismatchReport> partial_;
};

struct CompareInputs {
  SolverKind a = SolverKind::grinn;
  SolverKind b = SolverKind::lt;
  /// Required when either solver is grinn.
  const TrainedModel* model = nullptr;
  /// Reused instead of evolving when either solver is fd; must contain a
  /// snapshot at every requested time.
  const Trajectory* trajectory = nullptr;
};

/// One report per requested time, in request order.
std::vector<MismatchReport> compare_case(const CaseConfig& config, const CompareInputs& inputs,
                                         std::span<const double> times, const EvalGrid& grid,
                                         const UnitSystem& units = {});

/// Least-squares slope of ln(max rho - rho0) against t over the snapshots
/// whose perturbation stays below 0.3 rho0. Throws Error(fit_failure) for
/// fewer than five usable snapshots, a non-positive slope or a poor fit.
double measure_growth_rate(std::span<const FieldState> snapshots, double rho0 = 1.0);
double measure_growth_rate(const Trajectory& trajectory, double rho0 = 1.0);

/// Mean over consecutive snapshot pairs of the density shift along axis 0
/// (circular cross-correlation peak, parabola-refined) divided by the time
/// gap. Returns the speed magnitude. Throws Error(fit_failure) when the
/// signal is flat or the peak is ambiguous.
double measure_phase_speed(std::span<const FieldState> snapshots);
double measure_phase_speed(const Trajectory& trajectory);

enum class ScalingMode { dimension, time };
const char* to_string(ScalingMode mode);

struct ScalingRecord {
  std::string solver;
  ScalingMode mode = ScalingMode::dimension;
  int dimension = 1;
  double t = 0.0;
  int repetitions = 1;
  std::vector<double> samples;
  /// Wall-clock T: the fastest repetition, which is least disturbed by
  /// other load on the machine.
  double seconds = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  /// seconds / seconds of the reference record (the first in the series).
  double normalized = 1.0;
};

struct ScalingOptions {
  int repetitions = 7;
  /// Perturbation amplitude of the timed case 1 setup. Kept small so the
  /// Courant step, and with it the cost per unit time, stays constant.
  double amplitude = 1e-3;
  /// FD: points per axis and integration time for the dimension study.
  int fd_points = 64;
  double fd_time = 1.0;
  double courant = 0.5;
  /// FD time study: 1D points and times.
  int fd_time_points = 8000;
  std::vector<double> times{1.0, 2.0, 3.0, 4.0, 5.0};
  /// GRINN: collocation counts fixed across d; iterations timed per sample.
  int n_interior = 2000;
  int n_boundary = 200;
  int n_initial = 200;
  int iterations = 5;
  std::vector<int> hidden{32, 32, 32};
};

/// FD evolution time for d = 1, 2, 3 at fixed per-axis resolution.
std::vector<ScalingRecord> fd_dimension_scaling(const ScalingOptions& options);
/// FD evolution time against integration time, normalized to the first.
std::vector<ScalingRecord> fd_time_scaling(const ScalingOptions& options);
/// GRINN wall clock per training iteration (loss and gradient) for d = 1, 2, 3.
std::vector<ScalingRecord> grinn_dimension_scaling(const ScalingOptions& options);

/// Largest relative deviation of the normalized series from its least
/// squares line.
double linearity_deviation(std::span<const ScalingRecord> records);

/// Summary table: a "# grinn mismatch" line, a column header, then one row
/// per report and field.
void write_mismatch_summary(std::ostream& out, std::span<const MismatchReport> reports);
/// Pointwise table for one report: coordinates then one column per field.
void write_mismatch_points(std::ostream& out, const MismatchReport& report, int dimension);
void write_scaling(std::ostream& out, std::span<const ScalingRecord> records);

}  // namespace grinn
