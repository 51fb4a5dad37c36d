#pragma once

// Physics-informed loss for isothermal self-gravitating flow, the two-phase
// (Adam, then L-BFGS) training schedule, and predictions.
//
// Network outputs are ordered (rho, v_0 .. v_{d-1}, phi); inputs are
// (x_0 .. x_{d-1}, t).

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "grinn/linear_theory.hpp"
#include "grinn/network.hpp"
#include "grinn/optim.hpp"
#include "grinn/units_domain.hpp"

namespace grinn {

struct PhysicsOptions {
  UnitSystem units;
  bool gravity = true;
  /// Poisson source 4piG (rho - rho0) when true, literal 4piG rho otherwise.
  bool mean_free_poisson = true;
};

PhysicsOptions case_physics(const CaseConfig& config, const UnitSystem& units = {});

struct ResidualBundle {
  int dimension = 1;
  Eigen::VectorXd continuity;
  std::vector<Eigen::VectorXd> momentum;
  /// Empty when gravity is off.
  Eigen::VectorXd poisson;
};

/// Residuals from a jet holding first derivatives for every input and pure
/// second derivatives of every spatial axis.
ResidualBundle compute_residuals(const Jet& jet, int dimension, const PhysicsOptions& physics);
ResidualBundle pde_residuals(const NetworkParams& params, const Eigen::MatrixXd& X,
                             const PhysicsOptions& physics);

/// Packs points into an input matrix (d + 1 rows).
Eigen::MatrixXd to_inputs(std::span<const SpaceTimePoint> points, int dimension);

double mse_pde(const NetworkParams& params, const Eigen::MatrixXd& X,
               const PhysicsOptions& physics);
/// Periodicity mismatch of rho, v, phi and d(phi)/dx_axis across each pair,
/// averaged over pairs and summed over fields.
double mse_boundary(const NetworkParams& params, std::span<const BoundaryPair> pairs,
                    int dimension);
double mse_boundary(const Jet& p, const Jet& q, std::span<const int> axes, int dimension);
/// Squared deviation from the linear-theory initial slice (rho, v, and the
/// mean-free linear potential), averaged per field and summed.
double mse_initial(const NetworkParams& params, std::span<const SpaceTimePoint> points,
                   const WaveMode& mode);

/// (d + 2) x N matrix of initial targets.
Eigen::MatrixXd initial_targets(std::span<const SpaceTimePoint> points, const WaveMode& mode);

enum class TrainingPhase { none, adam, lbfgs };
const char* to_string(TrainingPhase phase);

struct LossReport {
  double pde = 0.0;
  double boundary = 0.0;
  double initial = 0.0;
  double total = 0.0;
  int epoch = 0;
  TrainingPhase phase = TrainingPhase::none;
};

/// Assembled objective over a fixed collocation set. Evaluation is chunked
/// with a fixed chunk order and tree reductions, so it is bit-reproducible.
class GrinnLoss {
 public:
  GrinnLoss(const CaseConfig& config, const CollocationSet& collocation,
            const UnitSystem& units = {});

  /// Network architecture (including input normalization) for this problem.
  const NetworkSpec& network_spec() const { return spec_; }
  const WaveMode& mode() const { return mode_; }
  const DomainSpec& domain() const { return domain_; }

  /// Loss components; when `grad` is non-null it receives the gradient of
  /// the weighted total.
  LossReport evaluate(const NetworkParams& params, Eigen::VectorXd* grad = nullptr) const;

  static constexpr int kChunk = 1024;

 private:
  CaseConfig config_;
  PhysicsOptions physics_;
  DomainSpec domain_;
  WaveMode mode_;
  NetworkSpec spec_;
  int dimension_;
  Eigen::MatrixXd interior_;
  Eigen::MatrixXd pair_p_;
  Eigen::MatrixXd pair_q_;
  std::vector<int> pair_axis_;
  Eigen::MatrixXd initial_;
  Eigen::MatrixXd initial_targets_;
};

NetworkSpec case_network_spec(const CaseConfig& config, const UnitSystem& units = {});

/// Unweighted sum of the three components for `params`.
LossReport total_loss(const NetworkParams& params, const CollocationSet& collocation,
                      const CaseConfig& config, const UnitSystem& units = {});

struct TrainedModel {
  NetworkParams params;
  CaseConfig config;
  UnitSystem units;
  /// Space-time window the network was trained on.
  DomainSpec domain;
  std::vector<LossReport> history;
  LossReport final_loss;
  LbfgsStatus lbfgs_status = LbfgsStatus::max_iterations;
  /// True when training stopped on a non-finite loss; params then hold the
  /// last finite iterate.
  bool aborted = false;
};

struct TrainOptions {
  /// Called for every history entry.
  std::function<void(const LossReport&)> on_progress;
};

/// init_params, Adam epochs, then L-BFGS on the same full-batch objective.
TrainedModel train(const CaseConfig& config, const CollocationSet& collocation,
                   std::uint64_t seed, const UnitSystem& units = {},
                   const TrainOptions& options = {});

/// Convenience: samples the case's collocation set and trains, deriving both
/// seeds from config.pinn.seed.
TrainedModel train_case(const CaseConfig& config, const UnitSystem& units = {},
                        const TrainOptions& options = {});

struct Prediction {
  int dimension = 1;
  Eigen::VectorXd rho;
  std::vector<Eigen::VectorXd> v;
  Eigen::VectorXd phi;
  std::vector<Eigen::VectorXd> g;
  /// Per point: true when t lies outside the trained time window.
  std::vector<bool> extrapolated;
};

/// Throws Error(query) for points outside the spatial domain.
Prediction predict(const TrainedModel& model, std::span<const SpaceTimePoint> points);

}  // namespace grinn
