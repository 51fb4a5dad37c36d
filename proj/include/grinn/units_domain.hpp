#pragma once

// Code units, space-time domains, experiment recipes and collocation sampling.

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace grinn {

using Vec3 = std::array<double, 3>;

/// Nondimensional unit system. Defaults give c_s = 4piG = rho0 = 1.
struct UnitSystem {
  double sound_speed = 1.0;
  double four_pi_G = 1.0;
  double background_density = 1.0;

  double jeans_wavenumber() const;
  double jeans_length() const;
  double free_fall_time() const;
  void validate() const;

  bool operator==(const UnitSystem&) const = default;
};

UnitSystem default_units();

/// Periodic box [0, x_m[i]) for the d active axes times [t_start, t_end].
struct DomainSpec {
  int dimension = 1;
  Vec3 extent{1.0, 1.0, 1.0};
  double t_start = 0.0;
  double t_end = 1.0;

  void validate() const;
  double spatial_volume() const;
};

DomainSpec build_domain(int dimension, double wavelengths_per_axis, double wavelength,
                        double t_end);

enum class CaseId { case1, case1_oblique, case2, case3, soundwave_linear, soundwave_shock };
enum class SolverKind { grinn, fd, lt };

std::string_view to_string(CaseId id);
std::string_view to_string(SolverKind kind);
/// Accepts canonical names as well as the short forms "1", "2", "3", "1o".
CaseId parse_case_id(std::string_view text);
SolverKind parse_solver(std::string_view text);

struct FdParams {
  int grid_points = 1000;
  double courant = 0.5;

  bool operator==(const FdParams&) const = default;
};

struct PinnParams {
  std::vector<int> hidden_layers{32, 32, 32};
  int n_interior = 5000;
  int n_boundary = 500;
  int n_initial = 500;
  int adam_epochs = 2000;
  double learning_rate = 1e-3;
  int lbfgs_iterations = 5000;
  int lbfgs_memory = 10;
  std::uint64_t seed = 1234;
  // Frequency factor on the first layer's pre-activation.
  double omega0 = 1.0;
  // Time interval mapped onto the network's [-1, 1] time input; 0 uses the
  // training window. A long span keeps time features slow, which helps
  // predictions past the window.
  double time_span = 0.0;
  double weight_pde = 1.0;
  double weight_boundary = 1.0;
  double weight_initial = 1.0;
  // Poisson residual source: rho - rho0 when true, the literal rho otherwise.
  bool mean_free_poisson = true;

  bool operator==(const PinnParams&) const = default;
};

struct CaseConfig {
  CaseId id = CaseId::case1;
  int dimension = 1;
  double amplitude = 0.03;
  double wavelength_ratio = 1.11;  // lambda / lambda_J
  Vec3 direction{1.0, 0.0, 0.0};
  bool gravity = true;
  SolverKind solver = SolverKind::grinn;
  double wavelengths_per_axis = 3.0;
  double t_start = 0.0;
  double t_end = 3.0;
  FdParams fd;
  PinnParams pinn;

  /// Throws Error(invalid_config) naming the offending key.
  void validate() const;

  bool operator==(const CaseConfig&) const = default;
};

CaseConfig paper_case(CaseId id);
CaseConfig paper_case(std::string_view id);

/// Wavelength in code length for the config's ratio.
double case_wavelength(const CaseConfig& config, const UnitSystem& units = {});
/// Wavevector restricted to the active axes (zero beyond d).
Vec3 case_wavevector(const CaseConfig& config, const UnitSystem& units = {});
/// Domain whose extent along axis i holds an integer number of wave periods:
/// n * lambda / |khat_i| for axes the wave crosses, n * lambda otherwise.
DomainSpec case_domain(const CaseConfig& config, const UnitSystem& units = {});

struct SpaceTimePoint {
  Vec3 x{0.0, 0.0, 0.0};
  double t = 0.0;

  bool operator==(const SpaceTimePoint&) const = default;
};

/// q = p + x_m[axis] * e_axis.
struct BoundaryPair {
  int axis = 0;
  SpaceTimePoint p;
  SpaceTimePoint q;

  bool operator==(const BoundaryPair&) const = default;
};

struct CollocationSet {
  int dimension = 1;
  std::vector<SpaceTimePoint> interior;
  std::vector<BoundaryPair> boundary;
  std::vector<SpaceTimePoint> initial;
  std::uint64_t seed = 0;

  /// Boundary points (two per pair).
  std::size_t boundary_point_count() const { return 2 * boundary.size(); }

  bool operator==(const CollocationSet&) const = default;
};

/// Uniform sampling. n_boundary counts boundary points: n_boundary/2 pairs
/// are split across the d axes, remainder assigned round-robin.
CollocationSet sample_collocation(const DomainSpec& domain, int n_interior, int n_boundary,
                                  int n_initial, std::uint64_t seed);

}  // namespace grinn
