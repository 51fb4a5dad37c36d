#pragma once

// Lax finite-difference reference solver on a periodic grid with a spectral
// Poisson solve for self-gravity.

#include <array>
#include <memory>
#include <span>
#include <vector>

#include "grinn/units_domain.hpp"

namespace grinn {

using Shape = std::array<int, 3>;

/// Gridded fields at one time level. Arrays are stored with axis 0 fastest:
/// index = i0 + N0 * (i1 + N1 * i2). Inactive axes have N = 1.
struct FieldState {
  int dimension = 1;
  Shape shape{1, 1, 1};
  Vec3 spacing{1.0, 1.0, 1.0};
  double t = 0.0;
  std::vector<double> rho;
  std::array<std::vector<double>, 3> v;
  std::vector<double> phi;
  std::array<std::vector<double>, 3> g;

  std::size_t size() const {
    return static_cast<std::size_t>(shape[0]) * shape[1] * shape[2];
  }
  std::size_t index(int i0, int i1 = 0, int i2 = 0) const {
    return static_cast<std::size_t>(i0) +
           static_cast<std::size_t>(shape[0]) * (i1 + static_cast<std::size_t>(shape[1]) * i2);
  }
  /// Cell-center coordinate along `axis`.
  double coordinate(int axis, int i) const { return (i + 0.5) * spacing[axis]; }
  double cell_volume() const;
  double total_mass() const;
  Vec3 total_momentum() const;
  double max_density() const;
};

/// Allocates zeroed fields (rho = 0) of the given shape.
FieldState make_state(int dimension, const Shape& shape, const Vec3& spacing);

/// FFT-backed solver for the second-order discrete Poisson equation on a
/// fixed periodic grid. Holds FFTW plans, so it is move-only.
class PoissonSolver {
 public:
  PoissonSolver(int dimension, const Shape& shape, const Vec3& spacing);
  ~PoissonSolver();
  PoissonSolver(PoissonSolver&&) noexcept;
  PoissonSolver& operator=(PoissonSolver&&) noexcept;
  PoissonSolver(const PoissonSolver&) = delete;
  PoissonSolver& operator=(const PoissonSolver&) = delete;

  /// Mean-free phi with sum_i (phi_{+i} - 2 phi + phi_{-i}) / dx_i^2
  /// = 4piG (rho - mean(rho)).
  void solve(std::span<const double> rho, std::span<double> phi, double four_pi_G) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::vector<double> solve_poisson(std::span<const double> rho, int dimension, const Shape& shape,
                                  const Vec3& spacing, const UnitSystem& units = {});

/// g_i = -(phi_{+i} - phi_{-i}) / (2 dx_i) with periodic wrap.
std::array<std::vector<double>, 3> gravitational_field(std::span<const double> phi,
                                                       int dimension, const Shape& shape,
                                                       const Vec3& spacing);

/// Second-order periodic discrete Laplacian.
std::vector<double> discrete_laplacian(std::span<const double> f, int dimension,
                                       const Shape& shape, const Vec3& spacing);

struct FdSettings {
  double courant = 0.5;
  bool gravity = true;
  UnitSystem units;
};

/// Samples the case's linear-theory initial condition at cell centers and
/// fills phi and g.
FieldState init_grid(const CaseConfig& config, const UnitSystem& units = {});

/// nu * min dx / (c_s + max |v|), max taken over all components.
double courant_dt(const FieldState& state, double courant, const UnitSystem& units = {});

/// Refreshes phi and g from rho (zeroes them when gravity is off).
void update_gravity(FieldState& state, const FdSettings& settings,
                    const PoissonSolver* solver = nullptr);

/// One Lax step for density and momentum density, followed by the gravity
/// refresh. Throws Error(positivity_failure) if rho <= 0 anywhere.
FieldState lax_step(const FieldState& state, double dt, const FdSettings& settings,
                    const PoissonSolver* solver = nullptr, long step_index = 0);

struct Trajectory {
  std::vector<FieldState> snapshots;
  CaseConfig config;
  double courant = 0.5;
  long total_steps = 0;
};

/// Advances `initial` through the requested times (relative to nothing: they
/// are absolute code times). The first snapshot is the initial state; steps
/// straddling an output time are shortened to land on it exactly.
Trajectory evolve_state(FieldState initial, const FdSettings& settings,
                        std::vector<double> output_times);

Trajectory evolve(const CaseConfig& config, std::vector<double> output_times,
                  const UnitSystem& units = {});

/// Linear interpolation of a periodic cell-centered field at point x.
double interpolate(const FieldState& state, std::span<const double> field, const Vec3& x);

}  // namespace grinn
