#pragma once

// Closed-form linear theory of isothermal self-gravitating perturbations
// about a uniform background (Jeans swindle: the background potential is
// discarded and the mode potential is the mean-free solution).

#include "grinn/units_domain.hpp"

namespace grinn {

enum class Regime { stable, unstable, marginal };

inline constexpr double kMarginalTolerance = 1e-12;

/// omega^2 = c_s^2 k^2 - 4piG rho0 (the gravity term is dropped when
/// `gravity` is false).
double dispersion(double k_mag, const UnitSystem& units = {}, bool gravity = true);
double jeans_length(const UnitSystem& units = {});
double jeans_wavenumber(const UnitSystem& units = {});
Regime classify(double k_mag, const UnitSystem& units = {}, bool gravity = true);

/// Growth rate of an unstable mode; throws Error(regime) for k >= k_J.
/// k == k_J exactly returns 0.
double growth_rate(double k_mag, const UnitSystem& units = {});
/// v_p = omega / k for a stable mode.
double phase_speed(double k_mag, const UnitSystem& units = {}, bool gravity = true);
/// Stable: +v_p rho1a/rho0. Unstable: -(alpha/k) rho1a/rho0 (growing branch).
double velocity_amplitude(double amplitude, double k_mag, const UnitSystem& units = {},
                          bool gravity = true);

struct WaveMode {
  double amplitude = 0.0;
  Vec3 wavevector{0.0, 0.0, 0.0};
  int dimension = 1;
  Regime regime = Regime::stable;
  double omega = 0.0;        // stable only
  double growth = 0.0;       // unstable only
  double phase_speed = 0.0;  // stable only
  double velocity_amplitude = 0.0;
  bool gravity = true;
  UnitSystem units;

  double k_mag() const;
};

WaveMode make_mode(double amplitude, const Vec3& wavevector, int dimension,
                   const UnitSystem& units = {}, bool gravity = true);
WaveMode case_mode(const CaseConfig& config, const UnitSystem& units = {});

struct ModeValues {
  double rho = 0.0;
  Vec3 v{0.0, 0.0, 0.0};
  double phi = 0.0;
  Vec3 g{0.0, 0.0, 0.0};
};

/// Full space-time linear solution. Marginal modes are rejected.
ModeValues evaluate_mode(const WaveMode& mode, const Vec3& x, double t);

/// t = 0 slice. For unstable modes this is rho0 + rho1a cos(k.x),
/// v = v1a sin(k.x) khat.
ModeValues initial_condition(const WaveMode& mode, const Vec3& x);

}  // namespace grinn
