#include "grinn/linear_theory.hpp"

#include <cmath>

#include "grinn/error.hpp"

namespace grinn {

namespace {

double coupling(const UnitSystem& u, bool gravity) {
  return gravity ? u.four_pi_G * u.background_density : 0.0;
}

}  // namespace

double dispersion(double k_mag, const UnitSystem& units, bool gravity) {
  const double cs2 = units.sound_speed * units.sound_speed;
  return cs2 * k_mag * k_mag - coupling(units, gravity);
}

double jeans_length(const UnitSystem& units) { return units.jeans_length(); }

double jeans_wavenumber(const UnitSystem& units) { return units.jeans_wavenumber(); }

Regime classify(double k_mag, const UnitSystem& units, bool gravity) {
  const double w2 = dispersion(k_mag, units, gravity);
  if (std::abs(w2) <= kMarginalTolerance) return Regime::marginal;
  return w2 > 0.0 ? Regime::stable : Regime::unstable;
}

double growth_rate(double k_mag, const UnitSystem& units) {
  const double w2 = dispersion(k_mag, units, true);
  if (w2 > kMarginalTolerance) {
    throw Error(ErrorKind::regime, "growth_rate requires k < k_J (mode is stable)");
  }
  return w2 >= 0.0 ? 0.0 : std::sqrt(-w2);
}

double phase_speed(double k_mag, const UnitSystem& units, bool gravity) {
  const double w2 = dispersion(k_mag, units, gravity);
  if (!(k_mag > 0.0) || w2 <= 0.0) {
    throw Error(ErrorKind::regime, "phase speed is defined for stable modes with k > 0");
  }
  return std::sqrt(w2) / k_mag;
}

double velocity_amplitude(double amplitude, double k_mag, const UnitSystem& units,
                          bool gravity) {
  if (!(k_mag > 0.0)) throw Error(ErrorKind::singular_mode, "velocity amplitude needs k > 0");
  const double contrast = amplitude / units.background_density;
  switch (classify(k_mag, units, gravity)) {
    case Regime::stable: return phase_speed(k_mag, units, gravity) * contrast;
    case Regime::unstable: return -(growth_rate(k_mag, units) / k_mag) * contrast;
    case Regime::marginal: return 0.0;
  }
  return 0.0;
}

double WaveMode::k_mag() const {
  return std::sqrt(wavevector[0] * wavevector[0] + wavevector[1] * wavevector[1] +
                   wavevector[2] * wavevector[2]);
}

WaveMode make_mode(double amplitude, const Vec3& wavevector, int dimension,
                   const UnitSystem& units, bool gravity) {
  WaveMode m;
  m.amplitude = amplitude;
  m.wavevector = wavevector;
  m.dimension = dimension;
  m.gravity = gravity;
  m.units = units;
  const double k = m.k_mag();
  if (!(k > 0.0)) throw Error(ErrorKind::singular_mode, "mode needs a nonzero wavevector");
  m.regime = classify(k, units, gravity);
  const double w2 = dispersion(k, units, gravity);
  if (m.regime == Regime::stable) {
    m.omega = std::sqrt(w2);
    m.phase_speed = m.omega / k;
  } else if (m.regime == Regime::unstable) {
    m.growth = std::sqrt(-w2);
  }
  m.velocity_amplitude = velocity_amplitude(amplitude, k, units, gravity);
  return m;
}

WaveMode case_mode(const CaseConfig& config, const UnitSystem& units) {
  return make_mode(config.amplitude, case_wavevector(config, units), config.dimension, units,
                   config.gravity);
}

ModeValues evaluate_mode(const WaveMode& mode, const Vec3& x, double t) {
  if (mode.regime == Regime::marginal) {
    throw Error(ErrorKind::unsupported_regime, "marginal modes are not supported");
  }
  const double k = mode.k_mag();
  const Vec3& kv = mode.wavevector;
  const double kx = kv[0] * x[0] + kv[1] * x[1] + kv[2] * x[2];
  const double G4 = coupling(mode.units, mode.gravity) / mode.units.background_density;
  ModeValues out;
  double v_mag = 0.0;
  double g_mag = 0.0;
  if (mode.regime == Regime::stable) {
    const double phase = mode.omega * t - kx;
    const double c = std::cos(phase);
    const double s = std::sin(phase);
    const double rho1 = mode.amplitude * c;
    out.rho = mode.units.background_density + rho1;
    v_mag = mode.velocity_amplitude * c;
    out.phi = -G4 * rho1 / (k * k);
    // g = -grad(phi); d/dx cos(wt - k.x) = k sin(wt - k.x)
    g_mag = G4 * mode.amplitude * s / k;
  } else {
    const double e = std::exp(mode.growth * t);
    const double c = std::cos(kx);
    const double s = std::sin(kx);
    const double rho1 = mode.amplitude * e * c;
    out.rho = mode.units.background_density + rho1;
    v_mag = mode.velocity_amplitude * e * s;
    out.phi = -G4 * rho1 / (k * k);
    g_mag = -G4 * mode.amplitude * e * s / k;
  }
  for (int i = 0; i < 3; ++i) {
    out.v[i] = v_mag * kv[i] / k;
    out.g[i] = g_mag * kv[i] / k;
  }
  return out;
}

ModeValues initial_condition(const WaveMode& mode, const Vec3& x) {
  return evaluate_mode(mode, x, 0.0);
}

}  // namespace grinn
