#include "grinn/units_domain.hpp"

#include <cmath>
#include <numbers>

#include "grinn/error.hpp"
#include "grinn/random.hpp"

namespace grinn {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_domain: return "invalid-domain";
    case ErrorKind::unknown_case: return "unknown-case";
    case ErrorKind::invalid_config: return "invalid-config";
    case ErrorKind::regime: return "regime";
    case ErrorKind::singular_mode: return "singular-mode";
    case ErrorKind::unsupported_regime: return "unsupported-regime";
    case ErrorKind::solver_failure: return "solver-failure";
    case ErrorKind::positivity_failure: return "positivity-failure";
    case ErrorKind::evaluation: return "evaluation";
    case ErrorKind::training_failure: return "training-failure";
    case ErrorKind::shape: return "shape";
    case ErrorKind::fit_failure: return "fit-failure";
    case ErrorKind::query: return "query";
    case ErrorKind::parse: return "parse";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

double UnitSystem::jeans_wavenumber() const {
  return std::sqrt(four_pi_G * background_density) / sound_speed;
}

double UnitSystem::jeans_length() const { return 2.0 * std::numbers::pi / jeans_wavenumber(); }

double UnitSystem::free_fall_time() const {
  return 1.0 / std::sqrt(four_pi_G * background_density);
}

void UnitSystem::validate() const {
  if (!(sound_speed > 0.0) || !(four_pi_G > 0.0) || !(background_density > 0.0)) {
    throw Error(ErrorKind::invalid_config, "unit system values must be strictly positive");
  }
}

UnitSystem default_units() { return UnitSystem{}; }

void DomainSpec::validate() const {
  if (dimension < 1 || dimension > 3) {
    throw Error(ErrorKind::invalid_domain, "dimension must be 1, 2 or 3");
  }
  for (int i = 0; i < dimension; ++i) {
    if (!(extent[i] > 0.0) || !std::isfinite(extent[i])) {
      throw Error(ErrorKind::invalid_domain, "domain extent must be positive and finite");
    }
  }
  if (!(t_end > t_start)) {
    throw Error(ErrorKind::invalid_domain, "time window must satisfy t_end > t_start");
  }
}

double DomainSpec::spatial_volume() const {
  double v = 1.0;
  for (int i = 0; i < dimension; ++i) v *= extent[i];
  return v;
}

DomainSpec build_domain(int dimension, double wavelengths_per_axis, double wavelength,
                        double t_end) {
  if (!(wavelength > 0.0) || !(t_end > 0.0) || !(wavelengths_per_axis > 0.0)) {
    throw Error(ErrorKind::invalid_domain, "wavelength, wavelength count and t_end must be > 0");
  }
  DomainSpec d;
  d.dimension = dimension;
  d.extent = {wavelength, wavelength, wavelength};
  for (int i = 0; i < std::min(dimension, 3); ++i) d.extent[i] = wavelengths_per_axis * wavelength;
  d.t_start = 0.0;
  d.t_end = t_end;
  d.validate();
  return d;
}

std::string_view to_string(CaseId id) {
  switch (id) {
    case CaseId::case1: return "case1";
    case CaseId::case1_oblique: return "case1_oblique";
    case CaseId::case2: return "case2";
    case CaseId::case3: return "case3";
    case CaseId::soundwave_linear: return "soundwave_linear";
    case CaseId::soundwave_shock: return "soundwave_shock";
  }
  return "unknown";
}

std::string_view to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::grinn: return "grinn";
    case SolverKind::fd: return "fd";
    case SolverKind::lt: return "lt";
  }
  return "unknown";
}

CaseId parse_case_id(std::string_view text) {
  if (text == "case1" || text == "1") return CaseId::case1;
  if (text == "case1_oblique" || text == "1o") return CaseId::case1_oblique;
  if (text == "case2" || text == "2") return CaseId::case2;
  if (text == "case3" || text == "3") return CaseId::case3;
  if (text == "soundwave_linear" || text == "sound") return CaseId::soundwave_linear;
  if (text == "soundwave_shock" || text == "shock") return CaseId::soundwave_shock;
  throw Error(ErrorKind::unknown_case, "unknown case id '" + std::string(text) + "'");
}

SolverKind parse_solver(std::string_view text) {
  if (text == "grinn") return SolverKind::grinn;
  if (text == "fd") return SolverKind::fd;
  if (text == "lt") return SolverKind::lt;
  throw Error(ErrorKind::invalid_config, "unknown solver '" + std::string(text) + "'");
}

namespace {

void require(bool ok, const char* key, const std::string& message) {
  if (!ok) throw Error(ErrorKind::invalid_config, std::string(key) + ": " + message);
}

}  // namespace

void CaseConfig::validate() const {
  require(dimension >= 1 && dimension <= 3, "dimension", "must be 1, 2 or 3");
  require(amplitude > 0.0, "amplitude", "must be > 0");
  require(wavelength_ratio > 0.0, "wavelength_ratio", "must be > 0");
  require(wavelengths_per_axis > 0.0, "wavelengths_per_axis", "must be > 0");
  require(t_end > t_start, "t_end", "must exceed t_start");
  double norm2 = 0.0;
  for (int i = 0; i < 3; ++i) {
    if (i >= dimension) {
      require(direction[i] == 0.0, "direction", "components beyond the dimension must be 0");
    }
    norm2 += direction[i] * direction[i];
  }
  require(std::abs(norm2 - 1.0) < 1e-9, "direction", "must be a unit vector");
  const bool sound = id == CaseId::soundwave_linear || id == CaseId::soundwave_shock;
  require(gravity != sound, "gravity", "must be false exactly for soundwave cases");
  require(fd.grid_points >= 8, "grid_points", "must be >= 8");
  require(fd.courant > 0.0 && fd.courant <= 1.0, "courant",
          "Courant number must satisfy 0 < nu <= 1");
  require(pinn.n_interior >= 1, "n_interior", "must be >= 1");
  require(pinn.n_boundary >= 1, "n_boundary", "must be >= 1");
  require(pinn.n_initial >= 1, "n_initial", "must be >= 1");
  require(!pinn.hidden_layers.empty(), "hidden_layers", "must list at least one layer");
  for (int w : pinn.hidden_layers) require(w >= 1, "hidden_layers", "widths must be >= 1");
  require(pinn.adam_epochs >= 0, "adam_epochs", "must be >= 0");
  require(pinn.learning_rate > 0.0, "learning_rate", "must be > 0");
  require(pinn.lbfgs_iterations >= 0, "lbfgs_iterations", "must be >= 0");
  require(pinn.lbfgs_memory >= 1, "lbfgs_memory", "must be >= 1");
  require(pinn.omega0 > 0.0, "omega0", "must be > 0");
  require(pinn.time_span >= 0.0, "time_span", "must be >= 0");
}

CaseConfig paper_case(CaseId id) {
  CaseConfig c;
  c.id = id;
  // The unit default leaves the network stuck near the uniform background.
  c.pinn.omega0 = 6.0;
  switch (id) {
    case CaseId::case1:
      c.t_end = 3.0;
      c.fd = {1000, 0.5};
      c.pinn.time_span = 100.0;
      break;
    case CaseId::case1_oblique:
      c.dimension = 3;
      c.direction = {std::numbers::sqrt2 / 2.0, std::numbers::sqrt2 / 2.0, 0.0};
      c.t_end = 3.0;
      c.fd = {300, 0.5};
      c.pinn.n_interior = 47000;
      c.pinn.n_boundary = 6300;
      c.pinn.n_initial = 6300;
      break;
    case CaseId::case2:
      c.amplitude = 0.3;
      c.t_end = 2.5;
      c.fd = {2000, 0.6};
      break;
    case CaseId::case3:
      c.wavelength_ratio = 0.8;
      c.t_end = 6.0;
      c.fd = {8000, 0.2};
      break;
    case CaseId::soundwave_linear:
      c.gravity = false;
      c.wavelength_ratio = 1.0;
      c.wavelengths_per_axis = 1.0;
      c.t_end = 3.0;
      c.fd = {1000, 0.5};
      break;
    case CaseId::soundwave_shock:
      c.gravity = false;
      c.amplitude = 0.2;
      c.wavelength_ratio = 1.0;
      c.wavelengths_per_axis = 1.0;
      c.t_end = 3.0;
      c.fd = {2000, 0.5};
      c.pinn.hidden_layers = std::vector<int>(7, 32);
      // The steepening front inherits any error in the initial slice.
      c.pinn.weight_initial = 10.0;
      break;
  }
  return c;
}

CaseConfig paper_case(std::string_view id) { return paper_case(parse_case_id(id)); }

double case_wavelength(const CaseConfig& config, const UnitSystem& units) {
  return config.wavelength_ratio * units.jeans_length();
}

Vec3 case_wavevector(const CaseConfig& config, const UnitSystem& units) {
  const double k = 2.0 * std::numbers::pi / case_wavelength(config, units);
  Vec3 kv{0.0, 0.0, 0.0};
  for (int i = 0; i < config.dimension; ++i) kv[i] = k * config.direction[i];
  return kv;
}

DomainSpec case_domain(const CaseConfig& config, const UnitSystem& units) {
  const double lambda = case_wavelength(config, units);
  DomainSpec d = build_domain(config.dimension, config.wavelengths_per_axis, lambda,
                              config.t_end > 0.0 ? config.t_end : 1.0);
  d.t_start = config.t_start;
  d.t_end = config.t_end;
  for (int i = 0; i < config.dimension; ++i) {
    const double c = std::abs(config.direction[i]);
    if (c > 1e-12) d.extent[i] = config.wavelengths_per_axis * lambda / c;
  }
  d.validate();
  return d;
}

CollocationSet sample_collocation(const DomainSpec& domain, int n_interior, int n_boundary,
                                  int n_initial, std::uint64_t seed) {
  domain.validate();
  if (n_interior < 1 || n_boundary < 1 || n_initial < 1) {
    throw Error(ErrorKind::invalid_config, "collocation counts must be >= 1");
  }
  const int d = domain.dimension;
  CollocationSet set;
  set.dimension = d;
  set.seed = seed;

  CounterRng interior_rng(seed, label_hash("interior"));
  set.interior.resize(static_cast<std::size_t>(n_interior));
  for (auto& p : set.interior) {
    for (int i = 0; i < d; ++i) p.x[i] = interior_rng.uniform(0.0, domain.extent[i]);
    p.t = interior_rng.uniform(domain.t_start, domain.t_end);
  }

  CounterRng boundary_rng(seed, label_hash("boundary"));
  const int pairs = (n_boundary + 1) / 2;
  set.boundary.reserve(static_cast<std::size_t>(pairs));
  for (int axis = 0; axis < d; ++axis) {
    const int count = pairs / d + (axis < pairs % d ? 1 : 0);
    for (int n = 0; n < count; ++n) {
      BoundaryPair bp;
      bp.axis = axis;
      for (int i = 0; i < d; ++i) {
        if (i != axis) bp.p.x[i] = boundary_rng.uniform(0.0, domain.extent[i]);
      }
      bp.p.x[axis] = 0.0;
      bp.p.t = boundary_rng.uniform(domain.t_start, domain.t_end);
      bp.q = bp.p;
      bp.q.x[axis] = domain.extent[axis];
      set.boundary.push_back(bp);
    }
  }

  CounterRng initial_rng(seed, label_hash("initial"));
  set.initial.resize(static_cast<std::size_t>(n_initial));
  for (auto& p : set.initial) {
    for (int i = 0; i < d; ++i) p.x[i] = initial_rng.uniform(0.0, domain.extent[i]);
    p.t = domain.t_start;
  }
  return set;
}

}  // namespace grinn
