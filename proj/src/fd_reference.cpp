#include "grinn/fd_reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "grinn/error.hpp"
#include "grinn/linear_theory.hpp"

namespace grinn {

namespace {

// Visits every cell with the flat indices of its periodic neighbours along
// each active axis: fn(idx, plus, minus).
template <typename Fn>
void for_each_cell(int dimension, const Shape& shape, Fn&& fn) {
  const std::size_t n0 = shape[0];
  const std::size_t n1 = shape[1];
  const std::size_t n2 = shape[2];
  const std::size_t s1 = n0;
  const std::size_t s2 = n0 * n1;
  std::array<std::size_t, 3> plus{};
  std::array<std::size_t, 3> minus{};
  std::size_t idx = 0;
  for (std::size_t i2 = 0; i2 < n2; ++i2) {
    for (std::size_t i1 = 0; i1 < n1; ++i1) {
      for (std::size_t i0 = 0; i0 < n0; ++i0, ++idx) {
        plus[0] = (i0 + 1 == n0) ? idx + 1 - n0 : idx + 1;
        minus[0] = (i0 == 0) ? idx + n0 - 1 : idx - 1;
        if (dimension > 1) {
          plus[1] = (i1 + 1 == n1) ? idx - (n1 - 1) * s1 : idx + s1;
          minus[1] = (i1 == 0) ? idx + (n1 - 1) * s1 : idx - s1;
        }
        if (dimension > 2) {
          plus[2] = (i2 + 1 == n2) ? idx - (n2 - 1) * s2 : idx + s2;
          minus[2] = (i2 == 0) ? idx + (n2 - 1) * s2 : idx - s2;
        }
        fn(idx, plus, minus);
      }
    }
  }
}

std::size_t shape_size(const Shape& s) {
  return static_cast<std::size_t>(s[0]) * s[1] * s[2];
}

}  // namespace

double FieldState::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < dimension; ++a) v *= spacing[a];
  return v;
}

double FieldState::total_mass() const {
  double m = 0.0;
  for (double r : rho) m += r;
  return m * cell_volume();
}

Vec3 FieldState::total_momentum() const {
  Vec3 p{0.0, 0.0, 0.0};
  for (int a = 0; a < dimension; ++a) {
    double s = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) s += rho[i] * v[a][i];
    p[a] = s * cell_volume();
  }
  return p;
}

double FieldState::max_density() const { return *std::max_element(rho.begin(), rho.end()); }

FieldState make_state(int dimension, const Shape& shape, const Vec3& spacing) {
  FieldState s;
  s.dimension = dimension;
  s.shape = {1, 1, 1};
  s.spacing = {1.0, 1.0, 1.0};
  for (int a = 0; a < dimension; ++a) {
    s.shape[a] = shape[a];
    s.spacing[a] = spacing[a];
  }
  const std::size_t n = shape_size(s.shape);
  s.rho.assign(n, 0.0);
  s.phi.assign(n, 0.0);
  for (int a = 0; a < 3; ++a) {
    s.v[a].assign(a < dimension ? n : 0, 0.0);
    s.g[a].assign(a < dimension ? n : 0, 0.0);
  }
  return s;
}

std::array<std::vector<double>, 3> gravitational_field(std::span<const double> phi,
                                                       int dimension, const Shape& shape,
                                                       const Vec3& spacing) {
  std::array<std::vector<double>, 3> g;
  for (int a = 0; a < dimension; ++a) g[a].assign(phi.size(), 0.0);
  std::array<double, 3> inv2h{};
  for (int a = 0; a < dimension; ++a) inv2h[a] = 0.5 / spacing[a];
  for_each_cell(dimension, shape, [&](std::size_t idx, const auto& p, const auto& m) {
    for (int a = 0; a < dimension; ++a) g[a][idx] = -(phi[p[a]] - phi[m[a]]) * inv2h[a];
  });
  return g;
}

std::vector<double> discrete_laplacian(std::span<const double> f, int dimension,
                                       const Shape& shape, const Vec3& spacing) {
  std::vector<double> out(f.size(), 0.0);
  std::array<double, 3> invh2{};
  for (int a = 0; a < dimension; ++a) invh2[a] = 1.0 / (spacing[a] * spacing[a]);
  for_each_cell(dimension, shape, [&](std::size_t idx, const auto& p, const auto& m) {
    double s = 0.0;
    for (int a = 0; a < dimension; ++a) s += (f[p[a]] - 2.0 * f[idx] + f[m[a]]) * invh2[a];
    out[idx] = s;
  });
  return out;
}

void update_gravity(FieldState& state, const FdSettings& settings, const PoissonSolver* solver) {
  if (!settings.gravity) {
    std::fill(state.phi.begin(), state.phi.end(), 0.0);
    for (int a = 0; a < state.dimension; ++a) std::fill(state.g[a].begin(), state.g[a].end(), 0.0);
    return;
  }
  if (solver) {
    solver->solve(state.rho, state.phi, settings.units.four_pi_G);
  } else {
    state.phi = solve_poisson(state.rho, state.dimension, state.shape, state.spacing,
                              settings.units);
  }
  state.g = gravitational_field(state.phi, state.dimension, state.shape, state.spacing);
}

FieldState init_grid(const CaseConfig& config, const UnitSystem& units) {
  const DomainSpec domain = case_domain(config, units);
  const WaveMode mode = case_mode(config, units);
  const int d = config.dimension;
  Shape shape{1, 1, 1};
  Vec3 spacing{1.0, 1.0, 1.0};
  for (int a = 0; a < d; ++a) {
    shape[a] = config.fd.grid_points;
    spacing[a] = domain.extent[a] / config.fd.grid_points;
  }
  FieldState s = make_state(d, shape, spacing);
  s.t = config.t_start;
  std::size_t idx = 0;
  for (int i2 = 0; i2 < shape[2]; ++i2) {
    for (int i1 = 0; i1 < shape[1]; ++i1) {
      for (int i0 = 0; i0 < shape[0]; ++i0, ++idx) {
        Vec3 x{0.0, 0.0, 0.0};
        const int ii[3] = {i0, i1, i2};
        for (int a = 0; a < d; ++a) x[a] = s.coordinate(a, ii[a]);
        const ModeValues mv = initial_condition(mode, x);
        s.rho[idx] = mv.rho;
        for (int a = 0; a < d; ++a) s.v[a][idx] = mv.v[a];
      }
    }
  }
  update_gravity(s, FdSettings{config.fd.courant, config.gravity, units});
  return s;
}

double courant_dt(const FieldState& state, double courant, const UnitSystem& units) {
  if (!(courant > 0.0) || courant > 1.0) {
    throw Error(ErrorKind::invalid_config, "courant: Courant number must satisfy 0 < nu <= 1");
  }
  double vmax = 0.0;
  for (int a = 0; a < state.dimension; ++a) {
    for (double u : state.v[a]) {
      if (!std::isfinite(u)) throw Error(ErrorKind::solver_failure, "non-finite velocity");
      vmax = std::max(vmax, std::abs(u));
    }
  }
  double hmin = std::numeric_limits<double>::infinity();
  for (int a = 0; a < state.dimension; ++a) hmin = std::min(hmin, state.spacing[a]);
  return courant * hmin / (units.sound_speed + vmax);
}

FieldState lax_step(const FieldState& state, double dt, const FdSettings& settings,
                    const PoissonSolver* solver, long step_index) {
  const int d = state.dimension;
  const std::size_t n = state.size();
  const double cs2 = settings.units.sound_speed * settings.units.sound_speed;
  const double avg = 1.0 / (2.0 * d);

  // Conserved variables: rho and momentum density m_i = rho v_i.
  std::array<std::vector<double>, 3> mom;
  for (int a = 0; a < d; ++a) {
    mom[a].resize(n);
    for (std::size_t i = 0; i < n; ++i) mom[a][i] = state.rho[i] * state.v[a][i];
  }
  std::array<double, 3> k{};  // dt / (2 dx)
  for (int a = 0; a < d; ++a) k[a] = dt / (2.0 * state.spacing[a]);

  FieldState next = state;
  next.t = state.t + dt;
  std::array<std::vector<double>, 3> next_mom;
  for (int a = 0; a < d; ++a) next_mom[a].resize(n);

  const auto& rho = state.rho;
  const auto& v = state.v;
  for_each_cell(d, state.shape, [&](std::size_t c, const auto& p, const auto& m) {
    double r_avg = 0.0;
    double r_div = 0.0;
    for (int a = 0; a < d; ++a) {
      r_avg += rho[p[a]] + rho[m[a]];
      r_div += k[a] * (mom[a][p[a]] - mom[a][m[a]]);
    }
    next.rho[c] = avg * r_avg - r_div;
    for (int i = 0; i < d; ++i) {
      double q_avg = 0.0;
      double q_div = 0.0;
      for (int a = 0; a < d; ++a) {
        q_avg += mom[i][p[a]] + mom[i][m[a]];
        q_div += k[a] * (mom[i][p[a]] * v[a][p[a]] - mom[i][m[a]] * v[a][m[a]]);
      }
      const double pressure = cs2 * k[i] * (rho[p[i]] - rho[m[i]]);
      next_mom[i][c] = avg * q_avg - q_div - pressure + dt * rho[c] * state.g[i][c];
    }
  });

  for (std::size_t c = 0; c < n; ++c) {
    if (!(next.rho[c] > 0.0)) {
      throw Error(ErrorKind::positivity_failure,
                  "density became non-positive at step " + std::to_string(step_index) +
                      " (t = " + std::to_string(next.t) + ")");
    }
  }
  for (int a = 0; a < d; ++a) {
    for (std::size_t c = 0; c < n; ++c) next.v[a][c] = next_mom[a][c] / next.rho[c];
  }
  update_gravity(next, settings, solver);
  return next;
}

Trajectory evolve_state(FieldState initial, const FdSettings& settings,
                        std::vector<double> output_times) {
  std::sort(output_times.begin(), output_times.end());
  Trajectory traj;
  traj.courant = settings.courant;

  std::unique_ptr<PoissonSolver> solver;
  if (settings.gravity) {
    solver = std::make_unique<PoissonSolver>(initial.dimension, initial.shape, initial.spacing);
  }

  FieldState state = std::move(initial);
  traj.snapshots.push_back(state);
  long steps = 0;
  for (double target : output_times) {
    if (target < state.t) {
      throw Error(ErrorKind::invalid_config, "output times must not precede the start time");
    }
    if (target == state.t) continue;  // already recorded
    // Relative landing tolerance so the final shortened step is not skipped.
    const double eps = 1e-12 * std::max(1.0, std::abs(target));
    while (state.t < target - eps) {
      double dt = courant_dt(state, settings.courant, settings.units);
      bool land = false;
      if (state.t + dt >= target - eps) {
        dt = target - state.t;
        land = true;
      }
      state = lax_step(state, dt, settings, solver.get(), steps);
      ++steps;
      if (land) state.t = target;
    }
    traj.snapshots.push_back(state);
  }
  traj.total_steps = steps;
  return traj;
}

Trajectory evolve(const CaseConfig& config, std::vector<double> output_times,
                  const UnitSystem& units) {
  FieldState init = init_grid(config, units);
  for (double t : output_times) {
    if (t < config.t_start) {
      throw Error(ErrorKind::invalid_config, "output time precedes the case start time");
    }
  }
  Trajectory traj =
      evolve_state(std::move(init), FdSettings{config.fd.courant, config.gravity, units},
                   std::move(output_times));
  traj.config = config;
  return traj;
}

double interpolate(const FieldState& state, std::span<const double> field, const Vec3& x) {
  // Cell centers sit at (i + 1/2) dx; wrap periodically.
  std::array<int, 3> lo{0, 0, 0};
  std::array<double, 3> w{0.0, 0.0, 0.0};
  for (int a = 0; a < state.dimension; ++a) {
    const double s = x[a] / state.spacing[a] - 0.5;
    const double f = std::floor(s);
    w[a] = s - f;
    const int n = state.shape[a];
    lo[a] = ((static_cast<long>(f) % n) + n) % n;
  }
  double out = 0.0;
  const int corners = 1 << state.dimension;
  for (int c = 0; c < corners; ++c) {
    std::array<int, 3> ii{0, 0, 0};
    double wt = 1.0;
    for (int a = 0; a < state.dimension; ++a) {
      const bool up = (c >> a) & 1;
      ii[a] = up ? (lo[a] + 1) % state.shape[a] : lo[a];
      wt *= up ? w[a] : 1.0 - w[a];
    }
    out += wt * field[state.index(ii[0], ii[1], ii[2])];
  }
  return out;
}

}  // namespace grinn
