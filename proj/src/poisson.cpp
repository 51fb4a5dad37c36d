#include <fftw3.h>

#include <cmath>
#include <numbers>

#include "grinn/error.hpp"
#include "grinn/fd_reference.hpp"

namespace grinn {

struct PoissonSolver::Impl {
  int dimension = 1;
  Shape shape{1, 1, 1};
  std::size_t real_size = 0;
  std::size_t complex_size = 0;
  double* real = nullptr;
  fftw_complex* spectrum = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  // Inverse discrete-Laplacian eigenvalue per retained spectral index;
  // zero for the k = 0 mode.
  std::vector<double> inverse_eigen;

  ~Impl() {
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
    if (real) fftw_free(real);
    if (spectrum) fftw_free(spectrum);
  }
};

PoissonSolver::PoissonSolver(int dimension, const Shape& shape, const Vec3& spacing)
    : impl_(std::make_unique<Impl>()) {
  if (dimension < 1 || dimension > 3) {
    throw Error(ErrorKind::invalid_domain, "Poisson solver dimension must be 1..3");
  }
  auto& m = *impl_;
  m.dimension = dimension;
  m.shape = {1, 1, 1};
  for (int a = 0; a < dimension; ++a) {
    if (shape[a] < 2) throw Error(ErrorKind::invalid_domain, "Poisson grid needs N >= 2");
    m.shape[a] = shape[a];
  }
  const int half0 = m.shape[0] / 2 + 1;
  m.real_size = static_cast<std::size_t>(m.shape[0]) * m.shape[1] * m.shape[2];
  m.complex_size = static_cast<std::size_t>(half0) * m.shape[1] * m.shape[2];
  m.real = fftw_alloc_real(m.real_size);
  m.spectrum = fftw_alloc_complex(m.complex_size);

  // FFTW is row-major with the last dimension contiguous: reverse our axes.
  int n[3];
  for (int a = 0; a < dimension; ++a) n[a] = m.shape[dimension - 1 - a];
  m.forward = fftw_plan_dft_r2c(dimension, n, m.real, m.spectrum, FFTW_ESTIMATE);
  m.backward = fftw_plan_dft_c2r(dimension, n, m.spectrum, m.real, FFTW_ESTIMATE);
  if (!m.forward || !m.backward) throw Error(ErrorKind::solver_failure, "FFTW planning failed");

  std::array<std::vector<double>, 3> lambda;
  for (int a = 0; a < 3; ++a) {
    lambda[a].assign(static_cast<std::size_t>(m.shape[a]), 0.0);
    if (a >= dimension) continue;
    const double h2 = spacing[a] * spacing[a];
    for (int j = 0; j < m.shape[a]; ++j) {
      lambda[a][j] = 2.0 * (std::cos(2.0 * std::numbers::pi * j / m.shape[a]) - 1.0) / h2;
    }
  }
  m.inverse_eigen.assign(m.complex_size, 0.0);
  std::size_t idx = 0;
  for (int j2 = 0; j2 < m.shape[2]; ++j2) {
    for (int j1 = 0; j1 < m.shape[1]; ++j1) {
      for (int j0 = 0; j0 < half0; ++j0, ++idx) {
        const double eig = lambda[0][j0] + lambda[1][j1] + lambda[2][j2];
        m.inverse_eigen[idx] = (j0 == 0 && j1 == 0 && j2 == 0) ? 0.0 : 1.0 / eig;
      }
    }
  }
}

PoissonSolver::~PoissonSolver() = default;
PoissonSolver::PoissonSolver(PoissonSolver&&) noexcept = default;
PoissonSolver& PoissonSolver::operator=(PoissonSolver&&) noexcept = default;

void PoissonSolver::solve(std::span<const double> rho, std::span<double> phi,
                          double four_pi_G) const {
  auto& m = *impl_;
  if (rho.size() != m.real_size || phi.size() != m.real_size) {
    throw Error(ErrorKind::shape, "Poisson input does not match the planned grid");
  }
  std::copy(rho.begin(), rho.end(), m.real);
  fftw_execute(m.forward);
  // phi_k = 4piG rho_k / lambda_k, i.e. 2piG rho_k / sum_i (cos(k_i dx_i) - 1) / dx_i^2.
  const double scale = four_pi_G / static_cast<double>(m.real_size);
  for (std::size_t i = 0; i < m.complex_size; ++i) {
    const double f = scale * m.inverse_eigen[i];
    m.spectrum[i][0] *= f;
    m.spectrum[i][1] *= f;
  }
  fftw_execute(m.backward);
  std::copy(m.real, m.real + m.real_size, phi.begin());
}

std::vector<double> solve_poisson(std::span<const double> rho, int dimension, const Shape& shape,
                                  const Vec3& spacing, const UnitSystem& units) {
  PoissonSolver solver(dimension, shape, spacing);
  std::vector<double> phi(rho.size());
  solver.solve(rho, phi, units.four_pi_G);
  return phi;
}

}  // namespace grinn
