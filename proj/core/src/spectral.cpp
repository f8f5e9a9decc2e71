#include "nar/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <mutex>
#include <stdexcept>
#include <string>

namespace nar {

std::shared_ptr<const Grid2D> Grid2D::make(int nx, int ny, double Lx, double Ly) {
  if (nx < 8 || ny < 8 || nx % 2 != 0 || ny % 2 != 0)
    throw std::invalid_argument("grid: nx and ny must be even and >= 8, got " +
                                std::to_string(nx) + " x " + std::to_string(ny));
  if (!(Lx > 0.0) || !(Ly > 0.0))
    throw std::invalid_argument("grid: domain lengths must be positive");
  auto g = std::make_shared<Grid2D>();
  g->nx = nx;
  g->ny = ny;
  g->Lx = Lx;
  g->Ly = Ly;
  g->dx = Lx / nx;
  g->dy = Ly / ny;
  g->kx.resize(nx);
  g->ky.resize(ny);
  const double fx = 2.0 * std::numbers::pi / Lx;
  const double fy = 2.0 * std::numbers::pi / Ly;
  for (int i = 0; i < nx; ++i) g->kx[i] = fx * (i < nx / 2 ? i : i - nx);
  for (int j = 0; j < ny; ++j) g->ky[j] = fy * (j < ny / 2 ? j : j - ny);
  return g;
}

namespace {

void check_finite(const ScalarField2D& f, const char* where) {
  const double* p = f.data();
  const int n = f.size();
  for (int k = 0; k < n; ++k)
    if (!std::isfinite(p[k]))
      throw std::domain_error(std::string(where) + ": non-finite value in input field");
}

void check_grid(const SpectralOps& ops, const ScalarField2D& f, const char* where) {
  if (f.empty() || !f.grid().same_as(ops.grid()))
    throw std::invalid_argument(std::string(where) + ": field grid does not match operator grid");
}

// compensated (Kahan) summation; integral magnitudes up to ~1e2 with 1e5 terms
// need better than naive rounding to hit 1e-12-scale constraint tolerances
struct KahanSum {
  double s = 0.0, c = 0.0;
  void add(double x) {
    double y = x - c;
    double t = s + y;
    c = (t - s) - y;
    s = t;
  }
};

}  // namespace

struct SpectralOps::Impl {
  std::shared_ptr<const Grid2D> grid;
  int nxh;  // r2c reduced extent, nx/2 + 1
  double* rbuf = nullptr;
  fftw_complex* cbuf = nullptr;
  fftw_plan fwd = nullptr, bwd = nullptr;
  mutable std::mutex mu;  // plans share the work buffers

  explicit Impl(std::shared_ptr<const Grid2D> g) : grid(std::move(g)) {
    const int nx = grid->nx, ny = grid->ny;
    nxh = nx / 2 + 1;
    rbuf = fftw_alloc_real(static_cast<size_t>(nx) * ny);
    cbuf = fftw_alloc_complex(static_cast<size_t>(nxh) * ny);
    // ESTIMATE keeps plan choice deterministic so reruns are bit-identical
    fwd = fftw_plan_dft_r2c_2d(ny, nx, rbuf, cbuf, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_c2r_2d(ny, nx, cbuf, rbuf, FFTW_ESTIMATE);
    if (!fwd || !bwd) throw std::runtime_error("spectral: FFT plan creation failed");
  }
  ~Impl() {
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
    fftw_free(rbuf);
    fftw_free(cbuf);
  }

  void load(const ScalarField2D& f) {
    std::memcpy(rbuf, f.data(), sizeof(double) * grid->size());
  }
  void store(ScalarField2D& f) {
    const double inv = 1.0 / grid->size();
    double* out = f.data();
    for (int k = 0; k < grid->size(); ++k) out[k] = rbuf[k] * inv;
  }
};

SpectralOps::SpectralOps(std::shared_ptr<const Grid2D> g) : impl_(std::make_unique<Impl>(std::move(g))) {}
SpectralOps::~SpectralOps() = default;

const Grid2D& SpectralOps::grid() const { return *impl_->grid; }
const std::shared_ptr<const Grid2D>& SpectralOps::grid_ptr() const { return impl_->grid; }

ScalarField2D SpectralOps::laplacian(const ScalarField2D& f) const {
  check_grid(*this, f, "laplacian");
  check_finite(f, "laplacian");
  auto& im = *impl_;
  std::lock_guard<std::mutex> lock(im.mu);
  const Grid2D& g = *im.grid;
  im.load(f);
  fftw_execute(im.fwd);
  for (int j = 0; j < g.ny; ++j) {
    const double ky2 = g.ky[j] * g.ky[j];
    for (int i = 0; i < im.nxh; ++i) {
      const double k2 = g.kx[i] * g.kx[i] + ky2;
      fftw_complex& c = im.cbuf[static_cast<size_t>(j) * im.nxh + i];
      c[0] *= -k2;
      c[1] *= -k2;
    }
  }
  fftw_execute(im.bwd);
  ScalarField2D out(im.grid);
  im.store(out);
  return out;
}

ScalarField2D SpectralOps::solve_modified_helmholtz(double a, double b,
                                                    const ScalarField2D& rhs) const {
  check_grid(*this, rhs, "solve_modified_helmholtz");
  check_finite(rhs, "solve_modified_helmholtz");
  if (!(a > 0.0))
    throw std::invalid_argument("solve_modified_helmholtz: coefficient a must be positive");
  if (b < 0.0)
    throw std::invalid_argument("solve_modified_helmholtz: coefficient b must be nonnegative");
  auto& im = *impl_;
  std::lock_guard<std::mutex> lock(im.mu);
  const Grid2D& g = *im.grid;
  im.load(rhs);
  fftw_execute(im.fwd);
  for (int j = 0; j < g.ny; ++j) {
    const double ky2 = g.ky[j] * g.ky[j];
    for (int i = 0; i < im.nxh; ++i) {
      const double k2 = g.kx[i] * g.kx[i] + ky2;
      const double inv = 1.0 / (a + b * k2);
      fftw_complex& c = im.cbuf[static_cast<size_t>(j) * im.nxh + i];
      c[0] *= inv;
      c[1] *= inv;
    }
  }
  fftw_execute(im.bwd);
  ScalarField2D out(im.grid);
  im.store(out);
  return out;
}

double SpectralOps::integrate(const ScalarField2D& f) const {
  check_grid(*this, f, "integrate");
  check_finite(f, "integrate");
  KahanSum s;
  const double* p = f.data();
  const int n = f.size();
  for (int k = 0; k < n; ++k) s.add(p[k]);
  return s.s * impl_->grid->cell_area();
}

double SpectralOps::inner_product(const ScalarField2D& f, const ScalarField2D& g) const {
  check_grid(*this, f, "inner_product");
  check_grid(*this, g, "inner_product");
  check_finite(f, "inner_product");
  check_finite(g, "inner_product");
  KahanSum s;
  const double* a = f.data();
  const double* b = g.data();
  const int n = f.size();
  for (int k = 0; k < n; ++k) s.add(a[k] * b[k]);
  return s.s * impl_->grid->cell_area();
}

double SpectralOps::grad_inner(const ScalarField2D& f, const ScalarField2D& g) const {
  check_grid(*this, f, "grad_inner");
  check_grid(*this, g, "grad_inner");
  check_finite(f, "grad_inner");
  check_finite(g, "grad_inner");
  auto& im = *impl_;
  std::lock_guard<std::mutex> lock(im.mu);
  const Grid2D& gr = *im.grid;
  std::vector<double> fhat(2 * static_cast<size_t>(im.nxh) * gr.ny);
  im.load(f);
  fftw_execute(im.fwd);
  std::memcpy(fhat.data(), im.cbuf, sizeof(double) * fhat.size());
  im.load(g);
  fftw_execute(im.fwd);
  // sum over the full spectrum; interior r2c columns stand for a conjugate pair
  KahanSum s;
  for (int j = 0; j < gr.ny; ++j) {
    const double ky2 = gr.ky[j] * gr.ky[j];
    for (int i = 0; i < im.nxh; ++i) {
      const double k2 = gr.kx[i] * gr.kx[i] + ky2;
      const size_t idx = static_cast<size_t>(j) * im.nxh + i;
      const double w = (i == 0 || i == gr.nx / 2) ? 1.0 : 2.0;
      s.add(w * k2 *
            (fhat[2 * idx] * im.cbuf[idx][0] + fhat[2 * idx + 1] * im.cbuf[idx][1]));
    }
  }
  const double norm = gr.area() / (static_cast<double>(gr.size()) * gr.size());
  return s.s * norm;
}

ScalarField2D SpectralOps::dealias_23(const ScalarField2D& f) const {
  check_grid(*this, f, "dealias_23");
  check_finite(f, "dealias_23");
  auto& im = *impl_;
  std::lock_guard<std::mutex> lock(im.mu);
  const Grid2D& g = *im.grid;
  im.load(f);
  fftw_execute(im.fwd);
  const int cx = g.nx / 3, cy = g.ny / 3;
  for (int j = 0; j < g.ny; ++j) {
    const int jj = j < g.ny / 2 ? j : g.ny - j;
    for (int i = 0; i < im.nxh; ++i) {
      if (i > cx || jj > cy) {
        fftw_complex& c = im.cbuf[static_cast<size_t>(j) * im.nxh + i];
        c[0] = 0.0;
        c[1] = 0.0;
      }
    }
  }
  fftw_execute(im.bwd);
  ScalarField2D out(im.grid);
  im.store(out);
  return out;
}

}  // namespace nar
