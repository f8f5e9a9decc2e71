#pragma once

#include <memory>

#include "nar/grid.hpp"

namespace nar {

// Fourier pseudo-spectral operators on a periodic grid.
// All derivative operators are exact on resolved modes; quadrature is the
// rectangle rule, which is spectrally accurate for smooth periodic data.
class SpectralOps {
 public:
  explicit SpectralOps(std::shared_ptr<const Grid2D> g);
  ~SpectralOps();
  SpectralOps(const SpectralOps&) = delete;
  SpectralOps& operator=(const SpectralOps&) = delete;

  const Grid2D& grid() const;
  const std::shared_ptr<const Grid2D>& grid_ptr() const;

  ScalarField2D laplacian(const ScalarField2D& f) const;

  // Solves (a - b lap) u = rhs with a > 0, b >= 0; diagonal in Fourier space,
  // so the discrete equation is satisfied to rounding.
  ScalarField2D solve_modified_helmholtz(double a, double b,
                                         const ScalarField2D& rhs) const;

  double integrate(const ScalarField2D& f) const;
  double inner_product(const ScalarField2D& f, const ScalarField2D& g) const;

  // integral of grad f . grad g, evaluated in Fourier space (Parseval)
  double grad_inner(const ScalarField2D& f, const ScalarField2D& g) const;
  double grad_norm_sq(const ScalarField2D& f) const { return grad_inner(f, f); }

  // 2/3-rule projection: zero all modes above two thirds of Nyquist
  ScalarField2D dealias_23(const ScalarField2D& f) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace nar
