#pragma once

#include <algorithm>
#include <cstddef>
#include <memory>
#include <numbers>
#include <vector>

namespace nar {

// Uniform periodic grid on [-Lx/2, Lx/2) x [-Ly/2, Ly/2).
// Wavenumbers are stored in FFT order: {0, 1, ..., n/2-1, -n/2, ..., -1} * (2 pi / L).
struct Grid2D {
  int nx = 0, ny = 0;
  double Lx = 0.0, Ly = 0.0;
  double dx = 0.0, dy = 0.0;
  std::vector<double> kx, ky;

  // nx, ny must be even and >= 8; throws std::invalid_argument otherwise.
  static std::shared_ptr<const Grid2D> make(int nx, int ny,
                                            double Lx = 2.0 * std::numbers::pi,
                                            double Ly = 2.0 * std::numbers::pi);

  double x(int i) const { return -0.5 * Lx + i * dx; }
  double y(int j) const { return -0.5 * Ly + j * dy; }
  double area() const { return Lx * Ly; }
  double cell_area() const { return dx * dy; }
  int size() const { return nx * ny; }
  bool same_as(const Grid2D& o) const {
    return nx == o.nx && ny == o.ny && Lx == o.Lx && Ly == o.Ly;
  }
};

// Real scalar field sampled at grid points, row-major with y as the outer index.
class ScalarField2D {
 public:
  ScalarField2D() = default;
  explicit ScalarField2D(std::shared_ptr<const Grid2D> g)
      : grid_(std::move(g)), v_(grid_ ? grid_->size() : 0, 0.0) {}

  const Grid2D& grid() const { return *grid_; }
  const std::shared_ptr<const Grid2D>& grid_ptr() const { return grid_; }
  bool empty() const { return v_.empty(); }
  int size() const { return static_cast<int>(v_.size()); }

  double& operator[](int k) { return v_[k]; }
  double operator[](int k) const { return v_[k]; }
  double& at(int i, int j) { return v_[static_cast<size_t>(j) * grid_->nx + i]; }
  double at(int i, int j) const { return v_[static_cast<size_t>(j) * grid_->nx + i]; }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }

  void fill(double c) { std::fill(v_.begin(), v_.end(), c); }
  // this += a * f
  void add_scaled(const ScalarField2D& f, double a) {
    for (size_t k = 0; k < v_.size(); ++k) v_[k] += a * f.v_[k];
  }
  void scale(double a) {
    for (double& x : v_) x *= a;
  }

 private:
  std::shared_ptr<const Grid2D> grid_;
  std::vector<double> v_;
};

inline bool same_grid(const ScalarField2D& a, const ScalarField2D& b) {
  return a.grid().same_as(b.grid());
}

}  // namespace nar
