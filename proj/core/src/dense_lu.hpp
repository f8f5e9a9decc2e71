#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace nar::detail {

struct SingularMatrix : std::runtime_error {
  int row;  // original row index of the dead pivot
  SingularMatrix(const std::string& msg, int r) : std::runtime_error(msg), row(r) {}
};

// dense LU with partial pivoting for the small multiplier systems;
// a is row-major n x n and is overwritten, returns the permutation
inline std::vector<int> lu_factor(std::vector<double>& a, int n) {
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  for (int c = 0; c < n; ++c) {
    int piv = c;
    double best = std::abs(a[static_cast<size_t>(c) * n + c]);
    for (int r = c + 1; r < n; ++r) {
      const double v = std::abs(a[static_cast<size_t>(r) * n + c]);
      if (v > best) {
        best = v;
        piv = r;
      }
    }
    if (!(best > 0.0) || !std::isfinite(best))
      throw SingularMatrix(
          "multiplier system is singular at row " + std::to_string(perm[piv]), perm[piv]);
    if (piv != c) {
      for (int k = 0; k < n; ++k)
        std::swap(a[static_cast<size_t>(piv) * n + k], a[static_cast<size_t>(c) * n + k]);
      std::swap(perm[piv], perm[c]);
    }
    const double d = a[static_cast<size_t>(c) * n + c];
    for (int r = c + 1; r < n; ++r) {
      const double f = a[static_cast<size_t>(r) * n + c] / d;
      a[static_cast<size_t>(r) * n + c] = f;
      for (int k = c + 1; k < n; ++k)
        a[static_cast<size_t>(r) * n + k] -= f * a[static_cast<size_t>(c) * n + k];
    }
  }
  return perm;
}

inline void lu_solve(const std::vector<double>& lu, const std::vector<int>& perm, int n,
                     const std::vector<double>& b, std::vector<double>& x) {
  x.resize(n);
  for (int i = 0; i < n; ++i) x[i] = b[perm[i]];
  for (int i = 1; i < n; ++i)
    for (int j = 0; j < i; ++j) x[i] -= lu[static_cast<size_t>(i) * n + j] * x[j];
  for (int i = n - 1; i >= 0; --i) {
    for (int j = i + 1; j < n; ++j) x[i] -= lu[static_cast<size_t>(i) * n + j] * x[j];
    x[i] /= lu[static_cast<size_t>(i) * n + i];
  }
}

// convenience: solve a x = b destroying a
inline std::vector<double> dense_solve(std::vector<double> a, int n, std::vector<double> b) {
  const auto perm = lu_factor(a, n);
  std::vector<double> x;
  lu_solve(a, perm, n, b, x);
  return x;
}

}  // namespace nar::detail
