#pragma once

// Shared helpers for the test suites: reproducible random T-even problems,
// dense pencil oracles, and multiset matching for complex spectra.

#include <algorithm>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "teven/densekernels.hpp"
#include "teven/linearize.hpp"
#include "teven/matpoly.hpp"

namespace testsupport {

using teven::Complex;

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

inline Eigen::MatrixXd random_matrix(Eigen::Index n, std::mt19937_64& rng) {
  Eigen::MatrixXd A(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) A(i, j) = uniform(rng);
  return A;
}

/// Random T-even polynomial: symmetric even / skew-symmetric odd coefficients.
/// For an odd degree the (skew) leading coefficient is singular when n is odd,
/// so callers wanting invertible leading coefficients should use even n.
inline teven::MatrixPolynomial random_t_even(Eigen::Index n, int deg,
                                             std::mt19937_64& rng) {
  std::vector<Eigen::MatrixXd> coeffs;
  for (int k = 0; k <= deg; ++k) {
    const Eigen::MatrixXd A = random_matrix(n, rng);
    if (k % 2 == 0) {
      coeffs.push_back(0.5 * (A + A.transpose()));
    } else {
      coeffs.push_back(0.5 * (A - A.transpose()));
    }
  }
  return teven::MatrixPolynomial(std::move(coeffs));
}

inline Eigen::MatrixXcd dense_pencil(const teven::EvenLinearization& lin, Complex z) {
  const auto [X, Y] = lin.materialize();
  return z * X.cast<Complex>() + Y.cast<Complex>();
}

/// ||G^2 V T - V_{m+1} Hbar||_F for a materialization-checkable instance.
inline double decomposition_residual(const Eigen::MatrixXd& Gsq,
                                     const Eigen::MatrixXd& V,
                                     const Eigen::MatrixXd& T,
                                     const Eigen::MatrixXd& Hbar) {
  const int m = static_cast<int>(T.cols());
  return (Gsq * V.leftCols(m) * T - V.leftCols(m + 1) * Hbar).norm();
}

inline double residual_scale(const Eigen::MatrixXd& Gsq, const Eigen::MatrixXd& T,
                             const Eigen::MatrixXd& Hbar) {
  return Gsq.norm() * T.norm() + Hbar.norm();
}

inline Eigen::MatrixXd materialize_gsq(const teven::EvenLinearization& lin) {
  const auto [X, Y] = lin.materialize();
  const Eigen::MatrixXd G = teven::dense::lu_solve(X, Y);
  return (G * G).eval();
}

/// Greedy nearest matching of two complex multisets; returns the largest
/// relative deviation (infinity when the sizes differ).
inline double match_multisets(std::vector<Complex> a, std::vector<Complex> b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  std::vector<bool> used(b.size(), false);
  for (const Complex& x : a) {
    double best = std::numeric_limits<double>::infinity();
    size_t best_j = 0;
    for (size_t j = 0; j < b.size(); ++j) {
      if (used[j]) continue;
      const double d = std::abs(x - b[j]) / std::max({std::abs(x), std::abs(b[j]), 1e-30});
      if (d < best) {
        best = d;
        best_j = j;
      }
    }
    used[best_j] = true;
    worst = std::max(worst, best);
  }
  return worst;
}

/// Finite eigenvalues of the square pencil H y = theta T y.
inline std::vector<Complex> pencil_eigs(const Eigen::MatrixXd& T,
                                        const Eigen::MatrixXd& H) {
  const auto gs = teven::dense::qz(T, H);
  std::vector<Complex> out;
  for (Complex t : gs.eigenvalues()) {
    if (std::isfinite(t.real()) && std::isfinite(t.imag())) out.push_back(t);
  }
  return out;
}

}  // namespace testsupport
