#pragma once

#include <atomic>

#include <Eigen/Dense>

#include "teven/linearize.hpp"

namespace teven {

/// Which arithmetic the spectral transform K(zeta) lives in: it stays real
/// for real or purely imaginary shifts.
enum class ShiftClass { real_axis, imaginary_axis, general };

ShiftClass classify_shift(Complex zeta, double tol = 1e-12);

/// One n x n pivoted factorization of P(zeta), powering every solve with
/// L_P(+-zeta): P(-zeta) = P(zeta)^T reuses the same factors transposed.
/// Immutable after construction; concurrent solves are safe.
class ShiftedFactorization {
public:
  /// Throws ShiftOnSpectrumError when P(zeta) is singular to working
  /// precision (smallest pivot below kPivotTolFactor*eps*||P(zeta)||_inf).
  /// The shift is snapped onto its axis for the real/imaginary classes.
  ShiftedFactorization(const EvenLinearization& lin, Complex zeta);

  Complex shift() const { return zeta_; }
  ShiftClass shift_class() const { return class_; }
  const EvenLinearization& linearization() const { return *lin_; }

  /// y with L_P(sigma) y = x, sigma = zeta (transposed=false) or -zeta
  /// (transposed=true, L_P(zeta)^T = L_P(-zeta)). Reduced to recurrences
  /// plus one triangular solve pair with the stored factors.
  Eigen::VectorXcd solve_l(const Eigen::VectorXcd& x, bool transposed) const;
  /// Real fast path; only valid for a real-axis shift.
  Eigen::VectorXd solve_l(const Eigen::VectorXd& x, bool transposed) const;

  /// K(zeta) v = L_P(zeta)^{-T} X L_P(zeta)^{-1} X v.
  Eigen::VectorXcd apply_k(const Eigen::VectorXd& v) const;
  /// Real result for real/imaginary shifts: the imaginary part must fall
  /// below 1e-12 of the norm and is truncated.
  Eigen::VectorXd apply_k_real(const Eigen::VectorXd& v) const;

  /// Process-wide count of n x n factorizations (shift-reuse accounting).
  static long total_factorizations() { return counter_.load(); }

private:
  template <typename Scalar>
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> solve_l_impl(
      Scalar sigma, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x,
      bool transposed) const;

  const EvenLinearization* lin_;
  Complex zeta_;
  ShiftClass class_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_real_;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu_cplx_;

  inline static std::atomic<long> counter_{0};
};

}  // namespace teven
