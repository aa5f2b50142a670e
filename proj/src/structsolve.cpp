#include "teven/structsolve.hpp"

#include <cassert>
#include <cmath>
#include <limits>

#include "teven/densekernels.hpp"

namespace teven {

namespace {
constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kImagTruncationTol = 1e-12;
}  // namespace

ShiftClass classify_shift(Complex zeta, double tol) {
  const double mag = std::abs(zeta);
  if (std::abs(zeta.imag()) <= tol * mag) return ShiftClass::real_axis;
  if (std::abs(zeta.real()) <= tol * mag) return ShiftClass::imaginary_axis;
  return ShiftClass::general;
}

ShiftedFactorization::ShiftedFactorization(const EvenLinearization& lin, Complex zeta)
    : lin_(&lin), class_(classify_shift(zeta)) {
  // snap onto the axis so the real/imaginary algebra is exact
  if (class_ == ShiftClass::real_axis) zeta = Complex(zeta.real(), 0.0);
  if (class_ == ShiftClass::imaginary_axis) zeta = Complex(0.0, zeta.imag());
  zeta_ = zeta;

  const auto& P = lin.polynomial();
  if (class_ == ShiftClass::real_axis) {
    const Eigen::MatrixXd pz = evaluate(P, zeta.real());
    lu_real_.compute(pz);
    const double scale = std::max(pz.lpNorm<Eigen::Infinity>(), 1e-300);
    if (dense::min_pivot(lu_real_) <= dense::kPivotTolFactor * kEps * scale) {
      throw ShiftOnSpectrumError(zeta, "shift lies on the spectrum of P");
    }
  } else {
    const Eigen::MatrixXcd pz = evaluate(P, zeta);
    lu_cplx_.compute(pz);
    const double scale = std::max(pz.lpNorm<Eigen::Infinity>(), 1e-300);
    if (dense::min_pivot(lu_cplx_) <= dense::kPivotTolFactor * kEps * scale) {
      throw ShiftOnSpectrumError(zeta, "shift lies on the spectrum of P");
    }
  }
  counter_.fetch_add(1);
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> ShiftedFactorization::solve_l_impl(
    Scalar sigma, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x,
    bool transposed) const {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = lin_->order();
  const int ell = lin_->core_blocks();
  if (x.size() != lin_->dim()) throw InputError("solve_l: vector length mismatch");

  auto factor_solve = [&](const Vec& rhs) -> Vec {
    if constexpr (std::is_same_v<Scalar, double>) {
      if (transposed) return lu_real_.transpose().solve(rhs);
      return lu_real_.solve(rhs);
    } else {
      if (transposed) return lu_cplx_.transpose().solve(rhs);
      return lu_cplx_.solve(rhs);
    }
  };

  if (ell == 1) return factor_solve(x);  // borderless pencil: L_P = P

  const auto x1 = x.head(ell * n);
  const auto x2 = x.tail((ell - 1) * n);

  // particular solution of the underdetermined border system, by backward
  // recurrence with the last block pinned to zero
  Vec yhat = Vec::Zero(ell * n);
  for (int k = ell - 2; k >= 0; --k) {
    yhat.segment(k * n, n) = x2.segment(k * n, n) + sigma * yhat.segment((k + 1) * n, n);
  }

  // contract x1 - M_P(sigma) yhat with the alternating-power row to the
  // n x n core system P(sigma) r = rhs
  const Vec mp_yhat = lin_->apply_mp(sigma, yhat);
  Vec rhs = Vec::Zero(n);
  Scalar power(1.0);
  for (int k = ell - 1; k >= 0; --k) {
    rhs += power * (x1.segment(k * n, n) - mp_yhat.segment(k * n, n));
    power *= -sigma;
  }
  const Vec r = factor_solve(rhs);

  // first solution part: yhat plus the homogeneous direction
  Vec y1 = yhat;
  power = Scalar(1.0);
  for (int k = ell - 1; k >= 0; --k) {
    y1.segment(k * n, n) += power * r;
    power *= sigma;
  }

  // forward recurrence for the border unknowns
  const Vec mp_y1 = lin_->apply_mp(sigma, y1);
  Vec w = x1 - mp_y1;
  Vec y2((ell - 1) * n);
  y2.segment(0, n) = w.segment(0, n);
  for (int k = 1; k < ell - 1; ++k) {
    y2.segment(k * n, n) = w.segment(k * n, n) - sigma * y2.segment((k - 1) * n, n);
  }
#ifndef NDEBUG
  // the overdetermined system's last block row is consistent in exact
  // arithmetic; its floating-point defect is diagnostic only
  const double defect =
      (w.segment((ell - 1) * n, n) - sigma * y2.segment((ell - 2) * n, n)).norm();
  assert(defect <= 1e-8 * (1.0 + x.norm() + y2.norm() * std::abs(sigma)));
#endif

  Vec y(lin_->dim());
  y.head(ell * n) = y1;
  y.tail((ell - 1) * n) = y2;
  return y;
}

Eigen::VectorXcd ShiftedFactorization::solve_l(const Eigen::VectorXcd& x,
                                               bool transposed) const {
  if (class_ == ShiftClass::real_axis) {
    // run the real factors on the real and imaginary parts separately
    Eigen::VectorXd re = solve_l_impl<double>(transposed ? -zeta_.real() : zeta_.real(),
                                              x.real(), transposed);
    Eigen::VectorXd im = solve_l_impl<double>(transposed ? -zeta_.real() : zeta_.real(),
                                              x.imag(), transposed);
    return re + Complex(0.0, 1.0) * im;
  }
  const Complex sigma = transposed ? -zeta_ : zeta_;
  return solve_l_impl<Complex>(sigma, x, transposed);
}

Eigen::VectorXd ShiftedFactorization::solve_l(const Eigen::VectorXd& x,
                                              bool transposed) const {
  if (class_ != ShiftClass::real_axis) {
    throw InputError("real solve_l path requires a real shift");
  }
  return solve_l_impl<double>(transposed ? -zeta_.real() : zeta_.real(), x, transposed);
}

Eigen::VectorXcd ShiftedFactorization::apply_k(const Eigen::VectorXd& v) const {
  if (class_ == ShiftClass::real_axis) {
    return apply_k_real(v).cast<Complex>();
  }
  const Eigen::VectorXcd u1 = lin_->apply_x(v).cast<Complex>();
  const Eigen::VectorXcd u2 = solve_l(u1, false);
  const Eigen::VectorXcd u3 = lin_->apply_x(u2);
  return solve_l(u3, true);
}

Eigen::VectorXd ShiftedFactorization::apply_k_real(const Eigen::VectorXd& v) const {
  if (class_ == ShiftClass::real_axis) {
    const Eigen::VectorXd u1 = lin_->apply_x(v);
    const Eigen::VectorXd u2 = solve_l(u1, false);
    const Eigen::VectorXd u3 = lin_->apply_x(u2);
    return solve_l(u3, true);
  }
  if (class_ != ShiftClass::imaginary_axis) {
    throw InputError("apply_k_real requires a real or purely imaginary shift");
  }
  const Eigen::VectorXcd u1 = lin_->apply_x(v).cast<Complex>();
  const Eigen::VectorXcd u2 = solve_l(u1, false);
  const Eigen::VectorXcd u3 = lin_->apply_x(u2);
  const Eigen::VectorXcd u4 = solve_l(u3, true);
  const double norm = u4.norm();
  if (u4.imag().norm() > kImagTruncationTol * std::max(norm, 1e-300)) {
    throw Error("K(zeta) produced a non-real vector for an imaginary shift");
  }
  return u4.real();
}

}  // namespace teven
