#include "teven/linearize.hpp"

namespace teven {

EvenLinearization::EvenLinearization(const MatrixPolynomial& P, double structure_tol)
    : P_(P) {
  const auto report = check_structure(P, structure_tol);
  if (!report.is_t_even) {
    throw InputError("polynomial is not T-even (symmetry defect " +
                     std::to_string(report.max_symmetry_defect) + ")");
  }
  const int deg = P.degree();
  d_ = (deg % 2 == 1) ? deg : deg + 1;
  ell_ = (d_ + 1) / 2;
  const Eigen::Index n = P.order();

  // M_P(lambda) = (+)_k s_k (lambda P_{d-2k} + P_{d-2k-1}), s_k = (-1)^(ell-1-k),
  // so that the Kronecker contraction of M_P(z) reproduces P(z) exactly.
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(n, n);
  a_.reserve(static_cast<size_t>(ell_));
  b_.reserve(static_cast<size_t>(ell_));
  for (int k = 0; k < ell_; ++k) {
    const double sign = ((ell_ - 1 - k) % 2 == 0) ? 1.0 : -1.0;
    const int ia = d_ - 2 * k;      // lambda-coefficient index (padded: P_d := 0)
    const int ib = d_ - 2 * k - 1;
    a_.push_back(ia > deg ? zero : (sign * P.coeff(ia)).eval());
    b_.push_back(sign * P.coeff(ib));
  }
}

template <typename Scalar>
void EvenLinearization::apply_x_impl(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& v,
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& out) const {
  const Eigen::Index n = order();
  if (v.size() != dim()) throw InputError("apply_x: vector length mismatch");
  out.resize(dim());
  // top block rows: A_k v_{1,k} plus the border identity above-diagonal
  for (int k = 0; k < ell_; ++k) {
    auto dst = out.segment(k * n, n);
    dst = a_[static_cast<size_t>(k)] * v.segment(k * n, n);
    if (k >= 1) dst += v.segment((ell_ + k - 1) * n, n);
  }
  // bottom border rows: -v_{1,k+1}
  for (int k = 0; k < ell_ - 1; ++k) {
    out.segment((ell_ + k) * n, n) = -v.segment((k + 1) * n, n);
  }
}

template <typename Scalar>
void EvenLinearization::apply_mp_impl(
    Scalar z, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& v,
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& out) const {
  const Eigen::Index n = order();
  if (v.size() != static_cast<Eigen::Index>(ell_) * n) {
    throw InputError("apply_mp: vector length mismatch");
  }
  out.resize(v.size());
  for (int k = 0; k < ell_; ++k) {
    out.segment(k * n, n) =
        z * (a_[static_cast<size_t>(k)] * v.segment(k * n, n)) +
        b_[static_cast<size_t>(k)] * v.segment(k * n, n);
  }
}

Eigen::VectorXd EvenLinearization::apply_x(const Eigen::VectorXd& v) const {
  Eigen::VectorXd out;
  apply_x_impl<double>(v, out);
  return out;
}

Eigen::VectorXcd EvenLinearization::apply_x(const Eigen::VectorXcd& v) const {
  Eigen::VectorXcd out;
  apply_x_impl<Complex>(v, out);
  return out;
}

Eigen::VectorXd EvenLinearization::apply_mp(double z, const Eigen::VectorXd& v) const {
  Eigen::VectorXd out;
  apply_mp_impl<double>(z, v, out);
  return out;
}

Eigen::VectorXcd EvenLinearization::apply_mp(Complex z, const Eigen::VectorXcd& v) const {
  Eigen::VectorXcd out;
  apply_mp_impl<Complex>(z, v, out);
  return out;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> EvenLinearization::materialize(
    Eigen::Index cap) const {
  if (dim() > cap) {
    throw CapExceededError("linearization order " + std::to_string(dim()) +
                           " exceeds the materialization cap");
  }
  const Eigen::Index n = order();
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(dim(), dim());
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(dim(), dim());
  for (int k = 0; k < ell_; ++k) {
    X.block(k * n, k * n, n, n) = a_[static_cast<size_t>(k)];
    Y.block(k * n, k * n, n, n) = b_[static_cast<size_t>(k)];
  }
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  for (int k = 0; k < ell_ - 1; ++k) {
    X.block((k + 1) * n, (ell_ + k) * n, n, n) = eye;   // border of L(-lambda)^T
    X.block((ell_ + k) * n, (k + 1) * n, n, n) = -eye;  // border of L(lambda)
    Y.block(k * n, (ell_ + k) * n, n, n) = eye;
    Y.block((ell_ + k) * n, k * n, n, n) = eye;
  }
  return {X, Y};
}

}  // namespace teven
