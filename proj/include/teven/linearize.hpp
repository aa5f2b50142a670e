#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "teven/matpoly.hpp"

namespace teven {

/// Sparse T-even linearization L_P(lambda) = lambda*X + Y of order d*n,
/// held implicitly: the block-diagonal core M_P(lambda) = (+)_k (lambda*A_k + B_k)
/// plus identity borders that are pure index arithmetic. X is skew-symmetric,
/// Y symmetric; neither is ever formed at production scale.
///
/// d = deg(P) if odd, deg(P)+1 otherwise (with a zero padding coefficient),
/// ell = (d+1)/2. Block signs follow the worked degree-7 layout, so that
/// (Lambda(-z) (x) I) M_P(z) (Lambda(z)^T (x) I) = P(z) holds exactly.
class EvenLinearization {
public:
  /// Throws InputError if P is not T-even within structure_tol.
  explicit EvenLinearization(const MatrixPolynomial& P, double structure_tol = 1e-12);

  Eigen::Index order() const { return P_.order(); }          // n
  int odd_degree() const { return d_; }                      // d
  int core_blocks() const { return ell_; }                   // ell
  Eigen::Index dim() const { return static_cast<Eigen::Index>(d_) * P_.order(); }
  const Eigen::MatrixXd& block_a(int k) const { return a_.at(static_cast<size_t>(k)); }
  const Eigen::MatrixXd& block_b(int k) const { return b_.at(static_cast<size_t>(k)); }
  const MatrixPolynomial& polynomial() const { return P_; }

  Eigen::VectorXd apply_x(const Eigen::VectorXd& v) const;
  Eigen::VectorXcd apply_x(const Eigen::VectorXcd& v) const;

  /// Block-diagonal core application: out_k = (z*A_k + B_k) v_k.
  Eigen::VectorXd apply_mp(double z, const Eigen::VectorXd& v) const;
  Eigen::VectorXcd apply_mp(Complex z, const Eigen::VectorXcd& v) const;

  /// Dense (X, Y) for oracle use at test scale; throws CapExceededError
  /// when d*n exceeds the cap.
  std::pair<Eigen::MatrixXd, Eigen::MatrixXd> materialize(Eigen::Index cap = 2000) const;

private:
  template <typename Scalar>
  void apply_x_impl(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& v,
                    Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& out) const;
  template <typename Scalar>
  void apply_mp_impl(Scalar z, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& v,
                     Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& out) const;

  MatrixPolynomial P_;
  int d_;
  int ell_;
  std::vector<Eigen::MatrixXd> a_;  // signed lambda-blocks of M_P
  std::vector<Eigen::MatrixXd> b_;  // signed constant blocks of M_P
};

}  // namespace teven
