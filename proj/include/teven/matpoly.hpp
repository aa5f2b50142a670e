#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "teven/errors.hpp"

namespace teven {

using Complex = std::complex<double>;

/// Real square matrix polynomial P(lambda) = sum_k lambda^k P_k, stored by
/// its dense coefficient list. Immutable after construction.
class MatrixPolynomial {
public:
  /// Throws InputError for an empty list, non-square or mismatched
  /// coefficients, or a zero leading coefficient.
  explicit MatrixPolynomial(std::vector<Eigen::MatrixXd> coeffs);

  Eigen::Index order() const { return n_; }
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  const Eigen::MatrixXd& coeff(int k) const { return coeffs_.at(static_cast<size_t>(k)); }
  const std::vector<Eigen::MatrixXd>& coeffs() const { return coeffs_; }

  /// Largest entry magnitude over all coefficients.
  double coeff_scale() const { return scale_; }
  /// Largest entry of |P_k - sigma_k P_k^T|, sigma_k = +1 (k even) / -1 (k odd).
  double max_symmetry_defect() const { return defect_; }

private:
  Eigen::Index n_;
  std::vector<Eigen::MatrixXd> coeffs_;
  double scale_;
  double defect_;
};

struct StructureReport {
  bool is_t_even = false;
  double max_symmetry_defect = 0.0;
};

/// T-even test: symmetric even-index and skew-symmetric odd-index
/// coefficients, up to tol relative to the coefficient scale.
StructureReport check_structure(const MatrixPolynomial& P, double tol = 1e-12);

/// Horner evaluation of P(z).
Eigen::MatrixXcd evaluate(const MatrixPolynomial& P, Complex z);
Eigen::MatrixXd evaluate(const MatrixPolynomial& P, double z);

/// Coefficient-order reversal lambda^d P(1/lambda); trailing zero
/// coefficients of the result are trimmed so the leading one is nonzero.
MatrixPolynomial reversal(const MatrixPolynomial& P);

/// The ten Kronecker-sum weights of the degree-4 butterfly problem.
struct ButterflyConstants {
  double c[5][2] = {{0.6, 1.3}, {1.3, 0.1}, {0.1, 1.2}, {1.0, 1.0}, {1.0, 1.0}};
};

/// Degree-4 T-even problem of order m^2 built from Kronecker sums of
/// tridiagonal/bidiagonal m x m blocks. m >= 2; all weights must be positive.
MatrixPolynomial generate_butterfly(int m, const ButterflyConstants& c = {});

/// Random quadratic lambda^2 M + lambda G + K with M, K symmetric positive
/// definite and G skew-symmetric; bit-reproducible per seed. Its spectrum
/// lies on the imaginary axis.
MatrixPolynomial generate_gyroscopic(int n, std::uint64_t seed);

/// Problem directory layout: a JSON manifest {"n", "degree", "coefficients"}
/// next to one Matrix Market file per coefficient.
MatrixPolynomial read_polynomial(const std::filesystem::path& manifest_path);
void write_polynomial(const MatrixPolynomial& P, const std::filesystem::path& dir);

}  // namespace teven
