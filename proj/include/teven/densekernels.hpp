#pragma once

#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "teven/errors.hpp"

namespace teven {
class MatrixPolynomial;
}

namespace teven::dense {

using Complex = std::complex<double>;

/// Pivot breakdown factor: a factorization is rejected when its smallest
/// pivot magnitude falls below kPivotTolFactor * eps * ||A||_inf.
inline constexpr double kPivotTolFactor = 1e3;

// ---------------------------------------------------------------------------
// Givens rotations
// ---------------------------------------------------------------------------

/// Plane rotation [c s; -s c] with c >= 0. `trivial` marks the identity
/// (generator g was exactly zero); trivial rotations are never applied, which
/// keeps untouched matrix regions bit-identical.
struct Givens {
  double c = 1.0;
  double s = 0.0;
  bool trivial = true;
};

/// Rotation such that [c s; -s c] [f; g]^T = [r; 0]^T with c >= 0.
Givens make_givens(double f, double g);

/// Apply [c s; -s c] to rows i and j of A (all columns).
template <typename Derived>
void rotate_rows(Eigen::MatrixBase<Derived>& A, Eigen::Index i, Eigen::Index j,
                 const Givens& g) {
  if (g.trivial) return;
  for (Eigen::Index k = 0; k < A.cols(); ++k) {
    const double a = A(i, k);
    const double b = A(j, k);
    A(i, k) = g.c * a + g.s * b;
    A(j, k) = -g.s * a + g.c * b;
  }
}

/// Apply the same pattern to the column pair (i, j): col_i <- c*col_i + s*col_j,
/// col_j <- -s*col_i + c*col_j.
template <typename Derived>
void rotate_cols(Eigen::MatrixBase<Derived>& A, Eigen::Index i, Eigen::Index j,
                 const Givens& g) {
  if (g.trivial) return;
  for (Eigen::Index k = 0; k < A.rows(); ++k) {
    const double a = A(k, i);
    const double b = A(k, j);
    A(k, i) = g.c * a + g.s * b;
    A(k, j) = -g.s * a + g.c * b;
  }
}

// ---------------------------------------------------------------------------
// Linear solves
// ---------------------------------------------------------------------------

/// Solve A x = b (or A^T x = b). One-shot pivoted LU with a breakdown check.
Eigen::VectorXd lu_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                         bool transposed = false);
Eigen::MatrixXd lu_solve(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                         bool transposed = false);
Eigen::VectorXcd lu_solve(const Eigen::MatrixXcd& A, const Eigen::VectorXcd& b,
                          bool transposed = false);
Eigen::MatrixXcd lu_solve(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& B,
                          bool transposed = false);

/// Smallest pivot magnitude of a computed LU. Used for the breakdown check.
template <typename MatrixType>
double min_pivot(const Eigen::PartialPivLU<MatrixType>& lu) {
  return lu.matrixLU().diagonal().cwiseAbs().minCoeff();
}

// ---------------------------------------------------------------------------
// Generalized real Schur (QZ) with reordering
// ---------------------------------------------------------------------------

/// Q^T T Z = S upper-triangular, Q^T H Z = R quasi-upper-triangular with
/// 1x1 / 2x2 diagonal blocks. Generalized eigenvalues are read blockwise as
/// theta with R y = theta S y.
struct GeneralizedSchur {
  Eigen::MatrixXd Q;
  Eigen::MatrixXd Z;
  Eigen::MatrixXd S;  // triangular, from the T side
  Eigen::MatrixXd R;  // quasi-triangular, from the H side
  std::vector<int> block_starts;

  /// theta per diagonal position (a 2x2 block yields its conjugate pair).
  /// Infinite eigenvalues come back as (inf, 0).
  std::vector<Complex> eigenvalues() const;
};

/// Diagonal block partition of a quasi-upper-triangular matrix.
std::vector<int> quasi_block_starts(const Eigen::MatrixXd& R);

/// Eigenvalues of the k x k pair (R, S) read off its diagonal blocks.
std::vector<Complex> block_eigenvalues(const Eigen::MatrixXd& R,
                                       const Eigen::MatrixXd& S);

GeneralizedSchur qz(const Eigen::MatrixXd& T, const Eigen::MatrixXd& H);

/// Move all blocks whose eigenvalue satisfies `wanted` to the leading part,
/// preserving relative order on both sides. Returns false if some swap was
/// rejected as ill-conditioned (that block is left in place).
bool reorder(GeneralizedSchur& gs, const std::function<bool(Complex)>& wanted);

/// Selection sort of diagonal blocks by `key`, descending. The key sees the
/// decomposition plus the block position so callers can inspect the raw
/// 1x1/2x2 entries (e.g. to demote numerically void blocks).
using BlockKey = std::function<double(const GeneralizedSchur&, int start, int size)>;
bool sort_blocks_descending(GeneralizedSchur& gs, const BlockKey& key);

// ---------------------------------------------------------------------------
// Rank-revealing nullspace
// ---------------------------------------------------------------------------

/// Orthonormal basis of the numerical right nullspace: singular directions
/// with sigma <= rank_tol * sigma_max. Returns an n x t matrix (t may be 0).
Eigen::MatrixXd nullspace(const Eigen::MatrixXd& A, double rank_tol);

// ---------------------------------------------------------------------------
// Dense polynomial eigenvalue oracle
// ---------------------------------------------------------------------------

struct PolyEig {
  std::vector<Complex> finite;
  int infinite_count = 0;
};

/// All eigenvalues of P via the Frobenius companion pencil and qz().
/// Test-scale only; throws CapExceededError when n*deg exceeds `cap`.
PolyEig dense_polyeig_oracle(const MatrixPolynomial& P, double tol_inf = 1e-8,
                             Eigen::Index cap = 600);

}  // namespace teven::dense
