#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "teven/structsolve.hpp"

namespace teven {

/// Modified rational Arnoldi decomposition G^2 V_m T_m = V_{m+1} Hbar_m:
/// V orthonormal (dn x (m+1)), T upper-triangular (m x m), Hbar
/// upper-Hessenberg ((m+1) x m). Shifts may change per expansion step.
/// The leading `locked` columns/rows are frozen converged blocks.
struct RationalKrylovDecomposition {
  Eigen::MatrixXd V;
  Eigen::MatrixXd T;
  Eigen::MatrixXd H;  // Hbar; last row holds the residual couplings
  std::vector<Complex> shifts;
  int locked = 0;

  /// m = 0 decomposition holding one basis column. Throws
  /// std::invalid_argument unless | ||v1|| - 1 | <= 1e-10.
  static RationalKrylovDecomposition init(const Eigen::VectorXd& v1);

  int size() const { return static_cast<int>(T.cols()); }
  Eigen::Index dim() const { return V.rows(); }
};

/// Orthogonal reduction of an extended pair back to (triangular T with zero
/// last row, Hessenberg Hbar): T = Q That Z (first rows), Hbar = Q Hhat Z,
/// and the basis update is Vhat Q^T. Untouched regions keep their bits;
/// q_window is the first row index any nontrivial left rotation reached.
struct ChaseResult {
  Eigen::MatrixXd Q;
  Eigen::MatrixXd Z;
  Eigen::MatrixXd T;     // square, the zero last row dropped
  Eigen::MatrixXd Hbar;
  int rotations = 0;
  Eigen::Index q_window = 0;
};

/// Single-column extension chase (real or purely imaginary shift).
/// That, Hhat are (m+2) x (m+1) with the new-column tail entries.
ChaseResult bulge_chase_real(const Eigen::MatrixXd& That, const Eigen::MatrixXd& Hhat);

/// Two-column extension chase (general complex shift); (m+3) x (m+2) inputs.
ChaseResult bulge_chase_complex(const Eigen::MatrixXd& That, const Eigen::MatrixXd& Hhat);

enum class StepResult {
  grown,      // decomposition extended
  breakdown,  // happy breakdown; nothing appended
  deflated,   // breakdown absorbed: fresh direction injected or a dependent
              // column dropped (complex shift, rank-1 fallback)
};

struct ExpandOptions {
  std::ostream* trace = nullptr;
  /// When set, a happy breakdown injects a random orthonormal direction with
  /// zero residual coupling instead of rejecting the step.
  std::mt19937_64* breakdown_rng = nullptr;
};

/// One Gram-Schmidt + bulge-chase step with K(shift); grows m by 1.
StepResult expand_real_shift(RationalKrylovDecomposition& dec,
                             const ShiftedFactorization& F,
                             const ExpandOptions& opts = {});

/// Re/Im split step for a general complex shift; grows m by 2 (or by 1 when
/// one of the two components is linearly dependent).
StepResult expand_complex_shift(RationalKrylovDecomposition& dec,
                                const ShiftedFactorization& F,
                                const ExpandOptions& opts = {});

/// Shift -> factorization cache; each distinct shift is factorized once.
class FactorizationCache {
public:
  explicit FactorizationCache(const EvenLinearization& lin) : lin_(&lin) {}
  const ShiftedFactorization& get(Complex zeta);
  long factorizations() const { return static_cast<long>(entries_.size()); }

private:
  const EvenLinearization* lin_;
  std::vector<std::pair<Complex, std::unique_ptr<ShiftedFactorization>>> entries_;
};

struct ExpandOutcome {
  int size = 0;             // m after expansion
  bool hit_breakdown = false;
};

/// Expansion driver: consumes shifts from `plan` (the last one repeats),
/// dispatching on shift class, until size >= target_m. A complex shift may
/// overshoot target_m by one. Without a breakdown RNG the driver stops at
/// the first happy breakdown.
ExpandOutcome expand(RationalKrylovDecomposition& dec, std::span<const Complex> plan,
                     int target_m, FactorizationCache& cache,
                     const ExpandOptions& opts = {});

}  // namespace teven
