#include "teven/densekernels.hpp"

#include <cmath>
#include <limits>

#include <lapacke.h>

#include "teven/matpoly.hpp"

namespace teven::dense {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

template <typename MatrixType>
void check_pivots(const Eigen::PartialPivLU<MatrixType>& lu, double norm_inf) {
  const double smallest = min_pivot(lu);
  if (smallest <= kPivotTolFactor * kEps * std::max(norm_inf, 1e-300)) {
    throw SingularMatrixError("matrix is singular to working precision");
  }
}

template <typename MatrixType, typename RhsType>
RhsType lu_solve_impl(const MatrixType& A, const RhsType& b, bool transposed) {
  Eigen::PartialPivLU<MatrixType> lu(A);
  check_pivots(lu, A.template lpNorm<Eigen::Infinity>());
  if (transposed) return lu.transpose().solve(b);
  return lu.solve(b);
}

}  // namespace

Givens make_givens(double f, double g) {
  Givens rot;
  if (g == 0.0) {
    return rot;  // identity, c = 1 >= 0
  }
  rot.trivial = false;
  if (f == 0.0) {
    rot.c = 0.0;
    rot.s = std::copysign(1.0, g);
    return rot;
  }
  const double r = std::copysign(std::hypot(f, g), f);
  rot.c = f / r;  // >= 0 by the sign choice
  rot.s = g / r;
  return rot;
}

Eigen::VectorXd lu_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                         bool transposed) {
  return lu_solve_impl(A, b, transposed);
}
Eigen::MatrixXd lu_solve(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                         bool transposed) {
  return lu_solve_impl(A, B, transposed);
}
Eigen::VectorXcd lu_solve(const Eigen::MatrixXcd& A, const Eigen::VectorXcd& b,
                          bool transposed) {
  return lu_solve_impl(A, b, transposed);
}
Eigen::MatrixXcd lu_solve(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& B,
                          bool transposed) {
  return lu_solve_impl(A, B, transposed);
}

std::vector<int> quasi_block_starts(const Eigen::MatrixXd& R) {
  const int k = static_cast<int>(R.rows());
  std::vector<int> starts;
  int i = 0;
  while (i < k) {
    starts.push_back(i);
    if (i + 1 < k && R(i + 1, i) != 0.0) {
      i += 2;
    } else {
      i += 1;
    }
  }
  return starts;
}

namespace {

/// Eigenvalues of one diagonal block of the pair (R, S) at position i.
void block_theta(const Eigen::MatrixXd& R, const Eigen::MatrixXd& S, int i,
                 int size, Complex out[2]) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  if (size == 1) {
    if (S(i, i) == 0.0) {
      out[0] = Complex(kInf, 0.0);
    } else {
      out[0] = Complex(R(i, i) / S(i, i), 0.0);
    }
    return;
  }
  // det(R2 - theta*S2) = a*theta^2 - b*theta + c with S2 upper-triangular.
  const double r11 = R(i, i), r12 = R(i, i + 1), r21 = R(i + 1, i), r22 = R(i + 1, i + 1);
  const double s11 = S(i, i), s12 = S(i, i + 1), s22 = S(i + 1, i + 1);
  const double a = s11 * s22;
  const double b = r11 * s22 + r22 * s11 - r21 * s12;
  const double c = r11 * r22 - r21 * r12;
  const double scale = std::max({std::abs(a), std::abs(b), std::abs(c)});
  if (std::abs(a) <= 1e-300 * std::max(scale, 1.0)) {
    out[0] = Complex(kInf, 0.0);
    out[1] = Complex(kInf, 0.0);
    return;
  }
  const Complex disc = std::sqrt(Complex(b * b - 4.0 * a * c, 0.0));
  // root pairing that avoids cancellation in the dominant root
  const Complex q = (b >= 0.0) ? (Complex(b, 0.0) + disc) * 0.5 : (Complex(b, 0.0) - disc) * 0.5;
  if (std::abs(q) > 0.0) {
    out[0] = q / a;
    out[1] = Complex(c, 0.0) / q;
  } else {
    out[0] = Complex(0.0, 0.0);
    out[1] = Complex(0.0, 0.0);
  }
}

}  // namespace

std::vector<Complex> block_eigenvalues(const Eigen::MatrixXd& R,
                                       const Eigen::MatrixXd& S) {
  std::vector<Complex> theta(static_cast<size_t>(R.rows()));
  for (int start : quasi_block_starts(R)) {
    const int size =
        (start + 1 < R.rows() && R(start + 1, start) != 0.0) ? 2 : 1;
    Complex pair[2];
    block_theta(R, S, start, size, pair);
    theta[static_cast<size_t>(start)] = pair[0];
    if (size == 2) theta[static_cast<size_t>(start) + 1] = pair[1];
  }
  return theta;
}

std::vector<Complex> GeneralizedSchur::eigenvalues() const {
  return block_eigenvalues(R, S);
}

GeneralizedSchur qz(const Eigen::MatrixXd& T, const Eigen::MatrixXd& H) {
  const lapack_int k = static_cast<lapack_int>(T.rows());
  GeneralizedSchur gs;
  if (k == 0) {
    gs.Q.resize(0, 0); gs.Z.resize(0, 0); gs.S.resize(0, 0); gs.R.resize(0, 0);
    return gs;
  }
  // dgges convention: H = Q R Z^T, T = Q S Z^T, R quasi-triangular.
  gs.R = H;
  gs.S = T;
  gs.Q.resize(k, k);
  gs.Z.resize(k, k);
  Eigen::VectorXd alphar(k), alphai(k), beta(k);
  lapack_int sdim = 0;
  const lapack_int info = LAPACKE_dgges(
      LAPACK_COL_MAJOR, 'V', 'V', 'N', nullptr, k, gs.R.data(), k, gs.S.data(),
      k, &sdim, alphar.data(), alphai.data(), beta.data(), gs.Q.data(), k,
      gs.Z.data(), k);
  if (info != 0) {
    throw Error("qz iteration failed to converge (dgges info=" +
                std::to_string(info) + ")");
  }
  gs.block_starts = quasi_block_starts(gs.R);
  return gs;
}

namespace {

/// Moves the diagonal block starting at row `ifst` to row `ilst` (0-based),
/// updating Q and Z. Returns false (state restored) if the swap chain is
/// rejected as ill-conditioned.
bool move_block(GeneralizedSchur& gs, int ifst, int ilst) {
  if (ifst == ilst) return true;
  const lapack_int k = static_cast<lapack_int>(gs.R.rows());
  Eigen::MatrixXd r_saved = gs.R, s_saved = gs.S, q_saved = gs.Q, z_saved = gs.Z;
  lapack_int f = ifst + 1, l = ilst + 1;
  const lapack_int info =
      LAPACKE_dtgexc(LAPACK_COL_MAJOR, 1, 1, k, gs.R.data(), k, gs.S.data(), k,
                     gs.Q.data(), k, gs.Z.data(), k, &f, &l);
  if (info != 0) {
    gs.R = std::move(r_saved);
    gs.S = std::move(s_saved);
    gs.Q = std::move(q_saved);
    gs.Z = std::move(z_saved);
    return false;
  }
  gs.block_starts = quasi_block_starts(gs.R);
  return true;
}

struct BlockInfo {
  int start;
  int size;
  Complex theta;
};

std::vector<BlockInfo> scan_blocks(const GeneralizedSchur& gs) {
  std::vector<BlockInfo> blocks;
  const auto theta = gs.eigenvalues();
  for (int start : quasi_block_starts(gs.R)) {
    const int size =
        (start + 1 < gs.R.rows() && gs.R(start + 1, start) != 0.0) ? 2 : 1;
    blocks.push_back({start, size, theta[static_cast<size_t>(start)]});
  }
  return blocks;
}

}  // namespace

bool reorder(GeneralizedSchur& gs, const std::function<bool(Complex)>& wanted) {
  bool all_ok = true;
  int dest = 0;
  while (true) {
    const auto blocks = scan_blocks(gs);
    // first wanted block at or after dest
    const BlockInfo* pick = nullptr;
    for (const auto& b : blocks) {
      if (b.start < dest) continue;
      if (wanted(b.theta)) {
        pick = &b;
        break;
      }
    }
    if (!pick) break;
    if (!move_block(gs, pick->start, dest)) {
      all_ok = false;
      // skip past the stuck block so the scan can terminate
      dest = pick->start + pick->size;
      continue;
    }
    // after the move the block sits at dest; advance past it
    const auto moved = scan_blocks(gs);
    for (const auto& b : moved) {
      if (b.start == dest) {
        dest += b.size;
        break;
      }
    }
  }
  return all_ok;
}

bool sort_blocks_descending(GeneralizedSchur& gs,
                            const std::function<double(Complex)>& key) {
  bool all_ok = true;
  int dest = 0;
  while (true) {
    const auto blocks = scan_blocks(gs);
    const BlockInfo* best = nullptr;
    for (const auto& b : blocks) {
      if (b.start < dest) continue;
      if (!best || key(b.theta) > key(best->theta)) best = &b;
    }
    if (!best) break;
    if (best->start == dest) {
      dest += best->size;
      continue;
    }
    if (!move_block(gs, best->start, dest)) {
      all_ok = false;
      dest += 1;  // give up on this slot
      continue;
    }
    const auto moved = scan_blocks(gs);
    for (const auto& b : moved) {
      if (b.start == dest) {
        dest += b.size;
        break;
      }
    }
  }
  return all_ok;
}

Eigen::MatrixXd nullspace(const Eigen::MatrixXd& A, double rank_tol) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  const Eigen::Index n = A.cols();
  Eigen::Index t = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) <= rank_tol * smax) ++t;
  }
  if (smax == 0.0) t = n;  // zero matrix
  return svd.matrixV().rightCols(t);
}

PolyEig dense_polyeig_oracle(const MatrixPolynomial& P, double tol_inf,
                             Eigen::Index cap) {
  const Eigen::Index n = P.order();
  const int deg = P.degree();
  if (n * deg > cap) {
    throw CapExceededError("companion pencil order exceeds the oracle cap");
  }
  PolyEig out;
  if (deg == 0) return out;  // constant regular polynomial: empty spectrum

  // Frobenius companion pencil: theta X_c + Y_c with
  //   X_c = diag(P_d, I, ..., I),
  //   Y_c = [P_{d-1} ... P_0; -I 0 ...; ...].
  const Eigen::Index k = n * deg;
  Eigen::MatrixXd Xc = Eigen::MatrixXd::Zero(k, k);
  Eigen::MatrixXd Yc = Eigen::MatrixXd::Zero(k, k);
  Xc.topLeftCorner(n, n) = P.coeff(deg);
  for (int j = 1; j < deg; ++j) {
    Xc.block(n * j, n * j, n, n).setIdentity();
  }
  for (int j = 0; j < deg; ++j) {
    Yc.block(0, n * j, n, n) = P.coeff(deg - 1 - j);
  }
  for (int j = 1; j < deg; ++j) {
    Yc.block(n * j, n * (j - 1), n, n) = -Eigen::MatrixXd::Identity(n, n);
  }

  // Eigenvalues mu solve det(mu X_c + Y_c) = 0, i.e. (-Y_c) y = mu X_c y.
  GeneralizedSchur gs = qz(Xc, -Yc);
  for (Complex theta : gs.eigenvalues()) {
    const bool infinite = !std::isfinite(theta.real()) ||
                          !std::isfinite(theta.imag()) ||
                          std::abs(theta) > 1.0 / tol_inf;
    if (infinite) {
      ++out.infinite_count;
    } else {
      out.finite.push_back(theta);
    }
  }
  return out;
}

}  // namespace teven::dense
