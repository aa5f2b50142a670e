#include "teven/ratarnoldi.hpp"

#include <ostream>
#include <stdexcept>

#include "teven/densekernels.hpp"

namespace teven {

using dense::Givens;
using dense::make_givens;

namespace {

constexpr double kBreakdownTol = 1e-12;

struct GramSchmidt {
  Eigen::VectorXd coeffs;
  Eigen::VectorXd residual;
  double rnorm = 0.0;
  double wnorm = 0.0;
};

/// Classical Gram-Schmidt with one unconditional reorthogonalization pass.
GramSchmidt cgs2(const Eigen::MatrixXd& V, const Eigen::VectorXd& w) {
  GramSchmidt g;
  g.wnorm = w.norm();
  g.coeffs = V.transpose() * w;
  g.residual = w - V * g.coeffs;
  const Eigen::VectorXd correction = V.transpose() * g.residual;
  g.residual -= V * correction;
  g.coeffs += correction;
  g.rnorm = g.residual.norm();
  return g;
}

Eigen::VectorXd random_orthonormal(const Eigen::MatrixXd& V, std::mt19937_64& rng) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    Eigen::VectorXd cand(V.rows());
    for (Eigen::Index i = 0; i < cand.size(); ++i) {
      cand(i) = 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
    }
    const auto g = cgs2(V, cand);
    if (g.rnorm > 1e-6 * g.wnorm) return g.residual / g.rnorm;
  }
  throw Error("failed to draw a direction orthogonal to the Krylov basis");
}

/// Working pair for a chase: left rotations also accumulate into Q, right
/// rotations into Z. Kills write exact zeros; trivial rotations are skipped.
struct ChaseWork {
  Eigen::MatrixXd T;
  Eigen::MatrixXd H;
  Eigen::MatrixXd Q;
  Eigen::MatrixXd Z;
  int rotations = 0;
  Eigen::Index q_window;

  ChaseWork(const Eigen::MatrixXd& That, const Eigen::MatrixXd& Hhat)
      : T(That),
        H(Hhat),
        Q(Eigen::MatrixXd::Identity(That.rows(), That.rows())),
        Z(Eigen::MatrixXd::Identity(That.cols(), That.cols())),
        q_window(That.rows()) {}

  // rows i, i+1; zero T(i+1, col) using T(i, col)
  bool left_kill_t(Eigen::Index i, Eigen::Index col) {
    const Givens g = make_givens(T(i, col), T(i + 1, col));
    if (g.trivial) return false;
    dense::rotate_rows(T, i, i + 1, g);
    dense::rotate_rows(H, i, i + 1, g);
    dense::rotate_rows(Q, i, i + 1, g);
    T(i + 1, col) = 0.0;
    ++rotations;
    q_window = std::min(q_window, i);
    return true;
  }

  // columns j, j+1; zero H(row, j) using H(row, j+1)
  bool right_kill_h(Eigen::Index row, Eigen::Index j) {
    const Givens g = make_givens(H(row, j + 1), H(row, j));
    if (g.trivial) return false;
    dense::rotate_cols(H, j + 1, j, g);
    dense::rotate_cols(T, j + 1, j, g);
    dense::rotate_cols(Z, j + 1, j, g);
    H(row, j) = 0.0;
    ++rotations;
    return true;
  }

  ChaseResult finish() && {
    ChaseResult out;
    const Eigen::Index cols = T.cols();
    out.T = T.topRows(cols);
    out.Hbar = std::move(H);
    out.Q = std::move(Q);
    out.Z = std::move(Z);
    out.rotations = rotations;
    out.q_window = q_window;
    return out;
  }
};

void trace_step(std::ostream* trace, Complex shift, int growth, double resid,
                int rotations, const char* note) {
  if (!trace) return;
  (*trace) << "{\"event\":\"expand\",\"shift\":[" << shift.real() << ","
           << shift.imag() << "],\"growth\":" << growth
           << ",\"resid\":" << resid << ",\"rotations\":" << rotations
           << ",\"note\":\"" << note << "\"}\n";
}

}  // namespace

RationalKrylovDecomposition RationalKrylovDecomposition::init(const Eigen::VectorXd& v1) {
  const double nrm = v1.norm();
  if (nrm == 0.0) throw std::invalid_argument("start vector is zero");
  if (std::abs(nrm - 1.0) > 1e-10) {
    throw std::invalid_argument("start vector must be normalized");
  }
  RationalKrylovDecomposition dec;
  dec.V = v1;
  dec.T.resize(0, 0);
  dec.H.resize(1, 0);
  return dec;
}

ChaseResult bulge_chase_real(const Eigen::MatrixXd& That, const Eigen::MatrixXd& Hhat) {
  if (That.rows() != That.cols() + 1 || Hhat.rows() != That.rows() ||
      Hhat.cols() != That.cols()) {
    throw std::invalid_argument("bulge_chase_real: expected (m+2) x (m+1) pair");
  }
  ChaseWork w(That, Hhat);
  const Eigen::Index c = That.cols();  // m+1
  // reduce the new column, then chase the fill-in off the top-left corner
  w.left_kill_t(c - 1, c - 1);
  for (Eigen::Index j = c - 2; j >= 0; --j) {
    const bool a = w.right_kill_h(j + 2, j);
    const bool b = w.left_kill_t(j, j);
    if (!a && !b) break;
  }
  return std::move(w).finish();
}

ChaseResult bulge_chase_complex(const Eigen::MatrixXd& That, const Eigen::MatrixXd& Hhat) {
  if (That.rows() != That.cols() + 1 || Hhat.rows() != That.rows() ||
      Hhat.cols() != That.cols()) {
    throw std::invalid_argument("bulge_chase_complex: expected (m+3) x (m+2) pair");
  }
  ChaseWork w(That, Hhat);
  const Eigen::Index m = That.cols() - 2;
  // two bulges one column apart are chased together; the deferred element of
  // each sweep is eliminated by the following one
  for (Eigen::Index p = 0; p <= m + 1; ++p) {
    bool acted = false;
    if (m - p >= 0) acted |= w.left_kill_t(m - p, m - p);
    if (m + 1 - p >= 0) acted |= w.left_kill_t(m + 1 - p, m + 1 - p);
    if (m - 1 - p >= 0) acted |= w.right_kill_h(m + 2 - p, m - 1 - p);
    if (m - p >= 0) acted |= w.right_kill_h(m + 2 - p, m - p);
    if (!acted && p >= 1) break;
  }
  return std::move(w).finish();
}

namespace {

/// Shared tail of both expansion paths: extend (T, H) by the prepared
/// columns, restore structure, and rotate the basis by Q^T over the touched
/// column window.
void commit_extension(RationalKrylovDecomposition& dec, const Eigen::MatrixXd& That,
                      const Eigen::MatrixXd& Hhat,
                      const std::vector<Eigen::VectorXd>& new_columns,
                      Complex shift, bool complex_chase) {
  const ChaseResult chase =
      complex_chase ? bulge_chase_complex(That, Hhat) : bulge_chase_real(That, Hhat);
  const Eigen::Index total = That.rows();

  Eigen::MatrixXd vhat(dec.V.rows(), total);
  vhat.leftCols(dec.V.cols()) = dec.V;
  for (size_t j = 0; j < new_columns.size(); ++j) {
    vhat.col(dec.V.cols() + static_cast<Eigen::Index>(j)) = new_columns[j];
  }
  const Eigen::Index w0 = chase.q_window;
  Eigen::MatrixXd v_new(vhat.rows(), total);
  v_new.leftCols(w0) = vhat.leftCols(w0);
  if (w0 < total) {
    v_new.rightCols(total - w0) =
        vhat.rightCols(total - w0) *
        chase.Q.bottomRightCorner(total - w0, total - w0).transpose();
  }
  dec.V = std::move(v_new);
  dec.T = chase.T;
  dec.H = chase.Hbar;
  dec.shifts.push_back(shift);
}

}  // namespace

StepResult expand_real_shift(RationalKrylovDecomposition& dec,
                             const ShiftedFactorization& F,
                             const ExpandOptions& opts) {
  if (F.shift_class() == ShiftClass::general) {
    throw std::invalid_argument("expand_real_shift needs a real or imaginary shift");
  }
  const int m = dec.size();
  const Eigen::VectorXd w = F.apply_k_real(dec.V.col(m));
  const GramSchmidt g = cgs2(dec.V, w);

  Eigen::VectorXd v_new;
  double t_resid = 0.0;
  StepResult status = StepResult::grown;
  const char* note = "";
  if (g.rnorm <= kBreakdownTol * g.wnorm) {
    if (!opts.breakdown_rng) {
      trace_step(opts.trace, F.shift(), 0, g.rnorm, 0, "breakdown");
      return StepResult::breakdown;
    }
    v_new = random_orthonormal(dec.V, *opts.breakdown_rng);
    status = StepResult::deflated;
    note = "breakdown-injected";
  } else {
    v_new = g.residual / g.rnorm;
    t_resid = g.rnorm;
  }

  const double xi2 = (F.shift() * F.shift()).real();  // exact on both axes
  Eigen::MatrixXd that = Eigen::MatrixXd::Zero(m + 2, m + 1);
  that.topLeftCorner(m, m) = dec.T;
  that.col(m).head(m + 1) = g.coeffs;
  that(m + 1, m) = t_resid;
  Eigen::MatrixXd hhat = Eigen::MatrixXd::Zero(m + 2, m + 1);
  hhat.topLeftCorner(m + 1, m) = dec.H;
  hhat.col(m).head(m + 1) = xi2 * g.coeffs;
  hhat(m, m) += 1.0;
  hhat(m + 1, m) = xi2 * t_resid;

  commit_extension(dec, that, hhat, {v_new}, F.shift(), false);
  trace_step(opts.trace, F.shift(), 1, t_resid, 0, note);
  return status;
}

StepResult expand_complex_shift(RationalKrylovDecomposition& dec,
                                const ShiftedFactorization& F,
                                const ExpandOptions& opts) {
  if (F.shift_class() != ShiftClass::general) {
    throw std::invalid_argument("expand_complex_shift needs a genuinely complex shift");
  }
  const int m = dec.size();
  const Eigen::VectorXcd w = F.apply_k(dec.V.col(m));
  const Complex xi2 = F.shift() * F.shift();
  const double rho = xi2.real();
  const double eta = xi2.imag();

  const Eigen::VectorXd wr = w.real();
  const Eigen::VectorXd wi = w.imag();
  const GramSchmidt gre = cgs2(dec.V, wr);
  const bool re_dependent = gre.rnorm <= kBreakdownTol * gre.wnorm;

  if (!re_dependent) {
    const Eigen::VectorXd v_re = gre.residual / gre.rnorm;
    Eigen::MatrixXd vext(dec.V.rows(), m + 2);
    vext.leftCols(m + 1) = dec.V;
    vext.col(m + 1) = v_re;
    const GramSchmidt gim = cgs2(vext, wi);
    const bool im_dependent = gim.rnorm <= kBreakdownTol * gim.wnorm;

    if (!im_dependent) {
      const Eigen::VectorXd v_im = gim.residual / gim.rnorm;
      Eigen::VectorXd t1 = Eigen::VectorXd::Zero(m + 3);
      t1.head(m + 1) = gre.coeffs;
      t1(m + 1) = gre.rnorm;
      Eigen::VectorXd t2 = Eigen::VectorXd::Zero(m + 3);
      t2.head(m + 2) = gim.coeffs;
      t2(m + 2) = gim.rnorm;

      Eigen::MatrixXd that = Eigen::MatrixXd::Zero(m + 3, m + 2);
      that.topLeftCorner(m, m) = dec.T;
      that.col(m) = t1;
      that.col(m + 1) = t2;
      Eigen::MatrixXd hhat = Eigen::MatrixXd::Zero(m + 3, m + 2);
      hhat.topLeftCorner(m + 1, m) = dec.H;
      hhat.col(m) = rho * t1 - eta * t2;
      hhat(m, m) += 1.0;
      hhat.col(m + 1) = eta * t1 + rho * t2;

      commit_extension(dec, that, hhat, {v_re, v_im}, F.shift(), true);
      trace_step(opts.trace, F.shift(), 2, std::min(gre.rnorm, gim.rnorm), 0, "");
      return StepResult::grown;
    }

    // Im(K v) already lies in the extended span: keep only the relation for
    // the real component (rank-1 fallback)
    Eigen::VectorXd t1 = Eigen::VectorXd::Zero(m + 2);
    t1.head(m + 1) = gre.coeffs;
    t1(m + 1) = gre.rnorm;
    const Eigen::VectorXd t2 = gim.coeffs;  // size m+2, no residual column

    Eigen::MatrixXd that = Eigen::MatrixXd::Zero(m + 2, m + 1);
    that.topLeftCorner(m, m) = dec.T;
    that.col(m) = t1;
    Eigen::MatrixXd hhat = Eigen::MatrixXd::Zero(m + 2, m + 1);
    hhat.topLeftCorner(m + 1, m) = dec.H;
    hhat.col(m) = rho * t1 - eta * t2;
    hhat(m, m) += 1.0;

    commit_extension(dec, that, hhat, {v_re}, F.shift(), false);
    trace_step(opts.trace, F.shift(), 1, gre.rnorm, 0, "im-component-dependent");
    return StepResult::deflated;
  }

  // Re(K v) is dependent; try the imaginary component alone
  const GramSchmidt gim = cgs2(dec.V, wi);
  const bool im_dependent = gim.rnorm <= kBreakdownTol * gim.wnorm;
  if (im_dependent) {
    if (!opts.breakdown_rng) {
      trace_step(opts.trace, F.shift(), 0, std::max(gre.rnorm, gim.rnorm), 0, "breakdown");
      return StepResult::breakdown;
    }
    // both components in span: inject a fresh direction, keep the real
    // component's relation with zero coupling
    const Eigen::VectorXd v_new = random_orthonormal(dec.V, *opts.breakdown_rng);
    Eigen::VectorXd t1 = Eigen::VectorXd::Zero(m + 2);
    t1.head(m + 1) = gre.coeffs;
    Eigen::VectorXd t2 = Eigen::VectorXd::Zero(m + 2);
    t2.head(m + 1) = gim.coeffs;

    Eigen::MatrixXd that = Eigen::MatrixXd::Zero(m + 2, m + 1);
    that.topLeftCorner(m, m) = dec.T;
    that.col(m) = t1;
    Eigen::MatrixXd hhat = Eigen::MatrixXd::Zero(m + 2, m + 1);
    hhat.topLeftCorner(m + 1, m) = dec.H;
    hhat.col(m) = rho * t1 - eta * t2;
    hhat(m, m) += 1.0;

    commit_extension(dec, that, hhat, {v_new}, F.shift(), false);
    trace_step(opts.trace, F.shift(), 1, 0.0, 0, "breakdown-injected");
    return StepResult::deflated;
  }

  const Eigen::VectorXd v_im = gim.residual / gim.rnorm;
  Eigen::VectorXd t1 = Eigen::VectorXd::Zero(m + 2);
  t1.head(m + 1) = gre.coeffs;
  Eigen::VectorXd t2 = Eigen::VectorXd::Zero(m + 2);
  t2.head(m + 1) = gim.coeffs;
  t2(m + 1) = gim.rnorm;

  Eigen::MatrixXd that = Eigen::MatrixXd::Zero(m + 2, m + 1);
  that.topLeftCorner(m, m) = dec.T;
  that.col(m) = t2;
  Eigen::MatrixXd hhat = Eigen::MatrixXd::Zero(m + 2, m + 1);
  hhat.topLeftCorner(m + 1, m) = dec.H;
  hhat.col(m) = eta * t1 + rho * t2;

  commit_extension(dec, that, hhat, {v_im}, F.shift(), false);
  trace_step(opts.trace, F.shift(), 1, gim.rnorm, 0, "re-component-dependent");
  return StepResult::deflated;
}

const ShiftedFactorization& FactorizationCache::get(Complex zeta) {
  for (const auto& [key, fac] : entries_) {
    if (key == zeta) return *fac;
  }
  entries_.emplace_back(zeta, std::make_unique<ShiftedFactorization>(*lin_, zeta));
  return *entries_.back().second;
}

ExpandOutcome expand(RationalKrylovDecomposition& dec, std::span<const Complex> plan,
                     int target_m, FactorizationCache& cache,
                     const ExpandOptions& opts) {
  if (plan.empty()) throw std::invalid_argument("expand: empty shift plan");
  ExpandOutcome out;
  size_t idx = 0;
  while (dec.size() < target_m) {
    const Complex zeta = plan[std::min(idx, plan.size() - 1)];
    ++idx;
    const ShiftedFactorization& fac = cache.get(zeta);
    const StepResult step = (fac.shift_class() == ShiftClass::general)
                                ? expand_complex_shift(dec, fac, opts)
                                : expand_real_shift(dec, fac, opts);
    if (step == StepResult::breakdown) {
      out.hit_breakdown = true;
      break;
    }
  }
  out.size = dec.size();
  return out;
}

}  // namespace teven
