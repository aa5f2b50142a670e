#include "teven/krylovschur.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "teven/densekernels.hpp"

namespace teven {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd random_unit(Eigen::Index dim, std::mt19937_64& rng) {
  Eigen::VectorXd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    v(i) = 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
  }
  return v / v.norm();
}

void note(SolverState& st, const std::string& text) {
  if (st.events) st.events->push_back(text);
}

/// theta of the diagonal block at global position g (size 1 or 2).
Complex block_theta_at(const RationalKrylovDecomposition& dec, int g, int size) {
  const auto theta = dense::block_eigenvalues(dec.H.block(g, g, size, size),
                                              dec.T.block(g, g, size, size));
  // for a 2x2 pair return the representative with nonnegative imaginary part
  if (size == 2 && theta[0].imag() < theta[1].imag()) return theta[1];
  return theta[0];
}

bool infinite_candidate(Complex theta, double tol_inf) {
  return !std::isfinite(theta.real()) || !std::isfinite(theta.imag()) ||
         std::abs(theta) > 1.0 / tol_inf;
}

}  // namespace

std::pair<int, RationalKrylovDecomposition> deflate_infinity(
    const EvenLinearization& lin, double rank_tol, std::uint64_t seed) {
  const Eigen::Index n = lin.order();
  const int deg = lin.polynomial().degree();
  const Eigen::MatrixXd null_basis =
      dense::nullspace(lin.polynomial().coeff(deg), rank_tol);
  const int t = static_cast<int>(null_basis.cols());
  if (t == static_cast<int>(n)) {
    throw InputError("leading coefficient is zero: the declared degree overstates P");
  }

  std::mt19937_64 rng(seed);
  RationalKrylovDecomposition dec;
  dec.V = Eigen::MatrixXd::Zero(lin.dim(), t + 1);
  dec.V.block(0, 0, n, t) = null_basis;
  if (t == 0) {
    dec.V.col(0) = random_unit(lin.dim(), rng);
  } else {
    // arbitrary orthonormal completion column
    Eigen::VectorXd cand = random_unit(lin.dim(), rng);
    cand -= dec.V.leftCols(t) * (dec.V.leftCols(t).transpose() * cand);
    cand -= dec.V.leftCols(t) * (dec.V.leftCols(t).transpose() * cand);
    dec.V.col(t) = cand / cand.norm();
  }
  dec.T = Eigen::MatrixXd::Zero(t, t);
  dec.H = Eigen::MatrixXd::Zero(t + 1, t);
  dec.H.topLeftCorner(t, t).setIdentity();
  dec.locked = t;
  return {t, std::move(dec)};
}

std::pair<Complex, Complex> back_transform(Complex theta_pencil) {
  const Complex mu = std::sqrt(theta_pencil);
  return {mu, -mu};
}

void expand_phase(SolverState& st, const SolverConfig& cfg) {
  const int target = static_cast<int>(
      std::min<Eigen::Index>(st.target_locked + cfg.extension, st.dec.dim() - 1));
  ExpandOptions opts;
  opts.trace = st.trace;
  opts.breakdown_rng = &st.rng;
  for (int attempt = 1;; ++attempt) {
    try {
      const Complex plan[1] = {st.shift};
      expand(st.dec, plan, target, *st.cache, opts);
      return;
    } catch (const ShiftOnSpectrumError& e) {
      if (attempt >= 3) throw;
      const Complex old = st.shift;
      st.shift = (std::abs(old) == 0.0) ? Complex(0.01, 0.0) : old * 1.01;
      note(st, "shift " + std::to_string(old.real()) + "+" +
                   std::to_string(old.imag()) + "i on spectrum; nudged");
    }
  }
}

void schur_reorder(SolverState& st, const SolverConfig& cfg) {
  auto& dec = st.dec;
  const int s = dec.locked;
  const int m = dec.size();
  const int k = m - s;
  if (k <= 0) return;

  dense::GeneralizedSchur gs =
      dense::qz(dec.T.block(s, s, k, k), dec.H.block(s, s, k, k));

  const Complex mu0 =
      (cfg.target != Complex(0.0, 0.0)) ? cfg.target : cfg.initial_shift;
  const Complex mu0_sq = mu0 * mu0;
  const double tol_inf = cfg.tol_inf;
  const auto key = [&](Complex theta) -> double {
    if (infinite_candidate(theta, tol_inf)) return -kInf;
    if (cfg.selector == RitzSelector::target_proximity) {
      return -std::abs(theta - mu0_sq);
    }
    return std::abs(theta);
  };
  if (!dense::sort_blocks_descending(gs, key)) {
    note(st, "reorder: ill-conditioned block swap left in place");
  }

  dec.T.block(s, s, k, k) = gs.S;
  dec.H.block(s, s, k, k) = gs.R;
  if (s > 0) {
    const Eigen::MatrixXd tz = dec.T.block(0, s, s, k) * gs.Z;
    dec.T.block(0, s, s, k) = tz;
    const Eigen::MatrixXd hz = dec.H.block(0, s, s, k) * gs.Z;
    dec.H.block(0, s, s, k) = hz;
  }
  const Eigen::MatrixXd bz = dec.H.block(m, s, 1, k) * gs.Z;
  dec.H.block(m, s, 1, k) = bz;
  const Eigen::MatrixXd vq = dec.V.middleCols(s, k) * gs.Q;
  dec.V.middleCols(s, k) = vq;
}

int lock_phase(SolverState& st, const SolverConfig& cfg) {
  auto& dec = st.dec;
  const int s0 = dec.locked;
  const int m = dec.size();
  const int k = m - s0;
  st.lead_valid = false;
  const double tol =
      cfg.tol_lock * (cfg.relative_lock_tol ? dec.H.norm() : 1.0);

  int locked_now = 0;
  int i = 0;
  while (i < k) {
    const int g = s0 + i;
    const int size = (i + 1 < k && dec.H(g + 1, g) != 0.0) ? 2 : 1;
    const Complex theta = block_theta_at(dec, g, size);
    if (infinite_candidate(theta, cfg.tol_inf)) break;  // never lock these
    const double resid =
        (size == 1) ? std::abs(dec.H(m, g))
                    : std::hypot(dec.H(m, g), dec.H(m, g + 1));
    if (resid < tol) {
      dec.H(m, g) = 0.0;
      if (size == 2) dec.H(m, g + 1) = 0.0;
      st.blocks.push_back({g, size, st.cycle, resid, false});
      locked_now += size;
      i += size;
    } else {
      st.lead_theta = theta;
      st.lead_residual = std::abs(dec.H(m, g));  // first residual entry
      st.lead_valid = true;
      break;
    }
  }
  dec.locked = s0 + locked_now;
  return locked_now;
}

void truncate_phase(SolverState& st, const SolverConfig& cfg) {
  (void)cfg;
  auto& dec = st.dec;
  const int m = dec.size();
  int keep = st.target_locked;
  if (keep >= m) return;
  if (dec.H(keep, keep - 1) != 0.0) keep += 1;  // do not split a 2x2 block
  if (keep >= m) return;

  Eigen::MatrixXd v(dec.V.rows(), keep + 1);
  v.leftCols(keep) = dec.V.leftCols(keep);
  v.col(keep) = dec.V.col(m);  // last basis column is still untouched
  Eigen::MatrixXd t = dec.T.topLeftCorner(keep, keep);
  Eigen::MatrixXd h(keep + 1, keep);
  h.topRows(keep) = dec.H.topLeftCorner(keep, keep);
  h.row(keep) = dec.H.block(m, 0, 1, keep);
  dec.V = std::move(v);
  dec.T = std::move(t);
  dec.H = std::move(h);
}

void recover_phase(SolverState& st) {
  auto& dec = st.dec;
  const int s = dec.locked;
  const int m = dec.size();
  const int k = m - s;
  if (k <= 1) return;

  Eigen::MatrixXd T = dec.T.block(s, s, k, k);
  Eigen::MatrixXd H = dec.H.block(s, s, k, k);
  Eigen::MatrixXd B = dec.H.block(m, s, 1, k);
  Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(k, k);
  Eigen::MatrixXd Z = Eigen::MatrixXd::Identity(k, k);

  auto left_kill_t = [&](int i, int col) {
    const dense::Givens g = dense::make_givens(T(i, col), T(i + 1, col));
    if (g.trivial) return false;
    dense::rotate_rows(T, i, i + 1, g);
    dense::rotate_rows(H, i, i + 1, g);
    dense::rotate_rows(Q, i, i + 1, g);
    T(i + 1, col) = 0.0;
    return true;
  };
  auto right_kill_h = [&](int row, int j) {
    // zero H(row, j) against H(row, j+1)
    const dense::Givens g = dense::make_givens(H(row, j + 1), H(row, j));
    if (g.trivial) return false;
    dense::rotate_cols(H, j + 1, j, g);
    dense::rotate_cols(T, j + 1, j, g);
    dense::rotate_cols(B, j + 1, j, g);
    dense::rotate_cols(Z, j + 1, j, g);
    H(row, j) = 0.0;
    return true;
  };
  auto right_kill_b = [&](int j) {
    const dense::Givens g = dense::make_givens(B(0, j + 1), B(0, j));
    if (g.trivial) return false;
    dense::rotate_cols(H, j + 1, j, g);
    dense::rotate_cols(T, j + 1, j, g);
    dense::rotate_cols(B, j + 1, j, g);
    dense::rotate_cols(Z, j + 1, j, g);
    B(0, j) = 0.0;
    return true;
  };
  // third-subdiagonal bulge at (j, j-3): chase it off the top-left corner
  auto inner_chase = [&](int j) {
    while (j - 3 >= 0) {
      if (!right_kill_h(j, j - 3)) break;
      left_kill_t(j - 3, j - 3);
      j -= 2;
    }
  };

  // sweep B to h*e_k^T; fill accumulates on the second subdiagonal of H
  for (int t = 0; t + 1 < k; ++t) {
    if (!right_kill_b(t)) continue;
    left_kill_t(t, t);
    inner_chase(t + 1);
  }
  // eliminate the second subdiagonal bottom-up; neither the last row nor the
  // last column is touched, so B keeps its recovered form
  for (int i = k - 1; i >= 2; --i) {
    if (H(i, i - 2) == 0.0) continue;
    if (!right_kill_h(i, i - 2)) continue;
    left_kill_t(i - 2, i - 2);
    inner_chase(i - 1);
  }

  dec.T.block(s, s, k, k) = T;
  dec.H.block(s, s, k, k) = H;
  dec.H.block(m, s, 1, k) = B;
  if (s > 0) {
    const Eigen::MatrixXd tz = dec.T.block(0, s, s, k) * Z;
    dec.T.block(0, s, s, k) = tz;
    const Eigen::MatrixXd hz = dec.H.block(0, s, s, k) * Z;
    dec.H.block(0, s, s, k) = hz;
  }
  const Eigen::MatrixXd vq = dec.V.middleCols(s, k) * Q.transpose();
  dec.V.middleCols(s, k) = vq;
}

Complex choose_shift(const SolverState& st, const SolverConfig& cfg) {
  switch (cfg.strategy) {
    case ShiftStrategy::fixed:
    case ShiftStrategy::target:
      return st.shift;
    case ShiftStrategy::aggressive:
      return st.lead_valid ? std::sqrt(st.lead_theta) : st.shift;
    case ShiftStrategy::lazy:
      if (st.lead_valid && st.lead_residual >= cfg.shift_change_threshold) {
        return std::sqrt(st.lead_theta);
      }
      return st.shift;
  }
  return st.shift;
}

namespace {

void validate_config(const SolverConfig& cfg) {
  if (cfg.num_eigenvalues < 1) throw std::invalid_argument("num_eigenvalues must be >= 1");
  if (cfg.extension < 2) throw std::invalid_argument("extension must be >= 2");
  if (!(cfg.tol_lock > 0.0) || !(cfg.shift_change_threshold > 0.0) ||
      !(cfg.tol_inf > 0.0) || !(cfg.rank_tol > 0.0)) {
    throw std::invalid_argument("tolerances must be positive");
  }
  if (cfg.max_cycles < 1) throw std::invalid_argument("max_cycles must be >= 1");
}

void cycle_trace(const SolverState& st, int locked_now) {
  if (!st.trace) return;
  (*st.trace) << "{\"event\":\"cycle\",\"cycle\":" << st.cycle << ",\"shift\":["
              << st.shift.real() << "," << st.shift.imag()
              << "],\"locked\":" << st.dec.locked
              << ",\"lead_resid\":" << (st.lead_valid ? st.lead_residual : 0.0)
              << ",\"locked_this_cycle\":" << locked_now << "}\n";
}

}  // namespace

EigenResult run(const MatrixPolynomial& P, const SolverConfig& cfg,
                const PhaseHook& hook) {
  validate_config(cfg);
  EigenResult result;
  const EvenLinearization lin(P);

  auto [t, dec] = deflate_infinity(lin, cfg.rank_tol, cfg.start_vector_seed);
  SolverState st;
  st.lin = &lin;
  st.dec = std::move(dec);
  FactorizationCache cache(lin);
  st.cache = &cache;
  st.target_locked = t + cfg.num_eigenvalues;
  st.shift = cfg.initial_shift;
  st.rng.seed(cfg.start_vector_seed ^ 0x9e3779b97f4a7c15ull);
  st.events = &result.events;
  st.trace = cfg.trace;
  if (t > 0) {
    st.blocks.push_back({0, t, 0, 0.0, true});
    result.events.push_back("deflated " + std::to_string(t) +
                            " infinite eigendirections of the leading coefficient");
  }
  if (st.target_locked >= lin.dim()) {
    throw std::invalid_argument(
        "requested eigenvalue count exceeds the linearization order");
  }

  for (int cycle = 1; cycle <= cfg.max_cycles; ++cycle) {
    st.cycle = cycle;
    expand_phase(st, cfg);
    if (hook) hook("expand", st);
    schur_reorder(st, cfg);
    if (hook) hook("reorder", st);
    const int locked_now = lock_phase(st, cfg);
    if (hook) hook("lock", st);
    cycle_trace(st, locked_now);
    result.cycles = cycle;
    if (st.dec.locked >= st.target_locked) {
      result.converged = true;
      break;
    }
    if (cycle == cfg.max_cycles) break;
    truncate_phase(st, cfg);
    if (hook) hook("truncate", st);
    recover_phase(st);
    if (hook) hook("recover", st);
    st.shift = choose_shift(st, cfg);
  }

  // assemble: read the locked finite blocks off the (bitwise stable) corner
  for (const auto& block : st.blocks) {
    if (block.infinite) {
      result.infinite_count += block.size;
      continue;
    }
    const auto theta = dense::block_eigenvalues(
        st.dec.H.block(block.start, block.start, block.size, block.size),
        st.dec.T.block(block.start, block.start, block.size, block.size));
    for (int j = 0; j < block.size; ++j) {
      const auto [mu, mu_neg] = back_transform(theta[static_cast<size_t>(j)]);
      (void)mu_neg;
      result.finite_pairs.push_back({mu, block.residual, block.cycle});
    }
  }
  std::sort(result.finite_pairs.begin(), result.finite_pairs.end(),
            [](const EigenPair& a, const EigenPair& b) {
              const double ma = std::abs(a.mu), mb = std::abs(b.mu);
              if (ma != mb) return ma > mb;
              return a.mu.imag() > b.mu.imag();
            });
  if (result.converged &&
      static_cast<int>(result.finite_pairs.size()) > cfg.num_eigenvalues) {
    size_t keep = static_cast<size_t>(cfg.num_eigenvalues);
    // do not split a conjugate pair at the cut
    const Complex a = result.finite_pairs[keep - 1].mu;
    const Complex b = result.finite_pairs[keep].mu;
    if (std::abs(std::abs(a) - std::abs(b)) <= 1e-12 * std::abs(a) &&
        std::abs(b - std::conj(a)) <= 1e-10 * std::abs(a)) {
      ++keep;
    }
    result.finite_pairs.resize(keep);
  }
  result.factorizations = cache.factorizations();
  return result;
}

}  // namespace teven
