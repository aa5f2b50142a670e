#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "teven/ratarnoldi.hpp"

namespace teven {

enum class ShiftStrategy { fixed, aggressive, lazy, target };

/// Which Ritz values count as wanted when reordering.
enum class RitzSelector { largest_magnitude, target_proximity };

struct SolverConfig {
  int num_eigenvalues = 6;        // M: desired count of K-level Ritz values;
                                  // the reported spectrum comes as +-mu pairs
  int extension = 10;             // m - M extra expansion steps per cycle
  double tol_lock = 1e-9;         // |b| locking tolerance
  double shift_change_threshold = 1e-5;
  int max_cycles = 100;
  Complex initial_shift{1.0, 1.0};
  ShiftStrategy strategy = ShiftStrategy::lazy;
  Complex target{};               // used by strategy/target selector
  RitzSelector selector = RitzSelector::largest_magnitude;
  double tol_inf = 1e-8;          // |t_ii| <= tol_inf*|h_ii| marks infinity
  double rank_tol = 1e-10;        // leading-coefficient nullspace threshold
  bool relative_lock_tol = false; // scale tol_lock by ||Hbar||_F
  std::uint64_t start_vector_seed = 0x5eed51u;
  std::ostream* trace = nullptr;
};

struct EigenPair {
  Complex mu;          // principal representative; -mu is implied
  double residual;     // |b| (or the 2x2 pair norm) at lock time
  int cycle_found;
};

struct EigenResult {
  std::vector<EigenPair> finite_pairs;  // sorted by descending |mu|
  int infinite_count = 0;
  bool converged = false;
  int cycles = 0;
  long factorizations = 0;
  std::vector<std::string> events;
};

struct LockedBlock {
  int start;        // global column index in (T, H)
  int size;         // 1 or 2
  int cycle;
  double residual;
  bool infinite;
};

/// Mutable state of one solver run; phases below transform it in place.
struct SolverState {
  const EvenLinearization* lin = nullptr;
  RationalKrylovDecomposition dec;
  FactorizationCache* cache = nullptr;
  Complex shift{};
  int cycle = 0;
  int target_locked = 0;  // t + M
  std::vector<LockedBlock> blocks;
  // first unconverged Ritz block recorded by the locking scan
  Complex lead_theta{};
  double lead_residual = 0.0;
  bool lead_valid = false;
  std::mt19937_64 rng{0x5eed51u};
  std::vector<std::string>* events = nullptr;
  std::ostream* trace = nullptr;
};

using PhaseHook = std::function<void(const std::string& phase, const SolverState&)>;

/// Nullspace deflation of the leading coefficient: seeds the decomposition
/// with t = dim null(P_d) locked infinite directions embedded in the first n
/// coordinates. Throws InputError when t = n (degree misdeclared).
std::pair<int, RationalKrylovDecomposition> deflate_infinity(
    const EvenLinearization& lin, double rank_tol, std::uint64_t seed);

/// theta ~ mu^2 back to the matching pair (+mu, -mu), principal branch.
std::pair<Complex, Complex> back_transform(Complex theta_pencil);

// Restart-cycle phases (exposed for white-box testing).
void expand_phase(SolverState& st, const SolverConfig& cfg);
void schur_reorder(SolverState& st, const SolverConfig& cfg);
int lock_phase(SolverState& st, const SolverConfig& cfg);
void truncate_phase(SolverState& st, const SolverConfig& cfg);
void recover_phase(SolverState& st);
Complex choose_shift(const SolverState& st, const SolverConfig& cfg);

/// Full rational Krylov-Schur run on a T-even polynomial.
EigenResult run(const MatrixPolynomial& P, const SolverConfig& cfg,
                const PhaseHook& hook = {});

}  // namespace teven
