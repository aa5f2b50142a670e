#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "support.hpp"
#include "teven/ratarnoldi.hpp"

using namespace teven;
using testsupport::make_rng;
using testsupport::match_multisets;

namespace {

/// Structured extension pair for the single-column chase: T upper-triangular
/// with the (m+1, m) / (m+2, m) tail, Hbar Hessenberg with the extra
/// (m+2, m+1) entry.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> random_real_extension(
    int m, std::mt19937_64& rng) {
  Eigen::MatrixXd that = Eigen::MatrixXd::Zero(m + 2, m + 1);
  Eigen::MatrixXd hhat = Eigen::MatrixXd::Zero(m + 2, m + 1);
  for (int j = 0; j <= m; ++j) {
    for (int i = 0; i <= std::min(j, m + 1); ++i) that(i, j) = testsupport::uniform(rng);
    for (int i = 0; i <= std::min(j + 1, m + 1); ++i) hhat(i, j) = testsupport::uniform(rng);
  }
  that(m + 1, m) = testsupport::uniform(rng);
  hhat(m + 1, m) = testsupport::uniform(rng);
  return {that, hhat};
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> random_complex_extension(
    int m, std::mt19937_64& rng) {
  Eigen::MatrixXd that = Eigen::MatrixXd::Zero(m + 3, m + 2);
  Eigen::MatrixXd hhat = Eigen::MatrixXd::Zero(m + 3, m + 2);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i <= j; ++i) that(i, j) = testsupport::uniform(rng);
    for (int i = 0; i <= j + 1; ++i) hhat(i, j) = testsupport::uniform(rng);
  }
  for (int j : {m, m + 1}) {
    for (int i = 0; i <= m + 1; ++i) {
      that(i, j) = testsupport::uniform(rng);
      hhat(i, j) = testsupport::uniform(rng);
    }
  }
  that(m + 2, m + 1) = testsupport::uniform(rng);
  that(m + 2, m) = 0.0;
  hhat(m + 2, m) = testsupport::uniform(rng);
  hhat(m + 2, m + 1) = testsupport::uniform(rng);
  return {that, hhat};
}

void check_chase_postconditions(const Eigen::MatrixXd& that, const Eigen::MatrixXd& hhat,
                                const ChaseResult& res) {
  const Eigen::Index rows = that.rows();
  const Eigen::Index cols = that.cols();
  // orthogonality
  CHECK((res.Q.transpose() * res.Q - Eigen::MatrixXd::Identity(rows, rows)).norm() <=
        1e-13 * static_cast<double>(rows));
  CHECK((res.Z.transpose() * res.Z - Eigen::MatrixXd::Identity(cols, cols)).norm() <=
        1e-13 * static_cast<double>(cols));
  // transformation consistency: Q That Z = [T; 0], Q Hhat Z = Hbar
  Eigen::MatrixXd t_full(rows, cols);
  t_full.topRows(cols) = res.T;
  t_full.row(rows - 1).setZero();
  CHECK((res.Q * that * res.Z - t_full).norm() <= 1e-13 * (1.0 + that.norm()));
  CHECK((res.Q * hhat * res.Z - res.Hbar).norm() <= 1e-13 * (1.0 + hhat.norm()));
  // round trip
  CHECK((res.Q.transpose() * t_full * res.Z.transpose() - that).norm() <=
        1e-13 * (1.0 + that.norm()));
  // exact zero patterns
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = j + 1; i < cols; ++i) CHECK(res.T(i, j) == 0.0);
    for (Eigen::Index i = j + 2; i < rows; ++i) CHECK(res.Hbar(i, j) == 0.0);
  }
}

/// Small odd-degree instance with invertible leading coefficient (n even).
MatrixPolynomial invertible_leading_instance(Eigen::Index n, int deg,
                                             std::mt19937_64& rng) {
  for (int attempt = 0; attempt < 50; ++attempt) {
    auto P = testsupport::random_t_even(n, deg, rng);
    if (std::abs(P.coeff(deg).determinant()) > 1e-3) return P;
  }
  throw std::runtime_error("no invertible leading coefficient found");
}

}  // namespace

TEST_CASE("init") {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(6);
  v(0) = 1.0;
  SUBCASE("unit vector accepted") {
    const auto dec = RationalKrylovDecomposition::init(v);
    CHECK(dec.size() == 0);
    CHECK(dec.V.cols() == 1);
    CHECK(dec.H.rows() == 1);
  }
  SUBCASE("random normalized vector keeps orthonormality") {
    auto rng = make_rng(77);
    Eigen::VectorXd w = testsupport::random_matrix(6, rng).col(0);
    w /= w.norm();
    const auto dec = RationalKrylovDecomposition::init(w);
    CHECK(std::abs(dec.V.col(0).norm() - 1.0) <= 1e-14);
  }
  SUBCASE("unnormalized and zero vectors rejected") {
    CHECK_THROWS_AS((void)RationalKrylovDecomposition::init(2.0 * v),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)RationalKrylovDecomposition::init(Eigen::VectorXd::Zero(6)),
                    std::invalid_argument);
  }
}

TEST_CASE("bulge_chase_real") {
  auto rng = make_rng(21);
  SUBCASE("m = 0 seed case is a single rotation") {
    Eigen::MatrixXd that(2, 1), hhat(2, 1);
    that << 1.5, 0.5;
    hhat << 1.0, 0.25;
    const auto res = bulge_chase_real(that, hhat);
    CHECK(res.rotations == 1);
    CHECK(res.T(0, 0) == doctest::Approx(std::hypot(1.5, 0.5)));
    check_chase_postconditions(that, hhat, res);
  }
  SUBCASE("random structured inputs") {
    for (int m : {1, 2, 3, 5, 8}) {
      for (int trial = 0; trial < 10; ++trial) {
        const auto [that, hhat] = random_real_extension(m, rng);
        const auto res = bulge_chase_real(that, hhat);
        check_chase_postconditions(that, hhat, res);
      }
    }
  }
  SUBCASE("zero tail is a no-op") {
    auto [that, hhat] = random_real_extension(3, rng);
    that(4, 3) = 0.0;
    hhat(4, 3) = 0.0;
    const auto res = bulge_chase_real(that, hhat);
    CHECK(res.rotations == 0);
    CHECK((res.T - that.topRows(4)).norm() == 0.0);
  }
}

TEST_CASE("bulge_chase_complex") {
  auto rng = make_rng(22);
  SUBCASE("random structured inputs") {
    for (int m : {0, 1, 2, 3, 5, 8}) {
      for (int trial = 0; trial < 10; ++trial) {
        const auto [that, hhat] = random_complex_extension(m, rng);
        const auto res = bulge_chase_complex(that, hhat);
        check_chase_postconditions(that, hhat, res);
      }
    }
  }
}

TEST_CASE("expand_real_shift") {
  auto rng = make_rng(23);
  SUBCASE("single step keeps the decomposition relation") {
    const auto P = invertible_leading_instance(4, 5, rng);
    const EvenLinearization lin(P);
    const Eigen::MatrixXd gsq = testsupport::materialize_gsq(lin);
    Eigen::VectorXd v1 = testsupport::random_matrix(lin.dim(), rng).col(0);
    v1 /= v1.norm();
    auto dec = RationalKrylovDecomposition::init(v1);
    const ShiftedFactorization fac(lin, Complex(0.7, 0.0));
    CHECK(expand_real_shift(dec, fac) == StepResult::grown);
    CHECK(dec.size() == 1);
    const double scale = testsupport::residual_scale(gsq, dec.T, dec.H);
    CHECK(testsupport::decomposition_residual(gsq, dec.V, dec.T, dec.H) <=
          1e-10 * scale);
  }
  SUBCASE("structure after each step is exact") {
    const auto P = testsupport::random_t_even(3, 4, rng);
    const EvenLinearization lin(P);
    Eigen::VectorXd v1 = testsupport::random_matrix(lin.dim(), rng).col(0);
    v1 /= v1.norm();
    auto dec = RationalKrylovDecomposition::init(v1);
    const ShiftedFactorization fac(lin, Complex(0.0, 0.8));
    for (int step = 0; step < 5; ++step) {
      REQUIRE(expand_real_shift(dec, fac) == StepResult::grown);
      const int m = dec.size();
      for (int j = 0; j < m; ++j) {
        for (int i = j + 1; i < m; ++i) CHECK(dec.T(i, j) == 0.0);
        for (int i = j + 2; i < m + 1; ++i) CHECK(dec.H(i, j) == 0.0);
      }
      CHECK((dec.V.transpose() * dec.V -
             Eigen::MatrixXd::Identity(m + 1, m + 1)).cwiseAbs().maxCoeff() <=
            1e-12 * (m + 1));
    }
  }
  SUBCASE("invariant subspace: pencil matches the exact K spectrum") {
    // dn = 12 with 6 distinct theta values: the 6-step space is invariant,
    // so the Ritz values coincide with the exact transformed spectrum
    const auto P = invertible_leading_instance(4, 3, rng);
    const EvenLinearization lin(P);
    const double xi = 0.6;
    const ShiftedFactorization fac(lin, Complex(xi, 0.0));
    Eigen::VectorXd v1 = testsupport::random_matrix(lin.dim(), rng).col(0);
    v1 /= v1.norm();
    auto dec = RationalKrylovDecomposition::init(v1);
    for (int step = 0; step < 6; ++step) {
      REQUIRE(expand_real_shift(dec, fac) == StepResult::grown);
    }
    const auto ritz = testsupport::pencil_eigs(dec.T, dec.H.topRows(6));
    // exact values: theta = xi^2 + 1/tau over the K spectrum
    const Eigen::MatrixXd gsq = testsupport::materialize_gsq(lin);
    const Eigen::MatrixXd kmat =
        (gsq - xi * xi * Eigen::MatrixXd::Identity(12, 12)).inverse();
    Eigen::EigenSolver<Eigen::MatrixXd> es(kmat);
    std::vector<Complex> expected;
    for (int i = 0; i < 12; ++i) {
      const Complex theta = xi * xi + 1.0 / es.eigenvalues()(i);
      bool seen = false;
      for (Complex e : expected) {
        if (std::abs(e - theta) <= 1e-6 * std::abs(theta)) seen = true;
      }
      if (!seen) expected.push_back(theta);
    }
    CHECK(match_multisets(ritz, expected) <= 1e-9);
  }
  SUBCASE("happy breakdown is signaled and nothing is appended") {
    // start from an exact eigenvector of K
    const auto P = invertible_leading_instance(4, 3, rng);
    const EvenLinearization lin(P);
    const double xi = 0.5;
    const Eigen::MatrixXd gsq = testsupport::materialize_gsq(lin);
    const Eigen::MatrixXd kmat =
        (gsq - xi * xi * Eigen::MatrixXd::Identity(12, 12)).inverse();
    Eigen::EigenSolver<Eigen::MatrixXd> es(kmat);
    int real_idx = -1;
    for (int i = 0; i < 12; ++i) {
      if (std::abs(es.eigenvalues()(i).imag()) < 1e-12) real_idx = i;
    }
    REQUIRE(real_idx >= 0);
    Eigen::VectorXd v1 = es.eigenvectors().col(real_idx).real();
    v1 /= v1.norm();
    auto dec = RationalKrylovDecomposition::init(v1);
    const ShiftedFactorization fac(lin, Complex(xi, 0.0));
    CHECK(expand_real_shift(dec, fac) == StepResult::breakdown);
    CHECK(dec.size() == 0);
    // with an injection RNG the step is absorbed instead
    std::mt19937_64 rng2(5);
    ExpandOptions opts;
    opts.breakdown_rng = &rng2;
    CHECK(expand_real_shift(dec, fac, opts) == StepResult::deflated);
    CHECK(dec.size() == 1);
    CHECK(dec.H(1, 0) == 0.0);  // zero coupling row
    CHECK(std::abs(dec.V.col(1).dot(dec.V.col(0))) <= 1e-12);
  }
}

TEST_CASE("expand_complex_shift") {
  auto rng = make_rng(24);
  SUBCASE("grows by two and keeps the relation") {
    const auto P = invertible_leading_instance(4, 5, rng);
    const EvenLinearization lin(P);
    const Eigen::MatrixXd gsq = testsupport::materialize_gsq(lin);
    Eigen::VectorXd v1 = testsupport::random_matrix(lin.dim(), rng).col(0);
    v1 /= v1.norm();
    auto dec = RationalKrylovDecomposition::init(v1);
    const ShiftedFactorization fac(lin, Complex(0.5, 2.0));
    for (int step = 0; step < 3; ++step) {
      REQUIRE(expand_complex_shift(dec, fac) == StepResult::grown);
      CHECK(dec.size() == 2 * (step + 1));
      const double scale = testsupport::residual_scale(gsq, dec.T, dec.H);
      CHECK(testsupport::decomposition_residual(gsq, dec.V, dec.T, dec.H) <=
            1e-9 * scale);
      const int m = dec.size();
      for (int j = 0; j < m; ++j) {
        for (int i = j + 1; i < m; ++i) CHECK(dec.T(i, j) == 0.0);
        for (int i = j + 2; i < m + 1; ++i) CHECK(dec.H(i, j) == 0.0);
      }
    }
  }
  SUBCASE("pre-chase split relations hold") {
    // re-derive the raw extension pair in the test and verify
    // G^2 Vhat t1 = Vhat (e_{m+1} + rho t1 - eta t2) with materialized G^2
    const auto P = invertible_leading_instance(4, 5, rng);
    const EvenLinearization lin(P);
    const Eigen::MatrixXd gsq = testsupport::materialize_gsq(lin);
    Eigen::VectorXd v1 = testsupport::random_matrix(lin.dim(), rng).col(0);
    v1 /= v1.norm();
    const Complex xi(0.5, 2.0);
    const ShiftedFactorization fac(lin, xi);
    const Eigen::VectorXcd w = fac.apply_k(v1);
    // orthogonalize the real part, then the imaginary part
    Eigen::MatrixXd V(lin.dim(), 3);
    V.col(0) = v1;
    Eigen::VectorXd wr = w.real();
    const double t11 = v1.dot(wr);
    Eigen::VectorXd r1 = wr - t11 * v1;
    const double t21 = r1.norm();
    V.col(1) = r1 / t21;
    Eigen::VectorXd wi = w.imag();
    const double s1 = V.col(0).dot(wi);
    const double s2 = V.col(1).dot(wi);
    Eigen::VectorXd r2 = wi - s1 * V.col(0) - s2 * V.col(1);
    const double t32 = r2.norm();
    V.col(2) = r2 / t32;
    Eigen::Vector3d t1(t11, t21, 0.0);
    Eigen::Vector3d t2(s1, s2, t32);
    const double rho = (xi * xi).real();
    const double eta = (xi * xi).imag();
    const Eigen::VectorXd lhs1 = gsq * V * t1;
    const Eigen::VectorXd rhs1 = V * (Eigen::Vector3d::Unit(0) + rho * t1 - eta * t2);
    CHECK((lhs1 - rhs1).norm() <= 1e-10 * (1.0 + lhs1.norm()));
    const Eigen::VectorXd lhs2 = gsq * V * t2;
    const Eigen::VectorXd rhs2 = V * (eta * t1 + rho * t2);
    CHECK((lhs2 - rhs2).norm() <= 1e-10 * (1.0 + lhs2.norm()));
  }
  SUBCASE("dependent imaginary component falls back to one column") {
    // dn = 4 with doubled eigenvalues: G^2 has two distinct values, so the
    // Krylov grade is 2. The real component takes the last free direction
    // and the imaginary one must deflate.
    const auto P = invertible_leading_instance(4, 1, rng);
    const EvenLinearization lin(P);
    Eigen::VectorXd v1 = testsupport::random_matrix(4, rng).col(0);
    v1 /= v1.norm();
    auto dec = RationalKrylovDecomposition::init(v1);
    const ShiftedFactorization fac(lin, Complex(0.4, 0.9));
    REQUIRE(expand_complex_shift(dec, fac) == StepResult::deflated);
    CHECK(dec.size() == 1);
    CHECK((dec.V.transpose() * dec.V - Eigen::MatrixXd::Identity(2, 2)).norm() <=
          1e-12);
    // the two-column space is now K-invariant: full breakdown is signaled
    CHECK(expand_complex_shift(dec, fac) == StepResult::breakdown);
    CHECK(dec.size() == 1);
    // residual check against the materialized operator
    const Eigen::MatrixXd gsq = testsupport::materialize_gsq(lin);
    const double scale = testsupport::residual_scale(gsq, dec.T, dec.H);
    CHECK(testsupport::decomposition_residual(gsq, dec.V, dec.T, dec.H) <=
          1e-10 * scale);
  }
  SUBCASE("dependent real component keeps the imaginary relation") {
    // constructed so that Re(K v1) is parallel to v1 while Im(K v1) is not:
    // with A = G^2 - rho I, Re(Kv) = A u and Im(Kv) = eta u, pick G^2
    // eigenvalues g1, g2 and rho, eta with (g1-rho)(g2-rho) = eta^2 and
    // v1 ~ (g1-rho) q1 + (g2-rho) q2.
    const Eigen::MatrixXd J =
        (Eigen::MatrixXd(4, 4) << 0, 1, 0, 0, -1, 0, 0, 0, 0, 0, 0, 2, 0, 0, -2, 0)
            .finished();
    std::vector<Eigen::MatrixXd> coeffs(2);
    coeffs[0] = (Eigen::VectorXd(4) << 1.0, 1.0, 3.0, 0.5).finished().asDiagonal();
    coeffs[1] = J;
    const MatrixPolynomial P{std::move(coeffs)};
    const EvenLinearization lin(P);
    const Eigen::MatrixXd gsq = testsupport::materialize_gsq(lin);
    Eigen::EigenSolver<Eigen::MatrixXd> es(gsq);
    // two distinct real eigenvalues with real eigenvectors
    int i1 = -1, i2 = -1;
    for (int i = 0; i < 4; ++i) {
      if (std::abs(es.eigenvalues()(i).imag()) > 1e-10) continue;
      if (i1 < 0) {
        i1 = i;
      } else if (std::abs(es.eigenvalues()(i).real() -
                          es.eigenvalues()(i1).real()) > 1e-6 && i2 < 0) {
        i2 = i;
      }
    }
    REQUIRE(i1 >= 0);
    REQUIRE(i2 >= 0);
    const double g1 = es.eigenvalues()(i1).real();
    const double g2 = es.eigenvalues()(i2).real();
    const Eigen::VectorXd q1 = es.eigenvectors().col(i1).real();
    const Eigen::VectorXd q2 = es.eigenvectors().col(i2).real();
    const double rho = std::min(g1, g2) - 1.0;
    const double eta = std::sqrt((g1 - rho) * (g2 - rho));
    const Complex xi = std::sqrt(Complex(rho, eta));
    Eigen::VectorXd v1 = (g1 - rho) * q1 + (g2 - rho) * q2;
    v1 /= v1.norm();
    auto dec = RationalKrylovDecomposition::init(v1);
    const ShiftedFactorization fac(lin, xi);
    REQUIRE(fac.shift_class() == ShiftClass::general);
    CHECK(expand_complex_shift(dec, fac) == StepResult::deflated);
    CHECK(dec.size() == 1);
    const double scale = testsupport::residual_scale(gsq, dec.T, dec.H);
    CHECK(testsupport::decomposition_residual(gsq, dec.V, dec.T, dec.H) <=
          1e-10 * scale);
  }
}

TEST_CASE("expand driver") {
  auto rng = make_rng(25);
  SUBCASE("mixed plan reuses factorizations") {
    const auto P = invertible_leading_instance(4, 5, rng);
    const EvenLinearization lin(P);
    const Eigen::MatrixXd gsq = testsupport::materialize_gsq(lin);
    Eigen::VectorXd v1 = testsupport::random_matrix(lin.dim(), rng).col(0);
    v1 /= v1.norm();
    auto dec = RationalKrylovDecomposition::init(v1);
    FactorizationCache cache(lin);
    const long before = ShiftedFactorization::total_factorizations();
    const std::vector<Complex> plan = {
        {0.7, 0.0}, {0.7, 0.0}, {0.0, 2.0}, {0.5, 2.0}};
    const auto out = expand(dec, plan, 5, cache, {});
    CHECK_FALSE(out.hit_breakdown);
    CHECK(out.size == 5);  // 1 + 1 + 1 + 2
    CHECK(ShiftedFactorization::total_factorizations() - before == 3);
    CHECK(cache.factorizations() == 3);
    CHECK(dec.shifts.size() == 4);
    const double scale = testsupport::residual_scale(gsq, dec.T, dec.H);
    CHECK(testsupport::decomposition_residual(gsq, dec.V, dec.T, dec.H) <=
          1e-9 * scale);
  }
  SUBCASE("orthonormality drift stays bounded over 30 steps") {
    const auto P = invertible_leading_instance(6, 7, rng);  // dn = 42
    const EvenLinearization lin(P);
    Eigen::VectorXd v1 = testsupport::random_matrix(lin.dim(), rng).col(0);
    v1 /= v1.norm();
    auto dec = RationalKrylovDecomposition::init(v1);
    FactorizationCache cache(lin);
    const std::vector<Complex> plan = {{0.7, 0.0}, {0.0, 1.1}, {0.4, 0.8}, {1.2, 0.0}};
    const auto out = expand(dec, plan, 30, cache, {});
    CHECK(out.size >= 30);
    const int m = dec.size();
    CHECK((dec.V.transpose() * dec.V -
           Eigen::MatrixXd::Identity(m + 1, m + 1)).cwiseAbs().maxCoeff() <=
          1e-12 * (m + 1));
    const Eigen::MatrixXd gsq = testsupport::materialize_gsq(lin);
    const double scale = testsupport::residual_scale(gsq, dec.T, dec.H);
    CHECK(testsupport::decomposition_residual(gsq, dec.V, dec.T, dec.H) <=
          1e-9 * scale);
  }
}
