#include "teven/matpoly.hpp"

#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "teven/mmio.hpp"

namespace teven {

namespace {

double symmetry_defect(const std::vector<Eigen::MatrixXd>& coeffs) {
  double defect = 0.0;
  for (size_t k = 0; k < coeffs.size(); ++k) {
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    defect = std::max(
        defect,
        (coeffs[k] - sign * coeffs[k].transpose()).cwiseAbs().maxCoeff());
  }
  return defect;
}

/// Uniform double in [-1, 1), bit-reproducible across platforms.
double symmetric_uniform(std::mt19937_64& eng) {
  return 2.0 * (static_cast<double>(eng() >> 11) * 0x1.0p-53) - 1.0;
}

}  // namespace

MatrixPolynomial::MatrixPolynomial(std::vector<Eigen::MatrixXd> coeffs)
    : coeffs_(std::move(coeffs)) {
  if (coeffs_.empty()) throw InputError("matrix polynomial needs at least one coefficient");
  n_ = coeffs_.front().rows();
  for (const auto& c : coeffs_) {
    if (c.rows() != c.cols()) throw InputError("coefficient matrices must be square");
    if (c.rows() != n_) throw InputError("coefficient matrices must share one order");
  }
  if (coeffs_.back().cwiseAbs().maxCoeff() == 0.0 && coeffs_.size() > 1) {
    throw InputError("leading coefficient is the zero matrix");
  }
  scale_ = 0.0;
  for (const auto& c : coeffs_) scale_ = std::max(scale_, c.cwiseAbs().maxCoeff());
  defect_ = symmetry_defect(coeffs_);
}

StructureReport check_structure(const MatrixPolynomial& P, double tol) {
  StructureReport report;
  report.max_symmetry_defect = P.max_symmetry_defect();
  const double scale = P.coeff_scale() > 0.0 ? P.coeff_scale() : 1.0;
  report.is_t_even = report.max_symmetry_defect <= tol * scale;
  return report;
}

Eigen::MatrixXcd evaluate(const MatrixPolynomial& P, Complex z) {
  Eigen::MatrixXcd acc = P.coeff(P.degree()).cast<Complex>();
  for (int k = P.degree() - 1; k >= 0; --k) {
    acc = z * acc + P.coeff(k).cast<Complex>();
  }
  return acc;
}

Eigen::MatrixXd evaluate(const MatrixPolynomial& P, double z) {
  Eigen::MatrixXd acc = P.coeff(P.degree());
  for (int k = P.degree() - 1; k >= 0; --k) {
    acc = z * acc + P.coeff(k);
  }
  return acc;
}

MatrixPolynomial reversal(const MatrixPolynomial& P) {
  std::vector<Eigen::MatrixXd> rev(P.coeffs().rbegin(), P.coeffs().rend());
  while (rev.size() > 1 && rev.back().cwiseAbs().maxCoeff() == 0.0) {
    rev.pop_back();
  }
  return MatrixPolynomial(std::move(rev));
}

MatrixPolynomial generate_butterfly(int m, const ButterflyConstants& c) {
  if (m < 2) throw InputError("butterfly problem needs m >= 2");
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 2; ++j) {
      if (!(c.c[i][j] > 0.0)) throw InputError("butterfly constants must be positive");
    }
  }
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(m, m);
  Eigen::MatrixXd N = Eigen::MatrixXd::Zero(m, m);
  for (int i = 1; i < m; ++i) N(i, i - 1) = 1.0;  // nilpotent Jordan block

  std::vector<Eigen::MatrixXd> blocks(5);
  blocks[0] = (4.0 * I + N + N.transpose()) / 6.0;
  blocks[1] = N - N.transpose();
  blocks[2] = -(2.0 * I - N - N.transpose());
  blocks[3] = blocks[1];
  blocks[4] = -blocks[2];

  auto kron = [](const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(A.rows() * B.rows(), A.cols() * B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      for (Eigen::Index j = 0; j < A.cols(); ++j) {
        if (A(i, j) == 0.0) continue;  // keep structural zeros at +0.0
        K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
      }
    }
    return K;
  };

  std::vector<Eigen::MatrixXd> coeffs(5);
  for (int i = 0; i < 5; ++i) {
    coeffs[static_cast<size_t>(i)] =
        (c.c[i][0] * kron(I, blocks[static_cast<size_t>(i)]) +
         c.c[i][1] * kron(blocks[static_cast<size_t>(i)], I))
            .unaryExpr([](double x) { return x == 0.0 ? 0.0 : x; });
  }
  return MatrixPolynomial(std::move(coeffs));
}

MatrixPolynomial generate_gyroscopic(int n, std::uint64_t seed) {
  if (n < 2) throw InputError("gyroscopic problem needs n >= 2");
  std::mt19937_64 eng(seed);
  auto random_matrix = [&]() {
    Eigen::MatrixXd A(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) A(i, j) = symmetric_uniform(eng);
    }
    return A;
  };
  const Eigen::MatrixXd A = random_matrix();
  const Eigen::MatrixXd B = random_matrix();
  const Eigen::MatrixXd C = random_matrix();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);

  Eigen::MatrixXd mass = A.transpose() * A + I;
  Eigen::MatrixXd stiffness = B.transpose() * B + I;
  Eigen::MatrixXd gyro = C - C.transpose();
  // enforce exact symmetry (A^T A may carry rounding asymmetry)
  mass = 0.5 * (mass + mass.transpose()).eval();
  stiffness = 0.5 * (stiffness + stiffness.transpose()).eval();

  std::vector<Eigen::MatrixXd> coeffs(3);
  coeffs[0] = stiffness;
  coeffs[1] = gyro;
  coeffs[2] = mass;
  return MatrixPolynomial(std::move(coeffs));
}

MatrixPolynomial read_polynomial(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw InputError("cannot open manifest " + manifest_path.string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed manifest " + manifest_path.string() + ": " + e.what());
  }
  if (!manifest.contains("n") || !manifest.contains("degree") ||
      !manifest.contains("coefficients") || !manifest["coefficients"].is_array()) {
    throw InputError("manifest must provide n, degree and a coefficients array");
  }
  const auto n = manifest["n"].get<Eigen::Index>();
  const auto degree = manifest["degree"].get<int>();
  const auto files = manifest["coefficients"].get<std::vector<std::string>>();
  if (static_cast<int>(files.size()) != degree + 1) {
    throw InputError("manifest lists " + std::to_string(files.size()) +
                     " coefficient files for degree " + std::to_string(degree));
  }
  const auto dir = manifest_path.parent_path();
  std::vector<Eigen::MatrixXd> coeffs;
  coeffs.reserve(files.size());
  for (const auto& f : files) {
    Eigen::MatrixXd c = read_matrix_market(dir / f);
    if (c.rows() != c.cols()) {
      throw InputError("coefficient " + f + " is not square");
    }
    if (c.rows() != n) {
      throw InputError("coefficient " + f + " has order " +
                       std::to_string(c.rows()) + ", manifest says " +
                       std::to_string(n));
    }
    coeffs.push_back(std::move(c));
  }
  return MatrixPolynomial(std::move(coeffs));
}

void write_polynomial(const MatrixPolynomial& P, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["n"] = P.order();
  manifest["degree"] = P.degree();
  std::vector<std::string> files;
  for (int k = 0; k <= P.degree(); ++k) {
    const std::string name = "P" + std::to_string(k) + ".mtx";
    write_matrix_market(P.coeff(k), dir / name,
                        "coefficient of lambda^" + std::to_string(k));
    files.push_back(name);
  }
  manifest["coefficients"] = files;
  std::ofstream out(dir / "manifest.json");
  if (!out) throw InputError("cannot write manifest in " + dir.string());
  out << manifest.dump(2) << "\n";
}

}  // namespace teven
