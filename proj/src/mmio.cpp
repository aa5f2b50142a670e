#include "teven/mmio.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "teven/errors.hpp"

namespace teven {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

Eigen::MatrixXd read_matrix_market(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open matrix file " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw InputError("empty matrix file " + path.string());
  std::istringstream header(line);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket" || lower(object) != "matrix") {
    throw InputError("not a Matrix Market file: " + path.string());
  }
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (field != "real" && field != "integer") {
    throw InputError(path.string() + ": only real matrices are supported");
  }
  if (symmetry != "general" && symmetry != "symmetric" && symmetry != "skew-symmetric") {
    throw InputError(path.string() + ": unsupported symmetry '" + symmetry + "'");
  }

  // skip comments
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '%') break;
  }
  std::istringstream sizes(line);

  if (format == "coordinate") {
    Eigen::Index rows = 0, cols = 0;
    long long nnz = 0;
    if (!(sizes >> rows >> cols >> nnz)) {
      throw InputError(path.string() + ": malformed size line");
    }
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, cols);
    for (long long e = 0; e < nnz; ++e) {
      Eigen::Index i = 0, j = 0;
      double v = 0.0;
      if (!(in >> i >> j >> v)) {
        throw InputError(path.string() + ": truncated entry list");
      }
      if (i < 1 || i > rows || j < 1 || j > cols) {
        throw InputError(path.string() + ": entry index out of range");
      }
      A(i - 1, j - 1) = v;
      if (symmetry == "symmetric" && i != j) A(j - 1, i - 1) = v;
      if (symmetry == "skew-symmetric" && i != j) A(j - 1, i - 1) = -v;
    }
    return A;
  }
  if (format == "array") {
    Eigen::Index rows = 0, cols = 0;
    if (!(sizes >> rows >> cols)) {
      throw InputError(path.string() + ": malformed size line");
    }
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, cols);
    // column-major; symmetric/skew store the lower triangle only
    for (Eigen::Index j = 0; j < cols; ++j) {
      Eigen::Index i0 = (symmetry == "general") ? 0
                        : (symmetry == "symmetric") ? j
                                                    : j + 1;
      for (Eigen::Index i = i0; i < rows; ++i) {
        double v = 0.0;
        if (!(in >> v)) throw InputError(path.string() + ": truncated array data");
        A(i, j) = v;
        if (symmetry == "symmetric") A(j, i) = v;
        if (symmetry == "skew-symmetric") A(j, i) = -v;
      }
    }
    return A;
  }
  throw InputError(path.string() + ": unsupported format '" + format + "'");
}

void write_matrix_market(const Eigen::MatrixXd& A,
                         const std::filesystem::path& path,
                         const std::string& comment) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write matrix file " + path.string());
  out << "%%MatrixMarket matrix coordinate real general\n";
  if (!comment.empty()) out << "% " << comment << "\n";
  long long nnz = 0;
  for (Eigen::Index j = 0; j < A.cols(); ++j) {
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      if (A(i, j) != 0.0) ++nnz;
    }
  }
  out << A.rows() << " " << A.cols() << " " << nnz << "\n";
  char buf[64];
  for (Eigen::Index j = 0; j < A.cols(); ++j) {
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      if (A(i, j) == 0.0) continue;
      std::snprintf(buf, sizeof(buf), "%.17g", A(i, j));
      out << (i + 1) << " " << (j + 1) << " " << buf << "\n";
    }
  }
  if (!out) throw InputError("failed writing " + path.string());
}

}  // namespace teven
