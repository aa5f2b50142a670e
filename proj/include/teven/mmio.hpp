#pragma once

#include <filesystem>
#include <string>

#include <Eigen/Dense>

namespace teven {

/// Reads a real Matrix Market file (coordinate or array format; general,
/// symmetric, or skew-symmetric storage) into a dense matrix.
Eigen::MatrixXd read_matrix_market(const std::filesystem::path& path);

/// Writes a dense matrix in coordinate/real/general format with 17
/// significant digits (binary-faithful round trip).
void write_matrix_market(const Eigen::MatrixXd& A,
                         const std::filesystem::path& path,
                         const std::string& comment = {});

}  // namespace teven
