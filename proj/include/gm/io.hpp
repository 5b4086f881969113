#pragma once

#include <Eigen/Dense>
#include <string>

namespace gm {

/// Dense matrices as CSV: one row per line, comma separated, written with
/// enough digits for an exact double round trip.
void write_matrix_csv(const Eigen::MatrixXd& m, const std::string& path);
Eigen::MatrixXd read_matrix_csv(const std::string& path);

/// Simple binary container: magic "GMAT", u32 rows, u32 cols, then
/// row-major f64 payload, all little-endian.
void write_matrix_gmat(const Eigen::MatrixXd& m, const std::string& path);
Eigen::MatrixXd read_matrix_gmat(const std::string& path);

/// Reads either format, deciding by the magic bytes.
Eigen::MatrixXd read_matrix_auto(const std::string& path);

}  // namespace gm
