#pragma once

#include <string>

#include <Eigen/Core>

namespace gwl {

/// Reads a binary (P5) or ASCII (P2) 8-bit PGM into [0, 255] doubles.
Eigen::MatrixXd read_pgm(const std::string& path);

/// Writes a binary P5 PGM, rounding and clamping to [0, 255].
void write_pgm(const std::string& path, const Eigen::MatrixXd& image);

}  // namespace gwl
