#pragma once

#include <vector>

#include <Eigen/Core>

#include "gwl/model.hpp"

namespace gwl {

// Images are row-major Eigen matrices; coefficient vectors are the row-major
// flattening of the Mallat layout (approximation at (0,0), detail bands of
// scale 2^j at offsets (0,2^j), (2^j,0), (2^j,2^j)).

/// Full-depth orthonormal 2-D Haar transform of a 2^n x 2^n image.
Eigen::VectorXd haar2d_forward(const Eigen::MatrixXd& image);
Eigen::MatrixXd haar2d_inverse(const Eigen::VectorXd& coeffs);

// Quad-trees of detail coefficients, joined at the approximation coefficient.
// A coefficient's parent sits at (r/2, c/2); the three coarsest details hang
// off the root (0,0).
class WaveletTree {
 public:
  explicit WaveletTree(int side);
  int side() const { return side_; }
  int depth() const { return depth_; }
  int size() const { return side_ * side_; }
  int parent(int index) const;  // -1 for the root
  std::vector<int> path(int index) const;  // root .. index

 private:
  int side_;
  int depth_;
};

/// One group per node holding its root-to-node path, followed by the
/// singletons not already present.
GroupFamily wavelet_path_groups(const WaveletTree& tree, bool add_singletons = true);

struct PatchGrid {
  int rows = 0, cols = 0;  // image size
  int size = 32;
  int stride = 16;
  std::vector<std::pair<int, int>> origins;  // top-left corners, row-major
};

PatchGrid make_patch_grid(int rows, int cols, int size, int stride);

/// Patches flattened row-major, in the grid's order.
std::vector<Eigen::VectorXd> extract_patches(const Eigen::MatrixXd& image, const PatchGrid& grid);

/// Average of the overlapping patch estimates at every pixel.
Eigen::MatrixXd reconstruct(const std::vector<Eigen::VectorXd>& patches, const PatchGrid& grid);

}  // namespace gwl
