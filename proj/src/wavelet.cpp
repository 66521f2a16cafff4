#include "gwl/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gwl {
namespace {

int log2_side(long side) {
  if (side < 1 || (side & (side - 1)) != 0)
    throw StructuralError("image side must be a power of two, got " + std::to_string(side));
  int n = 0;
  while ((1L << n) < side) ++n;
  return n;
}

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

Eigen::VectorXd haar2d_forward(const Eigen::MatrixXd& image) {
  if (image.rows() != image.cols()) throw StructuralError("image must be square");
  log2_side(image.rows());
  const double r = std::numbers::sqrt2 / 2.0;
  RowMat a = image;
  RowMat tmp(a.rows(), a.cols());
  for (long s = a.rows(); s > 1; s /= 2) {
    const long h = s / 2;
    for (long i = 0; i < s; ++i)
      for (long j = 0; j < h; ++j) {
        tmp(i, j) = r * (a(i, 2 * j) + a(i, 2 * j + 1));
        tmp(i, h + j) = r * (a(i, 2 * j) - a(i, 2 * j + 1));
      }
    for (long j = 0; j < s; ++j)
      for (long i = 0; i < h; ++i) {
        a(i, j) = r * (tmp(2 * i, j) + tmp(2 * i + 1, j));
        a(h + i, j) = r * (tmp(2 * i, j) - tmp(2 * i + 1, j));
      }
  }
  return Eigen::Map<const Eigen::VectorXd>(a.data(), a.size());
}

Eigen::MatrixXd haar2d_inverse(const Eigen::VectorXd& coeffs) {
  const long side = std::lround(std::sqrt(static_cast<double>(coeffs.size())));
  if (side * side != coeffs.size()) throw StructuralError("coefficient count is not a square");
  log2_side(side);
  const double r = std::numbers::sqrt2 / 2.0;
  RowMat a = Eigen::Map<const RowMat>(coeffs.data(), side, side);
  RowMat tmp(side, side);
  for (long s = 2; s <= side; s *= 2) {
    const long h = s / 2;
    for (long j = 0; j < s; ++j)
      for (long i = 0; i < h; ++i) {
        tmp(2 * i, j) = r * (a(i, j) + a(h + i, j));
        tmp(2 * i + 1, j) = r * (a(i, j) - a(h + i, j));
      }
    for (long i = 0; i < s; ++i)
      for (long j = 0; j < h; ++j) {
        a(i, 2 * j) = r * (tmp(i, j) + tmp(i, h + j));
        a(i, 2 * j + 1) = r * (tmp(i, j) - tmp(i, h + j));
      }
  }
  return a;
}

WaveletTree::WaveletTree(int side) : side_(side), depth_(log2_side(side)) {}

int WaveletTree::parent(int index) const {
  if (index < 0 || index >= size()) throw std::out_of_range("coefficient index out of range");
  const int r = index / side_, c = index % side_;
  if (r == 0 && c == 0) return -1;
  if (r < 2 && c < 2) return 0;
  return (r / 2) * side_ + c / 2;
}

std::vector<int> WaveletTree::path(int index) const {
  std::vector<int> out;
  for (int i = index; i >= 0; i = parent(i)) out.push_back(i);
  std::reverse(out.begin(), out.end());
  return out;
}

GroupFamily wavelet_path_groups(const WaveletTree& tree, bool add_singletons) {
  std::vector<Group> groups;
  groups.reserve(2 * tree.size());
  for (int i = 0; i < tree.size(); ++i) {
    Group g = tree.path(i);
    std::sort(g.begin(), g.end());
    groups.push_back(std::move(g));
  }
  if (add_singletons)
    for (int i = 0; i < tree.size(); ++i)
      if (tree.path(i).size() > 1) groups.push_back({i});
  return GroupFamily(tree.size(), std::move(groups));
}

PatchGrid make_patch_grid(int rows, int cols, int size, int stride) {
  if (size < 1 || stride < 1) throw std::invalid_argument("patch size and stride must be >= 1");
  if (rows < size || cols < size) throw StructuralError("image smaller than one patch");
  PatchGrid g{rows, cols, size, stride, {}};
  for (int r = 0; r + size <= rows; r += stride)
    for (int c = 0; c + size <= cols; c += stride) g.origins.emplace_back(r, c);
  return g;
}

std::vector<Eigen::VectorXd> extract_patches(const Eigen::MatrixXd& image, const PatchGrid& grid) {
  if (image.rows() != grid.rows || image.cols() != grid.cols)
    throw StructuralError("image dimensions do not match the patch grid");
  std::vector<Eigen::VectorXd> out;
  out.reserve(grid.origins.size());
  for (auto [r0, c0] : grid.origins) {
    Eigen::VectorXd p(grid.size * grid.size);
    for (int i = 0; i < grid.size; ++i)
      for (int j = 0; j < grid.size; ++j) p[i * grid.size + j] = image(r0 + i, c0 + j);
    out.push_back(std::move(p));
  }
  return out;
}

Eigen::MatrixXd reconstruct(const std::vector<Eigen::VectorXd>& patches, const PatchGrid& grid) {
  if (patches.size() != grid.origins.size()) throw StructuralError("patch count mismatch");
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(grid.rows, grid.cols);
  Eigen::MatrixXd cnt = Eigen::MatrixXd::Zero(grid.rows, grid.cols);
  for (std::size_t k = 0; k < patches.size(); ++k) {
    if (patches[k].size() != grid.size * grid.size) throw StructuralError("patch length mismatch");
    auto [r0, c0] = grid.origins[k];
    for (int i = 0; i < grid.size; ++i)
      for (int j = 0; j < grid.size; ++j) {
        sum(r0 + i, c0 + j) += patches[k][i * grid.size + j];
        cnt(r0 + i, c0 + j) += 1.0;
      }
  }
  for (int i = 0; i < grid.rows; ++i)
    for (int j = 0; j < grid.cols; ++j)
      if (cnt(i, j) == 0.0) throw StructuralError("pixel not covered by any patch");
  return sum.cwiseQuotient(cnt);
}

}  // namespace gwl
