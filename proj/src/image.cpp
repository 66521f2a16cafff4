#include "gwl/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace gwl {
namespace {

// Next header token, skipping whitespace and comments.
std::string token(std::istream& in) {
  std::string t;
  char ch;
  while (in.get(ch)) {
    if (ch == '#') {
      std::string dummy;
      std::getline(in, dummy);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!t.empty()) return t;
      continue;
    }
    t.push_back(ch);
  }
  return t;
}

int header_int(std::istream& in, const std::string& path) {
  const std::string t = token(in);
  try {
    return std::stoi(t);
  } catch (const std::exception&) {
    throw std::runtime_error(path + ": malformed PGM header");
  }
}

}  // namespace

Eigen::MatrixXd read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  const std::string magic = token(in);
  if (magic != "P5" && magic != "P2") throw std::runtime_error(path + ": not a PGM file");
  const int w = header_int(in, path), h = header_int(in, path), maxval = header_int(in, path);
  if (w < 1 || h < 1 || maxval < 1 || maxval > 255)
    throw std::runtime_error(path + ": unsupported PGM dimensions or depth");
  Eigen::MatrixXd img(h, w);
  if (magic == "P5") {
    std::string buf(static_cast<std::size_t>(w) * h, '\0');
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size()))
      throw std::runtime_error(path + ": truncated pixel data");
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j)
        img(i, j) = static_cast<unsigned char>(buf[static_cast<std::size_t>(i) * w + j]);
  } else {
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) img(i, j) = header_int(in, path);
  }
  if (maxval != 255) img *= 255.0 / maxval;
  return img;
}

void write_pgm(const std::string& path, const Eigen::MatrixXd& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "P5\n" << image.cols() << ' ' << image.rows() << "\n255\n";
  for (int i = 0; i < image.rows(); ++i)
    for (int j = 0; j < image.cols(); ++j) {
      const double v = std::clamp(std::round(image(i, j)), 0.0, 255.0);
      out.put(static_cast<char>(static_cast<unsigned char>(v)));
    }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace gwl
