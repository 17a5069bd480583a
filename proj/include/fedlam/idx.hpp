#ifndef FEDLAM_IDX_HPP
#define FEDLAM_IDX_HPP

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "fedlam/dataset.hpp"
#include "fedlam/errors.hpp"

namespace fedlam {

// MNIST IDX files: big-endian u32 magic, big-endian u32 dims, then u8 payload.
constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

namespace detail {

inline std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t be32(const std::vector<unsigned char>& buf, std::size_t off, const std::string& path) {
  if (buf.size() < off + 4) throw FormatError(path + ": truncated header");
  return (std::uint32_t{buf[off]} << 24) | (std::uint32_t{buf[off + 1]} << 16) | (std::uint32_t{buf[off + 2]} << 8) |
         std::uint32_t{buf[off + 3]};
}

inline void put_be32(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                     static_cast<char>(v)};
  out.write(b, 4);
}

}  // namespace detail

/// Reads an images/labels IDX pair. Pixels are scaled to [0, 1]; any
/// inconsistency aborts without returning partial data.
inline Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
  const auto img = detail::read_file(images_path);
  const auto lab = detail::read_file(labels_path);
  if (detail::be32(img, 0, images_path) != kIdxImagesMagic) throw FormatError(images_path + ": bad image magic");
  if (detail::be32(lab, 0, labels_path) != kIdxLabelsMagic) throw FormatError(labels_path + ": bad label magic");

  const std::size_t n = detail::be32(img, 4, images_path);
  const std::size_t rows = detail::be32(img, 8, images_path);
  const std::size_t cols = detail::be32(img, 12, images_path);
  const std::size_t n_lab = detail::be32(lab, 4, labels_path);
  if (n != n_lab) {
    throw FormatError("image count " + std::to_string(n) + " does not match label count " + std::to_string(n_lab));
  }
  const std::size_t dim = rows * cols;
  if (img.size() != 16 + n * dim) throw FormatError(images_path + ": payload length does not match header");
  if (lab.size() != 8 + n) throw FormatError(labels_path + ": payload length does not match header");

  Dataset out;
  out.dim = dim;
  out.classes = 10;
  out.labels.resize(n);
  out.features.resize(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = lab[8 + i];
    if (y > 9) throw FormatError(labels_path + ": label " + std::to_string(y) + " outside 0..9");
    out.labels[i] = y;
  }
  for (std::size_t j = 0; j < n * dim; ++j) out.features[j] = static_cast<double>(img[16 + j]) / 255.0;
  return out;
}

/// Writes `data` as an IDX pair; features are clamped to [0, 1] and rounded to bytes.
inline void write_mnist_idx(const Dataset& data, std::size_t rows, std::size_t cols, const std::string& images_path,
                            const std::string& labels_path) {
  if (rows * cols != data.dim) throw SchemaError("write_mnist_idx: rows * cols must equal dim");
  std::ofstream img(images_path, std::ios::binary);
  std::ofstream lab(labels_path, std::ios::binary);
  if (!img) throw FormatError("cannot write " + images_path);
  if (!lab) throw FormatError("cannot write " + labels_path);
  detail::put_be32(img, kIdxImagesMagic);
  detail::put_be32(img, static_cast<std::uint32_t>(data.size()));
  detail::put_be32(img, static_cast<std::uint32_t>(rows));
  detail::put_be32(img, static_cast<std::uint32_t>(cols));
  for (double v : data.features) {
    const double c = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    img.put(static_cast<char>(static_cast<unsigned char>(c * 255.0 + 0.5)));
  }
  detail::put_be32(lab, kIdxLabelsMagic);
  detail::put_be32(lab, static_cast<std::uint32_t>(data.size()));
  for (int y : data.labels) lab.put(static_cast<char>(y));
  if (!img || !lab) throw FormatError("write failed for " + images_path + " / " + labels_path);
}

}  // namespace fedlam

#endif  // FEDLAM_IDX_HPP
