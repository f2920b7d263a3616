#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wsseg/graph.hpp"

namespace wsseg::masking {

/// Soft foreground map over the spatial domain, entries strictly inside
/// (0,1). The complement 1 - m is the background map.
struct Mask {
  ad::Tensor m_plus;  // [H,W]

  std::size_t height() const { return m_plus.shape()[0]; }
  std::size_t width() const { return m_plus.shape()[1]; }
  std::size_t omega() const { return m_plus.numel(); }
};

/// Hard {0,1} per-pixel mask; evaluation only.
struct BinaryMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;  // row-major, values 0 or 1

  static BinaryMask zeros(std::size_t h, std::size_t w) { return {h, w, std::vector<std::uint8_t>(h * w, 0)}; }
  static BinaryMask ones(std::size_t h, std::size_t w) { return {h, w, std::vector<std::uint8_t>(h * w, 1)}; }
  std::size_t count() const;
  bool operator==(const BinaryMask&) const = default;
};

/// 1 - m, elementwise and differentiable. Entries must lie in [0,1].
ad::Tensor complement(ad::Graph& g, const ad::Tensor& m_plus);

/// Soft size: sum of the mask over the spatial domain. Entries in [0,1].
ad::Tensor mask_size(ad::Graph& g, const ad::Tensor& m);

/// Pixel-space gating of an image by a mask: out(c,z) = x(c,z) * m(z).
/// x is [C,H,W] (or [N,C,H,W]); spatial shapes must match.
ad::Tensor compose(ad::Graph& g, const ad::Tensor& x, const ad::Tensor& m);

/// pixel = 1 iff m >= threshold (ties go to foreground). threshold in (0,1).
BinaryMask binarize(const ad::Tensor& m, double threshold);
BinaryMask binarize_values(const std::vector<double>& values, std::size_t h, std::size_t w,
                           double threshold);

/// 8-bit PGM (P5) export, 255 = foreground (white), 0 = background.
void write_mask_pgm(const std::string& path, const BinaryMask& mask);
BinaryMask read_mask_pgm(const std::string& path);

}  // namespace wsseg::masking
