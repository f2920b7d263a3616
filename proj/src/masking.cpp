#include "wsseg/masking.hpp"

#include <algorithm>
#include <stdexcept>

#include "wsseg/pgm.hpp"

namespace wsseg::masking {

namespace {
void require_mask_shape(const char* op, const ad::Tensor& m) {
  if (m.rank() != 2) {
    throw std::invalid_argument(std::string(op) + " expects an [H,W] mask, got shape " +
                                ad::shape_str(m.shape()));
  }
}

void require_unit_range(const char* op, const ad::Tensor& m) {
  for (double v : m.values()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument(std::string(op) + ": mask entry " + std::to_string(v) +
                                  " outside [0,1]");
    }
  }
}
}  // namespace

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(pixels.begin(), pixels.end(), std::uint8_t{1}));
}

ad::Tensor complement(ad::Graph& g, const ad::Tensor& m_plus) {
  require_mask_shape("complement", m_plus);
  require_unit_range("complement", m_plus);
  ad::Tensor ones = ad::Tensor::full(m_plus.shape(), 1.0);
  return g.sub(ones, m_plus);
}

ad::Tensor mask_size(ad::Graph& g, const ad::Tensor& m) {
  require_mask_shape("mask_size", m);
  require_unit_range("mask_size", m);
  return g.sum(m);
}

ad::Tensor compose(ad::Graph& g, const ad::Tensor& x, const ad::Tensor& m) {
  return g.spatial_gate(x, m);
}

BinaryMask binarize_values(const std::vector<double>& values, std::size_t h, std::size_t w,
                           double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("binarize threshold must lie in (0,1), got " +
                                std::to_string(threshold));
  }
  if (values.size() != h * w) {
    throw std::invalid_argument("binarize: value count does not match mask dimensions");
  }
  BinaryMask out;
  out.height = h;
  out.width = w;
  out.pixels.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    out.pixels[i] = values[i] >= threshold ? 1 : 0;  // ties go to foreground
  }
  return out;
}

BinaryMask binarize(const ad::Tensor& m, double threshold) {
  require_mask_shape("binarize", m);
  return binarize_values(m.values(), m.shape()[0], m.shape()[1], threshold);
}

void write_mask_pgm(const std::string& path, const BinaryMask& mask) {
  pgm::Image img;
  img.height = mask.height;
  img.width = mask.width;
  img.pixels.resize(mask.pixels.size());
  for (std::size_t i = 0; i < mask.pixels.size(); ++i) {
    img.pixels[i] = mask.pixels[i] ? 255 : 0;
  }
  pgm::write(path, img);
}

BinaryMask read_mask_pgm(const std::string& path) {
  const pgm::Image img = pgm::read(path);
  BinaryMask mask;
  mask.height = img.height;
  mask.width = img.width;
  mask.pixels.resize(img.pixels.size());
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    mask.pixels[i] = img.pixels[i] >= 128 ? 1 : 0;
  }
  return mask;
}

}  // namespace wsseg::masking
