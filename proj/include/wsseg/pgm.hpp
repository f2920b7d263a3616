#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace wsseg::pgm {

struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;  // row-major
};

/// Binary (P5) 8-bit PGM. Strict parser; '#' comments are tolerated in the
/// header. Errors name the offending path.
Image read(const std::string& path);
void write(const std::string& path, const Image& img);

/// [0,1] doubles <-> 8-bit grayscale (round to nearest, clamped).
Image quantize(const std::vector<double>& values, std::size_t h, std::size_t w);
std::vector<double> to_unit(const Image& img);

}  // namespace wsseg::pgm
