#include "wsseg/pgm.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace wsseg::pgm {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& why) {
  throw std::runtime_error("PGM error (" + path + "): " + why);
}

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

}  // namespace

Image read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open file");
  if (next_token(in) != "P5") fail(path, "not a binary (P5) PGM");
  Image img;
  try {
    img.width = std::stoul(next_token(in));
    img.height = std::stoul(next_token(in));
    const unsigned long maxval = std::stoul(next_token(in));
    if (maxval != 255) fail(path, "unsupported maxval " + std::to_string(maxval));
  } catch (const std::logic_error&) {
    fail(path, "malformed header");
  }
  if (img.width == 0 || img.height == 0) fail(path, "zero image dimension");
  img.pixels.resize(img.width * img.height);
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (static_cast<std::size_t>(in.gcount()) != img.pixels.size()) {
    fail(path, "truncated pixel data");
  }
  return img;
}

void write(const std::string& path, const Image& img) {
  if (img.pixels.size() != img.width * img.height) fail(path, "pixel buffer/dimension mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open file for writing");
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
  if (!out) fail(path, "write failed");
}

Image quantize(const std::vector<double>& values, std::size_t h, std::size_t w) {
  if (values.size() != h * w) throw std::invalid_argument("quantize: size mismatch");
  Image img;
  img.height = h;
  img.width = w;
  img.pixels.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = std::lround(std::min(1.0, std::max(0.0, values[i])) * 255.0);
    img.pixels[i] = static_cast<std::uint8_t>(v);
  }
  return img;
}

std::vector<double> to_unit(const Image& img) {
  std::vector<double> out(img.pixels.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = img.pixels[i] / 255.0;
  return out;
}

}  // namespace wsseg::pgm
