#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace wsseg {

/// Deterministic random source. All draws are derived from the raw 64-bit
/// output of std::mt19937_64 (whose sequence the standard pins down), never
/// from std::*_distribution, so streams are reproducible across compilers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller, one cached value per pair.
  double normal();

  /// Unbiased index in [0, n) by rejection.
  std::size_t uniform_index(std::size_t n);

  /// Derives an independent stream seed (splitmix64 of seed ^ stream).
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream);

  std::string save_state() const;
  void load_state(const std::string& state);

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Deterministic Fisher-Yates shuffle.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = rng.uniform_index(i);
    std::swap(v[i - 1], v[j]);
  }
}

/// FNV-1a over a byte buffer; used for config fingerprints and
/// reproducibility checks.
std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull);
std::uint64_t fnv1a_file(const std::string& path);
std::string to_hex(std::uint64_t v);

}  // namespace wsseg
