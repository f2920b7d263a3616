#include "wsseg/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "wsseg/pgm.hpp"
#include "wsseg/rng.hpp"

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace wsseg::datagen {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kBaseMean = 0.45;      // shared first-order level of both textures
constexpr double kStripeAmp = 0.18;     // oriented component amplitude
constexpr double kNoiseSd = 0.03;       // white residual
constexpr double kMaxMeanOffset = 0.3;  // FG brightness offset at difficulty 0

struct TextureParams {
  double theta = 0.0;  // stripe normal direction
  double freq = 0.25;  // cycles per pixel
  double mean = kBaseMean;
  double phase = 0.0;
};

// Smooth random field from a coarse grid, bilinearly upsampled; perturbs the
// stripe phase so the texture reads as band-limited noise rather than a
// clean grating.
std::vector<double> smooth_field(int h, int w, int grid, double amp, Rng& rng) {
  const int gh = grid + 1, gw = grid + 1;
  std::vector<double> coarse(static_cast<std::size_t>(gh) * gw);
  for (double& v : coarse) v = rng.uniform(-amp, amp);
  std::vector<double> out(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y) {
    const double fy = static_cast<double>(y) / h * grid;
    const int y0 = std::min(static_cast<int>(fy), grid - 1);
    const double ty = fy - y0;
    for (int x = 0; x < w; ++x) {
      const double fx = static_cast<double>(x) / w * grid;
      const int x0 = std::min(static_cast<int>(fx), grid - 1);
      const double tx = fx - x0;
      const double v00 = coarse[static_cast<std::size_t>(y0) * gw + x0];
      const double v01 = coarse[static_cast<std::size_t>(y0) * gw + x0 + 1];
      const double v10 = coarse[static_cast<std::size_t>(y0 + 1) * gw + x0];
      const double v11 = coarse[static_cast<std::size_t>(y0 + 1) * gw + x0 + 1];
      out[static_cast<std::size_t>(y) * w + x] =
          (1 - ty) * ((1 - tx) * v00 + tx * v01) + ty * ((1 - tx) * v10 + tx * v11);
    }
  }
  return out;
}

double texture_value(const TextureParams& tp, int x, int y, double phase_jitter) {
  const double u = x * std::cos(tp.theta) + y * std::sin(tp.theta);
  return tp.mean + kStripeAmp * std::sin(2.0 * kPi * tp.freq * u + tp.phase + phase_jitter);
}

struct Blob {
  double cx = 0.0, cy = 0.0, r0 = 0.0;
  std::array<double, 3> wobble_amp{};  // harmonics k = 2,3,4
  std::array<double, 3> wobble_phase{};

  bool contains(double x, double y) const {
    const double dx = x - cx, dy = y - cy;
    const double d = std::sqrt(dx * dx + dy * dy);
    const double phi = std::atan2(dy, dx);
    double r = 1.0;
    for (int k = 0; k < 3; ++k) r += wobble_amp[k] * std::cos((k + 2) * phi + wobble_phase[k]);
    return d <= r0 * r;
  }
};

Blob sample_blob(int h, int w, double target_fraction, Rng& rng) {
  Blob b;
  b.cx = rng.uniform(0.28, 0.72) * w;
  b.cy = rng.uniform(0.28, 0.72) * h;
  b.r0 = std::sqrt(target_fraction * h * w / kPi);
  for (int k = 0; k < 3; ++k) {
    b.wobble_amp[k] = rng.uniform(-0.13, 0.13);
    b.wobble_phase[k] = rng.uniform(0.0, 2.0 * kPi);
  }
  return b;
}

// Raster union of blobs into a {0,1} mask; returns foreground fraction.
double rasterize(const std::vector<Blob>& blobs, int h, int w, std::vector<std::uint8_t>& mask) {
  mask.assign(static_cast<std::size_t>(h) * w, 0);
  std::size_t fg = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (const Blob& b : blobs) {
        if (b.contains(x + 0.5, y + 0.5)) {
          mask[static_cast<std::size_t>(y) * w + x] = 1;
          ++fg;
          break;
        }
      }
    }
  }
  return static_cast<double>(fg) / (static_cast<double>(h) * w);
}

struct RenderedSample {
  std::vector<double> image;         // [0,1]
  std::vector<std::uint8_t> gt;      // {0,1}
};

/// One image, fully determined by its own RNG stream.
RenderedSample render_sample(int label, int h, int w, double difficulty, Rng& rng) {
  RenderedSample out;
  const double jitter = rng.uniform(-0.15, 0.15);
  TextureParams bg;
  bg.theta = jitter;  // near-vertical stripes
  bg.freq = 0.25;
  bg.phase = rng.uniform(0.0, 2.0 * kPi);
  TextureParams fg = bg;
  fg.theta = kPi / 2.0 + jitter;  // right angle to the background
  fg.phase = rng.uniform(0.0, 2.0 * kPi);
  fg.mean = kBaseMean + kMaxMeanOffset * (1.0 - difficulty);

  const auto phase_field = smooth_field(h, w, 4, 0.9, rng);

  out.gt.assign(static_cast<std::size_t>(h) * w, 0);
  if (label == 1) {
    // Resample until the foreground fraction lands in [0.1, 0.6].
    for (int attempt = 0; attempt < 64; ++attempt) {
      std::vector<Blob> blobs{sample_blob(h, w, rng.uniform(0.14, 0.34), rng)};
      if (rng.uniform() < 0.35) {
        Blob second = sample_blob(h, w, rng.uniform(0.04, 0.10), rng);
        blobs.push_back(second);
      }
      const double frac = rasterize(blobs, h, w, out.gt);
      if (frac >= 0.1 && frac <= 0.6) break;
      if (attempt == 63) {
        throw std::runtime_error("datagen: could not place a blob with fraction in [0.1,0.6]");
      }
    }
  }

  out.image.resize(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const TextureParams& tp = out.gt[i] ? fg : bg;
      double v = texture_value(tp, x, y, phase_field[i]) + kNoiseSd * rng.normal();
      out.image[i] = std::min(1.0, std::max(0.0, v));
    }
  }
  return out;
}

std::string index_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", i);
  return buf;
}

std::string stem_of(const std::string& rel_path) {
  return fs::path(rel_path).stem().string();
}

void validate_dims(int h, int w) {
  if (h <= 0 || w <= 0 || h % 8 != 0 || w % 8 != 0) {
    throw std::invalid_argument("dataset dims must be positive and divisible by 8, got " +
                                std::to_string(h) + "x" + std::to_string(w));
  }
}

}  // namespace

std::string DatasetManifest::image_path(std::size_t i) const {
  return (fs::path(root) / entries.at(i).image).string();
}

std::string DatasetManifest::mask_path(std::size_t i) const {
  return (fs::path(root) / entries.at(i).mask).string();
}

std::string manifest_path(const std::string& root, const std::string& split) {
  return (fs::path(root) / ("manifest_" + split + ".json")).string();
}

void save_manifest(const DatasetManifest& m, const std::string& path) {
  json j;
  j["schema_version"] = m.schema_version;
  j["split"] = m.split;
  j["seed"] = m.seed;
  j["height"] = m.height;
  j["width"] = m.width;
  j["difficulty"] = m.difficulty;
  json counts = json::object();
  for (const auto& [label, count] : m.class_counts) counts[std::to_string(label)] = count;
  j["class_counts"] = counts;
  json entries = json::array();
  for (const auto& e : m.entries) {
    entries.push_back({{"image", e.image}, {"mask", e.mask}, {"label", e.label}});
  }
  j["entries"] = entries;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << j.dump(1) << "\n";
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed manifest " + path + ": " + e.what());
  }
  DatasetManifest m;
  try {
    m.schema_version = j.at("schema_version").get<int>();
    m.split = j.at("split").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.height = j.at("height").get<int>();
    m.width = j.at("width").get<int>();
    m.difficulty = j.at("difficulty").get<double>();
    for (const auto& [key, value] : j.at("class_counts").items()) {
      m.class_counts[std::stoi(key)] = value.get<int>();
    }
    for (const auto& e : j.at("entries")) {
      m.entries.push_back({e.at("image").get<std::string>(), e.at("mask").get<std::string>(),
                           e.at("label").get<int>()});
    }
  } catch (const json::exception& e) {
    throw std::runtime_error("manifest " + path + " missing fields: " + e.what());
  }
  if (m.schema_version != 1) {
    throw std::runtime_error("manifest " + path + ": unsupported schema_version " +
                             std::to_string(m.schema_version));
  }
  m.root = fs::path(path).parent_path().string();
  if (m.root.empty()) m.root = ".";
  std::map<int, int> counts;
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    counts[m.entries[i].label]++;
    if (!fs::exists(m.image_path(i))) {
      throw std::runtime_error("manifest " + path + ": missing image file " + m.image_path(i));
    }
    if (!fs::exists(m.mask_path(i))) {
      throw std::runtime_error("manifest " + path + ": missing mask file " + m.mask_path(i));
    }
  }
  if (counts != m.class_counts) {
    throw std::runtime_error("manifest " + path + ": class_counts do not match entry list");
  }
  return m;
}

DatasetManifest generate_split(const std::string& root, const std::string& split,
                               std::uint64_t seed, int n_per_class, int height, int width,
                               double difficulty) {
  validate_dims(height, width);
  if (n_per_class < 1) throw std::invalid_argument("n_per_class must be >= 1");
  if (difficulty < 0.0 || difficulty > 1.0) {
    throw std::invalid_argument("difficulty must lie in [0,1]");
  }
  const fs::path images_dir = fs::path(root) / split / "images";
  const fs::path masks_dir = fs::path(root) / split / "masks";
  fs::create_directories(images_dir);
  fs::create_directories(masks_dir);

  DatasetManifest m;
  m.root = root;
  m.split = split;
  m.seed = seed;
  m.height = height;
  m.width = width;
  m.difficulty = difficulty;

  const std::uint64_t split_salt = fnv1a(split.data(), split.size());
  int index = 0;
  for (int label = 0; label <= 1; ++label) {
    for (int i = 0; i < n_per_class; ++i, ++index) {
      Rng rng(Rng::mix(seed ^ split_salt, static_cast<std::uint64_t>(index)));
      const RenderedSample s = render_sample(label, height, width, difficulty, rng);
      const std::string name = index_name(index) + ".pgm";
      pgm::write((images_dir / name).string(),
                 pgm::quantize(s.image, static_cast<std::size_t>(height),
                               static_cast<std::size_t>(width)));
      masking::BinaryMask gt{static_cast<std::size_t>(height), static_cast<std::size_t>(width),
                             s.gt};
      masking::write_mask_pgm((masks_dir / name).string(), gt);
      m.entries.push_back({split + "/images/" + name, split + "/masks/" + name, label});
      m.class_counts[label]++;
    }
  }
  save_manifest(m, manifest_path(root, split));
  return m;
}

GenerateResult generate(const std::string& root, const GenerateOptions& opts) {
  GenerateResult r;
  r.train = generate_split(root, "train", opts.seed, opts.n_train_per_class, opts.height,
                           opts.width, opts.difficulty);
  r.valid = generate_split(root, "valid", opts.seed, opts.n_valid_per_class, opts.height,
                           opts.width, opts.difficulty);
  r.test = generate_split(root, "test", opts.seed, opts.n_test_per_class, opts.height,
                          opts.width, opts.difficulty);
  return r;
}

std::pair<DatasetManifest, DatasetManifest> split(const DatasetManifest& m, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("split fraction must lie in (0,1)");
  }
  DatasetManifest a = m, b = m;
  a.entries.clear();
  b.entries.clear();
  a.class_counts.clear();
  b.class_counts.clear();
  a.split = m.split + "_a";
  b.split = m.split + "_b";
  std::map<int, int> seen;
  std::map<int, int> totals;
  for (const auto& e : m.entries) totals[e.label]++;
  for (const auto& e : m.entries) {
    const int take = static_cast<int>(std::lround(fraction * totals[e.label]));
    if (seen[e.label]++ < take) {
      a.entries.push_back(e);
      a.class_counts[e.label]++;
    } else {
      b.entries.push_back(e);
      b.class_counts[e.label]++;
    }
  }
  return {a, b};
}

TrainSample TrainingLoader::get(std::size_t i) const {
  if (i >= size()) throw std::out_of_range("sample index out of range");
  const pgm::Image img = pgm::read(manifest_.image_path(i));
  if (static_cast<int>(img.height) != manifest_.height ||
      static_cast<int>(img.width) != manifest_.width) {
    throw std::runtime_error("image " + manifest_.image_path(i) +
                             " does not match manifest dimensions");
  }
  TrainSample s;
  s.id = stem_of(manifest_.entries[i].image);
  s.label = manifest_.entries[i].label;
  s.image = ad::Tensor::from({1, img.height, img.width}, pgm::to_unit(img));
  return s;
}

EvalSample EvalLoader::get(std::size_t i) const {
  if (i >= size()) throw std::out_of_range("sample index out of range");
  TrainingLoader base(manifest_);
  const TrainSample t = base.get(i);
  EvalSample s;
  s.id = t.id;
  s.label = t.label;
  s.image = t.image;
  s.gt_mask = masking::read_mask_pgm(manifest_.mask_path(i));
  if (s.gt_mask.height != static_cast<std::size_t>(manifest_.height) ||
      s.gt_mask.width != static_cast<std::size_t>(manifest_.width)) {
    throw std::runtime_error("mask " + manifest_.mask_path(i) +
                             " does not match manifest dimensions");
  }
  return s;
}

}  // namespace wsseg::datagen
