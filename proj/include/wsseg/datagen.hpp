#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "wsseg/masking.hpp"
#include "wsseg/tensor.hpp"

namespace wsseg::datagen {

struct ManifestEntry {
  std::string image;  // path relative to manifest root
  std::string mask;   // path relative to manifest root
  int label = 0;      // 0 = normal, 1 = positive
};

struct DatasetManifest {
  int schema_version = 1;
  std::string root;  // absolute or cwd-relative directory the entries hang off
  std::string split;
  std::uint64_t seed = 0;
  int height = 0;
  int width = 0;
  double difficulty = 0.0;
  std::vector<ManifestEntry> entries;
  std::map<int, int> class_counts;

  std::string image_path(std::size_t i) const;
  std::string mask_path(std::size_t i) const;
};

/// Manifest JSON path for a split under a dataset root.
std::string manifest_path(const std::string& root, const std::string& split);

void save_manifest(const DatasetManifest& m, const std::string& path);
/// Parses and validates: files exist, counts match the entry list.
DatasetManifest load_manifest(const std::string& path);

struct GenerateOptions {
  std::uint64_t seed = 7;
  int n_train_per_class = 200;
  int n_valid_per_class = 50;
  int n_test_per_class = 50;
  int height = 32;
  int width = 32;
  double difficulty = 0.7;
};

struct GenerateResult {
  DatasetManifest train;
  DatasetManifest valid;
  DatasetManifest test;
};

/// Writes root/{split}/{images,masks}/NNNN.pgm plus one manifest per split.
/// Background is an oriented band-limited texture; positive images carry
/// one or two smooth blobs whose texture shares the background's mean and
/// amplitude but runs at right angles to it. `difficulty` fades the
/// residual brightness offset of the blobs: 0 leaves a >= 0.2 mean contrast,
/// 1 leaves none. Deterministic per (seed, split, index).
GenerateResult generate(const std::string& root, const GenerateOptions& opts);

/// One split only (used by generate and by tests).
DatasetManifest generate_split(const std::string& root, const std::string& split,
                               std::uint64_t seed, int n_per_class, int height, int width,
                               double difficulty);

/// Deterministic stratified split of a manifest's entries into two disjoint
/// manifests with approximately `fraction` of each class in the first part.
std::pair<DatasetManifest, DatasetManifest> split(const DatasetManifest& m, double fraction);

/// What the trainer is allowed to see: image and image-level label only.
struct TrainSample {
  std::string id;
  ad::Tensor image;  // [1,H,W], values in [0,1]
  int label = 0;
};

/// Evaluation-only view; adds the ground-truth pixel mask.
struct EvalSample {
  std::string id;
  ad::Tensor image;
  int label = 0;
  masking::BinaryMask gt_mask;
};

/// Reads images and labels; by construction has no accessor for mask files,
/// which is the weak-supervision firewall the trainer relies on.
class TrainingLoader {
 public:
  explicit TrainingLoader(const DatasetManifest& manifest) : manifest_(manifest) {}
  std::size_t size() const { return manifest_.entries.size(); }
  TrainSample get(std::size_t i) const;
  const DatasetManifest& manifest() const { return manifest_; }

 private:
  DatasetManifest manifest_;
};

class EvalLoader {
 public:
  explicit EvalLoader(const DatasetManifest& manifest) : manifest_(manifest) {}
  std::size_t size() const { return manifest_.entries.size(); }
  EvalSample get(std::size_t i) const;
  const DatasetManifest& manifest() const { return manifest_; }

 private:
  DatasetManifest manifest_;
};

}  // namespace wsseg::datagen
