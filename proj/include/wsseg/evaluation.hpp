#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "wsseg/checkpoint.hpp"
#include "wsseg/datagen.hpp"
#include "wsseg/masking.hpp"

#include "json.hpp"

namespace wsseg::evaluation {

enum class PositiveClass { FG, BG };

/// Dice / F1 over the chosen class's pixels: 2|P n G| / (|P| + |G|).
/// If neither mask contains the class, both agree it is absent: dice = 1.
double dice(const masking::BinaryMask& pred, const masking::BinaryMask& gt, PositiveClass cls);

/// 100 * #mismatches / n. Empty input is an error.
double classification_error(const std::vector<int>& predictions, const std::vector<int>& labels);

struct PerImageMetrics {
  std::string id;
  int label = 0;
  int predicted = -1;  // -1 when the method does not classify (baseline)
  double f1_plus = 0.0;
  double f1_minus = 0.0;
};

struct MetricsReport {
  std::string split;
  int n_images = 0;
  bool has_classification = true;
  double classification_error_pct = 0.0;
  // Macro averages (per image, then mean), in percent.
  double f1_plus_pct = 0.0;
  double f1_minus_pct = 0.0;
  // Micro (pooled pixel counts) cross-check, in percent; diagnostics only.
  double micro_f1_plus_pct = 0.0;
  double micro_f1_minus_pct = 0.0;
  std::vector<PerImageMetrics> per_image;
  std::string config_fingerprint;

  nlohmann::json to_json() const;
};

/// Runs the frozen pipeline per image: predicted class = argmax of the
/// foreground posterior, mask binarized at `threshold`. Never mutates the
/// checkpoint. When export_dir is non-empty, writes the predicted masks as
/// white-foreground PGMs there.
MetricsReport evaluate(const checkpoint::Checkpoint& ckpt,
                       const datagen::DatasetManifest& manifest, double threshold = 0.5,
                       const std::string& export_dir = "");

/// Predicts all-foreground for every image; no classification column.
MetricsReport all_ones_baseline(const datagen::DatasetManifest& manifest);

void print_table(const MetricsReport& report, std::ostream& os);
void write_report_json(const MetricsReport& report, const std::string& path);

}  // namespace wsseg::evaluation
