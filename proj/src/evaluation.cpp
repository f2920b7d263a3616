#include "wsseg/evaluation.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <stdexcept>

#include "wsseg/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace wsseg::evaluation {

double dice(const masking::BinaryMask& pred, const masking::BinaryMask& gt, PositiveClass cls) {
  if (pred.height != gt.height || pred.width != gt.width) {
    throw std::invalid_argument(
        "dice: shape mismatch, pred " + std::to_string(pred.height) + "x" +
        std::to_string(pred.width) + " vs gt " + std::to_string(gt.height) + "x" +
        std::to_string(gt.width));
  }
  const std::uint8_t positive = cls == PositiveClass::FG ? 1 : 0;
  std::size_t inter = 0, p_count = 0, g_count = 0;
  for (std::size_t i = 0; i < pred.pixels.size(); ++i) {
    const bool in_p = pred.pixels[i] == positive;
    const bool in_g = gt.pixels[i] == positive;
    inter += in_p && in_g;
    p_count += in_p;
    g_count += in_g;
  }
  // Both masks agree the class is absent.
  if (p_count + g_count == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(p_count + g_count);
}

double classification_error(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (predictions.size() != labels.size()) {
    throw std::invalid_argument("classification_error: " + std::to_string(predictions.size()) +
                                " predictions vs " + std::to_string(labels.size()) + " labels");
  }
  if (predictions.empty()) throw std::invalid_argument("classification_error: empty input");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) wrong += predictions[i] != labels[i];
  return 100.0 * static_cast<double>(wrong) / static_cast<double>(predictions.size());
}

namespace {

struct MicroCounts {
  std::size_t inter_fg = 0, denom_fg = 0;
  std::size_t inter_bg = 0, denom_bg = 0;

  void add(const masking::BinaryMask& pred, const masking::BinaryMask& gt) {
    for (std::size_t i = 0; i < pred.pixels.size(); ++i) {
      const bool pf = pred.pixels[i] == 1, gf = gt.pixels[i] == 1;
      inter_fg += pf && gf;
      denom_fg += pf;
      denom_fg += gf;
      inter_bg += !pf && !gf;
      denom_bg += !pf;
      denom_bg += !gf;
    }
  }
  double f1(std::size_t inter, std::size_t denom) const {
    return denom == 0 ? 1.0 : 2.0 * static_cast<double>(inter) / static_cast<double>(denom);
  }
};

MetricsReport assemble(const std::string& split, std::vector<PerImageMetrics> per_image,
                       const MicroCounts& micro, bool has_classification,
                       const std::string& fingerprint) {
  MetricsReport r;
  r.split = split;
  r.n_images = static_cast<int>(per_image.size());
  r.has_classification = has_classification;
  double f1p = 0.0, f1m = 0.0;
  std::vector<int> preds, labels;
  for (const auto& m : per_image) {
    f1p += m.f1_plus;
    f1m += m.f1_minus;
    if (has_classification) {
      preds.push_back(m.predicted);
      labels.push_back(m.label);
    }
  }
  const double n = static_cast<double>(per_image.size());
  r.f1_plus_pct = 100.0 * f1p / n;
  r.f1_minus_pct = 100.0 * f1m / n;
  r.micro_f1_plus_pct = 100.0 * micro.f1(micro.inter_fg, micro.denom_fg);
  r.micro_f1_minus_pct = 100.0 * micro.f1(micro.inter_bg, micro.denom_bg);
  r.classification_error_pct = has_classification ? classification_error(preds, labels) : 0.0;
  r.per_image = std::move(per_image);
  r.config_fingerprint = fingerprint;
  return r;
}

}  // namespace

MetricsReport evaluate(const checkpoint::Checkpoint& ckpt,
                       const datagen::DatasetManifest& manifest, double threshold,
                       const std::string& export_dir) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("evaluation threshold must lie in (0,1)");
  }
  if (manifest.entries.empty()) throw std::invalid_argument("evaluate: empty dataset");
  if (!export_dir.empty()) fs::create_directories(export_dir);

  const datagen::EvalLoader loader(manifest);
  std::vector<PerImageMetrics> per_image;
  per_image.reserve(loader.size());
  MicroCounts micro;

  for (std::size_t i = 0; i < loader.size(); ++i) {
    const datagen::EvalSample sample = loader.get(i);
    ad::Graph g;
    models::ForwardResult fr = models::forward_pipeline(g, sample.image, std::nullopt,
                                                        ckpt.localizer, ckpt.classifier, {});
    const masking::BinaryMask pred = masking::binarize(fr.mask.m_plus, threshold);
    PerImageMetrics m;
    m.id = sample.id;
    m.label = sample.label;
    m.predicted = static_cast<int>(fr.p_hat_fg.argmax());
    m.f1_plus = dice(pred, sample.gt_mask, PositiveClass::FG);
    m.f1_minus = dice(pred, sample.gt_mask, PositiveClass::BG);
    per_image.push_back(m);
    micro.add(pred, sample.gt_mask);
    if (!export_dir.empty()) {
      masking::write_mask_pgm((fs::path(export_dir) / (sample.id + ".pgm")).string(), pred);
    }
  }

  const std::string fingerprint =
      to_hex(checkpoint::weights_fingerprint(ckpt.localizer, ckpt.classifier) ^
             fnv1a(&threshold, sizeof threshold));
  return assemble(manifest.split, std::move(per_image), micro, /*has_classification=*/true,
                  fingerprint);
}

MetricsReport all_ones_baseline(const datagen::DatasetManifest& manifest) {
  if (manifest.entries.empty()) throw std::invalid_argument("baseline: empty dataset");
  const datagen::EvalLoader loader(manifest);
  std::vector<PerImageMetrics> per_image;
  per_image.reserve(loader.size());
  MicroCounts micro;
  for (std::size_t i = 0; i < loader.size(); ++i) {
    const datagen::EvalSample sample = loader.get(i);
    const masking::BinaryMask pred =
        masking::BinaryMask::ones(sample.gt_mask.height, sample.gt_mask.width);
    PerImageMetrics m;
    m.id = sample.id;
    m.label = sample.label;
    m.f1_plus = dice(pred, sample.gt_mask, PositiveClass::FG);
    m.f1_minus = dice(pred, sample.gt_mask, PositiveClass::BG);
    per_image.push_back(m);
    micro.add(pred, sample.gt_mask);
  }
  return assemble(manifest.split, std::move(per_image), micro, /*has_classification=*/false,
                  "all-ones");
}

void print_table(const MetricsReport& report, std::ostream& os) {
  os << std::fixed << std::setprecision(2);
  os << "split      n    Cl. error (%)   F1+ (%)   F1- (%)\n";
  os << std::left << std::setw(10) << report.split << " " << std::setw(4) << report.n_images
     << " ";
  if (report.has_classification) {
    os << std::setw(15) << report.classification_error_pct << " ";
  } else {
    os << std::setw(15) << "--" << " ";
  }
  os << std::setw(9) << report.f1_plus_pct << " " << std::setw(9) << report.f1_minus_pct << "\n";
}

json MetricsReport::to_json() const {
  json j;
  j["schema_version"] = 1;
  j["split"] = split;
  j["n_images"] = n_images;
  if (has_classification) {
    j["classification_error_pct"] = classification_error_pct;
  } else {
    j["classification_error_pct"] = nullptr;
  }
  j["f1_plus_pct"] = f1_plus_pct;
  j["f1_minus_pct"] = f1_minus_pct;
  j["micro_f1_plus_pct"] = micro_f1_plus_pct;
  j["micro_f1_minus_pct"] = micro_f1_minus_pct;
  j["config_fingerprint"] = config_fingerprint;
  json per = json::array();
  for (const auto& m : per_image) {
    json e = {{"id", m.id}, {"label", m.label}, {"f1_plus", m.f1_plus}, {"f1_minus", m.f1_minus}};
    if (has_classification) e["predicted"] = m.predicted;
    per.push_back(e);
  }
  j["per_image"] = per;
  return j;
}

void write_report_json(const MetricsReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report: " + path);
  out << report.to_json().dump(1) << "\n";
}

}  // namespace wsseg::evaluation
