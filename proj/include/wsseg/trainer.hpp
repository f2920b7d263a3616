#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "wsseg/checkpoint.hpp"
#include "wsseg/datagen.hpp"
#include "wsseg/models.hpp"

#include "json.hpp"

namespace wsseg::trainer {

struct TrainConfig {
  int epochs = 60;
  int batch_size = 16;
  double lr = 0.05;
  double momentum = 0.9;
  double lambda = 1.0;  // 0 disables the background regularizer (ablation)
  double t_init = 1.0;
  double t_growth = 1.05;  // multiplicative per epoch
  double t_max = 10.0;
  objectives::Variant variant = objectives::Variant::SEM;
  std::uint64_t seed = 1;
  int checkpoint_every = 20;  // epochs; final checkpoint is always written
  int num_classes = 2;
  int in_channels = 1;
  std::array<int, 3> localizer_widths = {8, 16, 32};
  std::array<int, 3> classifier_widths = {8, 16, 32};

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct TrainLogRecord {
  int epoch = 0;
  double mean_total_loss = 0.0;
  double mean_ce = 0.0;
  double mean_regularizer = 0.0;
  double mean_barrier = 0.0;
  double mean_s_plus_fraction = 0.0;
  double t = 0.0;
  double train_classification_error_pct = 0.0;

  nlohmann::json to_json() const;
};

/// Classical momentum update: v <- momentum v + g; w <- w - lr v.
/// `velocity` must match the parameter shape.
void sgd_step(ad::Tensor& param, std::vector<double>& velocity, double lr, double momentum);

struct TrainResult {
  models::LocalizerParams localizer;
  models::ClassifierParams classifier;
  std::vector<TrainLogRecord> log;
  std::string final_checkpoint_path;  // empty when out_dir was empty
};

/// End-to-end SGD over Eq-style objective on both networks. Deterministic
/// given the seed: fixed init, fixed shuffle, sequential gradient
/// accumulation over batch items. The barrier parameter follows
/// t <- min(t * t_growth, t_max) after every epoch. A non-finite loss
/// aborts with a diagnostic dump of the offending item's term values.
/// When out_dir is non-empty, writes checkpoints and a JSON-lines log
/// (one record per epoch) there.
TrainResult train(const datagen::DatasetManifest& manifest, const TrainConfig& cfg,
                  const std::string& out_dir, std::ostream* progress = nullptr);

}  // namespace wsseg::trainer
