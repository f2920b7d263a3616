#include "wsseg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "wsseg/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace wsseg::trainer {

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be > 0");
  if (momentum < 0.0 || momentum >= 1.0) throw std::invalid_argument("momentum must lie in [0,1)");
  if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
  if (!(t_init > 0.0)) throw std::invalid_argument("t_init must be > 0");
  if (t_growth < 1.0) throw std::invalid_argument("t_growth must be >= 1");
  if (!(t_max > 0.0)) throw std::invalid_argument("t_max must be > 0");
  if (t_init > t_max) throw std::invalid_argument("t_init must be <= t_max");
  if (checkpoint_every < 1) throw std::invalid_argument("checkpoint_every must be >= 1");
  if (num_classes < 2) throw std::invalid_argument("num_classes must be >= 2");
  if (in_channels < 1) throw std::invalid_argument("in_channels must be >= 1");
}

json TrainConfig::to_json() const {
  return json{{"epochs", epochs},
              {"batch_size", batch_size},
              {"lr", lr},
              {"momentum", momentum},
              {"lambda", lambda},
              {"t_init", t_init},
              {"t_growth", t_growth},
              {"t_max", t_max},
              {"variant", objectives::to_string(variant)},
              {"seed", seed},
              {"checkpoint_every", checkpoint_every},
              {"num_classes", num_classes},
              {"in_channels", in_channels},
              {"localizer_widths", localizer_widths},
              {"classifier_widths", classifier_widths}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lr = j.value("lr", c.lr);
  c.momentum = j.value("momentum", c.momentum);
  c.lambda = j.value("lambda", c.lambda);
  c.t_init = j.value("t_init", c.t_init);
  c.t_growth = j.value("t_growth", c.t_growth);
  c.t_max = j.value("t_max", c.t_max);
  if (j.contains("variant")) {
    c.variant = objectives::variant_from_string(j.at("variant").get<std::string>());
  }
  c.seed = j.value("seed", c.seed);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  c.num_classes = j.value("num_classes", c.num_classes);
  c.in_channels = j.value("in_channels", c.in_channels);
  c.localizer_widths = j.value("localizer_widths", c.localizer_widths);
  c.classifier_widths = j.value("classifier_widths", c.classifier_widths);
  return c;
}

json TrainLogRecord::to_json() const {
  return json{{"epoch", epoch},
              {"mean_total_loss", mean_total_loss},
              {"mean_ce", mean_ce},
              {"mean_regularizer", mean_regularizer},
              {"mean_barrier", mean_barrier},
              {"mean_s_plus_fraction", mean_s_plus_fraction},
              {"t", t},
              {"train_classification_error_pct", train_classification_error_pct}};
}

void sgd_step(ad::Tensor& param, std::vector<double>& velocity, double lr, double momentum) {
  if (velocity.size() != param.numel()) {
    throw std::invalid_argument("sgd_step: velocity size " + std::to_string(velocity.size()) +
                                " does not match parameter shape " +
                                ad::shape_str(param.shape()));
  }
  auto& w = param.values();
  const auto& g = param.grad();
  for (std::size_t i = 0; i < w.size(); ++i) {
    velocity[i] = momentum * velocity[i] + g[i];
    w[i] -= lr * velocity[i];
  }
}

TrainResult train(const datagen::DatasetManifest& manifest, const TrainConfig& cfg,
                  const std::string& out_dir, std::ostream* progress) {
  cfg.validate();
  if (manifest.entries.empty()) throw std::invalid_argument("train: empty dataset");

  if (!out_dir.empty()) fs::create_directories(out_dir);

  const datagen::TrainingLoader loader(manifest);

  Rng rng(cfg.seed);
  models::LocalizerParams loc = models::make_localizer(cfg.in_channels, cfg.localizer_widths, rng);
  models::ClassifierParams cls =
      models::make_classifier(cfg.in_channels, cfg.num_classes, cfg.classifier_widths, rng);

  std::vector<ad::Tensor> params = loc.parameters();
  {
    auto cp = cls.parameters();
    params.insert(params.end(), cp.begin(), cp.end());
  }
  std::vector<std::vector<double>> velocity;
  velocity.reserve(params.size());
  for (const auto& p : params) velocity.emplace_back(p.numel(), 0.0);

  const double omega = static_cast<double>(manifest.height) * manifest.width;

  std::ofstream log_file;
  if (!out_dir.empty()) {
    log_file.open((fs::path(out_dir) / "train_log.jsonl").string());
    if (!log_file) throw std::runtime_error("cannot write training log in " + out_dir);
  }

  auto write_checkpoint = [&](int epoch, const std::string& name) {
    checkpoint::Checkpoint ckpt;
    ckpt.epoch = epoch;
    ckpt.localizer = loc;
    ckpt.classifier = cls;
    ckpt.variant = cfg.variant;
    ckpt.lambda = cfg.lambda;
    ckpt.train_config = cfg.to_json();
    ckpt.rng_state = rng.save_state();
    const std::string path = (fs::path(out_dir) / name).string();
    checkpoint::save(ckpt, path);
    return path;
  };

  TrainResult result;
  double t = cfg.t_init;
  std::vector<std::size_t> order(loader.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng shuffle_rng(Rng::mix(cfg.seed, 0x5eedull + static_cast<std::uint64_t>(epoch)));
    shuffle(order, shuffle_rng);

    double sum_total = 0.0, sum_ce = 0.0, sum_reg = 0.0, sum_barrier = 0.0, sum_sfrac = 0.0;
    std::size_t correct = 0;

    objectives::ObjectiveConfig ocfg;
    ocfg.variant = cfg.variant;
    ocfg.lambda = cfg.lambda;
    ocfg.t = t;
    ocfg.num_classes = static_cast<std::size_t>(cfg.num_classes);
    ocfg.omega_size = omega;

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t bsz = std::min<std::size_t>(cfg.batch_size, order.size() - start);
      ad::zero_grads(params);
      for (std::size_t bi = 0; bi < bsz; ++bi) {
        const datagen::TrainSample sample = loader.get(order[start + bi]);
        ad::Graph g;
        models::ForwardResult fr =
            models::forward_pipeline(g, sample.image, sample.label, loc, cls, ocfg);
        const double loss_v = fr.loss.value();
        if (!std::isfinite(loss_v)) {
          std::ostringstream os;
          os << "non-finite loss at epoch " << epoch << ", sample " << sample.id
             << ": total=" << loss_v << " ce=" << fr.ce.value()
             << " regularizer=" << fr.regularizer.value() << " barrier=" << fr.barrier.value()
             << " s+=" << fr.s_plus.value() << " s-=" << fr.s_minus.value() << " t=" << t;
          throw std::runtime_error(os.str());
        }
        // Per-batch loss is the mean of per-item losses.
        g.backward(g.scalar_mul(fr.loss, 1.0 / static_cast<double>(bsz)));

        sum_total += loss_v;
        sum_ce += fr.ce.value();
        sum_reg += fr.regularizer.value();
        sum_barrier += fr.barrier.value();
        sum_sfrac += fr.s_plus.value() / omega;
        if (static_cast<int>(fr.p_hat_fg.argmax()) == sample.label) ++correct;
      }
      for (std::size_t pi = 0; pi < params.size(); ++pi) {
        sgd_step(params[pi], velocity[pi], cfg.lr, cfg.momentum);
      }
    }

    const double n = static_cast<double>(order.size());
    TrainLogRecord rec;
    rec.epoch = epoch;
    rec.mean_total_loss = sum_total / n;
    rec.mean_ce = sum_ce / n;
    rec.mean_regularizer = sum_reg / n;
    rec.mean_barrier = sum_barrier / n;
    rec.mean_s_plus_fraction = sum_sfrac / n;
    rec.t = t;
    rec.train_classification_error_pct = 100.0 * (n - static_cast<double>(correct)) / n;
    result.log.push_back(rec);
    if (log_file) log_file << rec.to_json().dump() << "\n";
    if (progress) {
      *progress << "epoch " << epoch << "/" << cfg.epochs << " loss " << rec.mean_total_loss
                << " ce " << rec.mean_ce << " s+ " << rec.mean_s_plus_fraction << " err% "
                << rec.train_classification_error_pct << " t " << t << "\n";
    }

    t = std::min(t * cfg.t_growth, cfg.t_max);

    if (!out_dir.empty() && epoch % cfg.checkpoint_every == 0 && epoch != cfg.epochs) {
      write_checkpoint(epoch, "checkpoint_epoch" + std::to_string(epoch) + ".json");
    }
  }

  if (!out_dir.empty()) {
    result.final_checkpoint_path = write_checkpoint(cfg.epochs, "checkpoint_final.json");
  }
  result.localizer = loc;
  result.classifier = cls;
  return result;
}

}  // namespace wsseg::trainer
