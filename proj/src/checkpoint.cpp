#include "wsseg/checkpoint.hpp"

#include <fstream>

#include "wsseg/rng.hpp"

using nlohmann::json;

namespace wsseg::checkpoint {

namespace {

json tensor_to_json(const ad::Tensor& t) {
  json j;
  j["shape"] = t.shape();
  j["values"] = t.values();
  return j;
}

ad::Tensor tensor_from_json(const json& j, const std::string& name) {
  try {
    auto shape = j.at("shape").get<std::vector<std::size_t>>();
    auto values = j.at("values").get<std::vector<double>>();
    return ad::Tensor::from(std::move(shape), std::move(values), /*requires_grad=*/true);
  } catch (const std::exception& e) {
    throw std::runtime_error("checkpoint: bad tensor '" + name + "': " + e.what());
  }
}

json params_to_json(const std::vector<std::pair<std::string, ad::Tensor>>& named) {
  json j = json::object();
  for (const auto& [name, tensor] : named) j[name] = tensor_to_json(tensor);
  return j;
}

void load_params(const json& j, std::vector<std::pair<std::string, ad::Tensor>> named) {
  for (auto& [name, tensor] : named) {
    ad::Tensor loaded = tensor_from_json(j.at(name), name);
    if (!loaded.same_shape(tensor)) {
      throw std::runtime_error("checkpoint: tensor '" + name + "' has shape " +
                               ad::shape_str(loaded.shape()) + ", expected " +
                               ad::shape_str(tensor.shape()));
    }
    tensor.values() = loaded.values();
  }
}

}  // namespace

json to_json(const Checkpoint& ckpt) {
  json j;
  j["schema_version"] = ckpt.schema_version;
  j["epoch"] = ckpt.epoch;
  j["variant"] = objectives::to_string(ckpt.variant);
  j["lambda"] = ckpt.lambda;
  j["train_config"] = ckpt.train_config;
  j["rng_state"] = ckpt.rng_state;
  j["localizer"] = {{"in_channels", ckpt.localizer.in_channels},
                    {"widths", ckpt.localizer.widths},
                    {"params", params_to_json(ckpt.localizer.named_parameters())}};
  j["classifier"] = {{"in_channels", ckpt.classifier.in_channels},
                     {"num_classes", ckpt.classifier.num_classes},
                     {"widths", ckpt.classifier.widths},
                     {"params", params_to_json(ckpt.classifier.named_parameters())}};
  return j;
}

Checkpoint from_json(const json& j) {
  Checkpoint ckpt;
  try {
    ckpt.schema_version = j.at("schema_version").get<int>();
    if (ckpt.schema_version != 1) {
      throw std::runtime_error("unsupported schema_version " +
                               std::to_string(ckpt.schema_version));
    }
    ckpt.epoch = j.at("epoch").get<int>();
    ckpt.variant = objectives::variant_from_string(j.at("variant").get<std::string>());
    ckpt.lambda = j.at("lambda").get<double>();
    ckpt.train_config = j.value("train_config", json());
    ckpt.rng_state = j.value("rng_state", std::string());

    const json& loc = j.at("localizer");
    const json& cls = j.at("classifier");
    // Architecture is rebuilt from the stored dims, then weights overwrite
    // the placeholder init.
    Rng dummy(0);
    ckpt.localizer = models::make_localizer(loc.at("in_channels").get<int>(),
                                            loc.at("widths").get<std::array<int, 3>>(), dummy);
    ckpt.classifier = models::make_classifier(cls.at("in_channels").get<int>(),
                                              cls.at("num_classes").get<int>(),
                                              cls.at("widths").get<std::array<int, 3>>(), dummy);
    load_params(loc.at("params"), ckpt.localizer.named_parameters());
    load_params(cls.at("params"), ckpt.classifier.named_parameters());
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("checkpoint: malformed container: ") + e.what());
  }
  return ckpt;
}

void save(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << to_json(ckpt).dump(1) << "\n";
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

Checkpoint load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed checkpoint " + path + ": " + e.what());
  }
  return from_json(j);
}

std::uint64_t weights_fingerprint(const models::LocalizerParams& loc,
                                  const models::ClassifierParams& cls) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& [name, tensor] : loc.named_parameters()) {
    h = fnv1a(name.data(), name.size(), h);
    h = fnv1a(tensor.values().data(), tensor.values().size() * sizeof(double), h);
  }
  for (const auto& [name, tensor] : cls.named_parameters()) {
    h = fnv1a(name.data(), name.size(), h);
    h = fnv1a(tensor.values().data(), tensor.values().size() * sizeof(double), h);
  }
  return h;
}

}  // namespace wsseg::checkpoint
