#pragma once

#include <string>

#include "wsseg/models.hpp"
#include "wsseg/objectives.hpp"

#include "json.hpp"

namespace wsseg::checkpoint {

/// Versioned JSON container for both networks plus whatever config and RNG
/// state the producing run wants to round-trip. Doubles survive exactly
/// (shortest round-trip serialization).
struct Checkpoint {
  int schema_version = 1;
  int epoch = 0;
  models::LocalizerParams localizer;
  models::ClassifierParams classifier;
  objectives::Variant variant = objectives::Variant::SEM;
  double lambda = 1.0;
  nlohmann::json train_config;  // as recorded by the trainer; may be null
  std::string rng_state;
};

void save(const Checkpoint& ckpt, const std::string& path);
Checkpoint load(const std::string& path);

nlohmann::json to_json(const Checkpoint& ckpt);
Checkpoint from_json(const nlohmann::json& j);

/// Order-stable FNV-1a over every parameter value; used to assert that
/// evaluation leaves weights untouched.
std::uint64_t weights_fingerprint(const models::LocalizerParams& loc,
                                  const models::ClassifierParams& cls);

}  // namespace wsseg::checkpoint
