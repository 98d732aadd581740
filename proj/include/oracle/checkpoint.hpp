#pragma once

#include <nlohmann/json.hpp>
#include <string>

#include "oracle/losses.hpp"
#include "oracle/model.hpp"

namespace oracle {

using Json = nlohmann::ordered_json;

Json loss_config_to_json(const LossConfig& cfg);
LossConfig loss_config_from_json(const Json& j);

Json model_to_json(const ModelParams& params, const LossConfig& cfg);

struct Checkpoint {
    ModelParams params;
    LossConfig objective;
};

Checkpoint model_from_json(const Json& j);

// Serialized with full round-trip precision; identical inputs produce
// byte-identical files.
void save_checkpoint(const ModelParams& params, const LossConfig& cfg,
                     const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace oracle
