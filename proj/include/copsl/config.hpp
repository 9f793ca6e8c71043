#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "copsl/trainer.hpp"

namespace copsl {

// Run configuration file: a JSON object. Unknown keys are rejected; absent
// keys keep their defaults.
//
//   format_version        1 (required)
//   suite                 "synthetic-2d" | "engineering-3d-stub" | ["zdt1", "zdt2", ...]
//   loss                  "ls" | "cosmos" | "tch" | "mtch"
//   cosmos_gamma          > 0                       (100)
//   cosmos_sign           -1 | 1                    (-1)
//   epsilon               > 0, TCH/MTCH offset      (1e-3)
//   iterations            T                         (500)
//   batch_size            B                         (15)
//   learning_rate         eta                       (1e-3)
//   adam_beta1/adam_beta2/adam_epsilon              (0.9, 0.999, 1e-8)
//   dirichlet_alpha       [a_1..a_m] or null        (all ones)
//   weights               [w_1..w_K] or null        (all ones)
//   hidden_sizes          [256, 256]
//   shared_depth          1
//   seed                  0
//   eval_grid_size        0 = auto (100 for m=2, 105 for m=3)
//   eval_interval         10
//   ideal_update          "before_loss" | "after_loss"
//   strict_weight_gating  false
inline constexpr int kConfigVersion = 1;

nlohmann::json config_to_json(const RunConfig& config);
// ConfigError on unknown keys, wrong types, or a bad format_version.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

nlohmann::json record_to_json(const RunRecord& record);

} // namespace copsl
