#pragma once

// Checkpoint archive: one file holding named parameter tensors plus the
// model config JSON, with optional optimizer state and data-rng state so
// training resumes bit-exactly.
//   "RGCK", u16 version=1, u32 json_len, json header, f32 payloads.

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "regen/model/baseline.hpp"
#include "regen/model/regen_model.hpp"

namespace regen {

struct TrainerSnapshot {
    int64_t iter = 0;
    int64_t adam_t = 0;
    std::vector<uint64_t> rng_state;
};

void save_checkpoint(const std::filesystem::path& path,
                     RegenModel<float>& model,
                     const TrainerSnapshot* snap = nullptr);
void save_checkpoint(const std::filesystem::path& path,
                     BaselineModel<float>& model,
                     const TrainerSnapshot* snap = nullptr);
void save_checkpoint(const std::filesystem::path& path,
                     InContextModel<float>& model,
                     const TrainerSnapshot* snap = nullptr);

// "regen", "baseline" or "incontext"; throws CheckpointError on anything
// that is not a readable checkpoint.
std::string checkpoint_kind(const std::filesystem::path& path);

std::unique_ptr<RegenModel<float>> load_regen(
    const std::filesystem::path& path, TrainerSnapshot* snap = nullptr);
std::unique_ptr<BaselineModel<float>> load_baseline(
    const std::filesystem::path& path, TrainerSnapshot* snap = nullptr);
std::unique_ptr<InContextModel<float>> load_incontext(
    const std::filesystem::path& path, TrainerSnapshot* snap = nullptr);

// ------------------------------- config <-> json (strict key checking)

nlohmann::ordered_json to_json(const RegenConfig& cfg);
RegenConfig regen_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const BaselineConfig& cfg);
BaselineConfig baseline_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const InContextConfig& cfg);
InContextConfig incontext_config_from_json(const nlohmann::json& j);

}  // namespace regen
