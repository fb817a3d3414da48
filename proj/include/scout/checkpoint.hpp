#pragma once

#include <filesystem>
#include <memory>

#include <json.hpp>

#include "scout/router.hpp"

namespace scout {

inline constexpr const char* kCheckpointFormat = "scout-checkpoint";
inline constexpr int kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  std::unique_ptr<Router> router;
  nlohmann::json extra;  // e.g. training log, cost box
};

nlohmann::json checkpoint_to_json(const Router& router, const nlohmann::json& extra = nlohmann::json::object());
std::unique_ptr<Router> router_from_json(const nlohmann::json& j);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const Router& router, const std::filesystem::path& path,
                     const nlohmann::json& extra = nlohmann::json::object());
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace scout
