#include "scout/checkpoint.hpp"

#include <fstream>

#include "scout/baselines.hpp"
#include "scout/scout_router.hpp"

namespace scout {

nlohmann::json checkpoint_to_json(const Router& router, const nlohmann::json& extra) {
  return {{"format", kCheckpointFormat},
          {"version", kCheckpointVersion},
          {"router", router.to_json()},
          {"extra", extra}};
}

std::unique_ptr<Router> router_from_json(const nlohmann::json& j) {
  const std::string type = j.at("type").get<std::string>();
  std::unique_ptr<Router> r;
  if (type == "scout") {
    r = ScoutRouter::from_json(j);
  } else if (type == "scout_no_dc") {
    r = NoDecouplingRouter::from_json(j);
  } else if (type == "input_agnostic") {
    r = InputAgnosticRouter::from_json(j);
  } else if (type == "knn") {
    r = KnnRouter::from_json(j);
  } else if (type == "lr") {
    r = RidgeRouter::from_json(j);
  } else if (type == "mlp") {
    r = MlpRouter::from_json(j);
  } else if (type == "mf") {
    r = MfRouter::from_json(j);
  } else if (type == "always") {
    r = std::make_unique<AlwaysModelRouter>(registry_from_json(j.at("registry")), j.at("index").get<std::size_t>());
  } else if (type == "oracle") {
    r = std::make_unique<OracleRouter>(registry_from_json(j.at("registry")));
  } else {
    throw CheckpointError("unknown router type '" + type + "'");
  }
  if (j.contains("registry_hash") && j.at("registry_hash").get<std::uint64_t>() != r->registry().hash())
    throw CheckpointError("registry hash mismatch in checkpoint");
  return r;
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", std::string()) != kCheckpointFormat)
    throw CheckpointError("not a router checkpoint");
  const int version = j.value("version", 0);
  if (version != kCheckpointVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint c;
  c.router = router_from_json(j.at("router"));
  c.extra = j.value("extra", nlohmann::json::object());
  return c;
}

void save_checkpoint(const Router& router, const std::filesystem::path& path, const nlohmann::json& extra) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << checkpoint_to_json(router, extra).dump() << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace scout
