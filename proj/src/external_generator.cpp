#include <chrono>

#include "promptevo/error.hpp"
#include "promptevo/genbridge.hpp"

namespace promptevo::genbridge {

ExternalGenerator::ExternalGenerator(ExternalGeneratorOptions options)
    : options_(std::move(options)), pool_(options_.command, options_.pool_size, options_.timeout) {
  if (options_.command.empty()) throw Error(ErrorCode::config_error, "external generator needs a command");
}

std::string ExternalGenerator::id() const {
  const auto hello = pool_.last_handshake();
  if (hello.is_object() && hello.contains("model") && hello["model"].is_string()) {
    return "external:" + hello["model"].get<std::string>();
  }
  return "external:" + options_.command.front();
}

GenerationResult ExternalGenerator::generate(const GenerationRequest& request) {
  const auto start = std::chrono::steady_clock::now();
  if (request.prompt.empty()) throw Error(ErrorCode::generation_failed, "empty prompt");
  if (request.batch_size < 1) throw Error(ErrorCode::generation_failed, "batch_size must be at least 1");
  const nlohmann::json reply = pool_.call(
      {{"prompt", request.prompt}, {"seed", request.seed}, {"batch", request.batch_size}},
      ErrorCode::generation_failed);
  if (reply.value("status", std::string{}) != "ok") {
    throw Error(ErrorCode::generation_failed, "bridge error: " + reply.value("message", std::string{"no message"}));
  }
  const auto paths = reply.find("mesh_paths");
  if (paths == reply.end() || !paths->is_array() ||
      paths->size() != static_cast<std::size_t>(request.batch_size)) {
    throw Error(ErrorCode::generation_failed, "bridge returned the wrong number of mesh paths");
  }
  GenerationResult result;
  result.generator_id = id();
  for (const auto& p : *paths) {
    if (!p.is_string()) throw Error(ErrorCode::generation_failed, "mesh path is not a string");
    try {
      result.meshes.push_back(geometry::validate_mesh(geometry::read_obj(std::filesystem::path(p.get<std::string>()))));
    } catch (const Error& e) {
      throw Error(ErrorCode::generation_failed, std::string("unusable mesh from bridge: ") + e.what());
    }
  }
  result.latency = std::chrono::steady_clock::now() - start;
  return result;
}

}  // namespace promptevo::genbridge
