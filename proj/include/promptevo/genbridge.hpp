#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "promptevo/geometry.hpp"
#include "promptevo/line_process.hpp"

namespace promptevo::genbridge {

struct GenerationRequest {
  std::string prompt;
  std::uint64_t seed = 0;
  int batch_size = 1;
};

struct GenerationResult {
  std::vector<geometry::TriMesh> meshes;
  std::string generator_id;
  std::chrono::duration<double> latency{};
};

/// Text-to-shape backend. Implementations must be safe to call from several
/// threads at once and deterministic for a fixed (prompt, seed).
class ShapeGenerator {
 public:
  virtual ~ShapeGenerator() = default;
  /// Throws Error(generation_failed); never returns a partial batch.
  virtual GenerationResult generate(const GenerationRequest& request) = 0;
  virtual std::string id() const = 0;
};

/// Procedural car body: a lofted box hull plus a cabin wedge on top.
struct ShapeParams {
  double length = 1.0;
  double width = 0.0;
  double height = 0.0;          ///< ground to cabin roof
  double cabin_fraction = 0.0;  ///< share of height taken by the cabin
  double nose_taper = 0.0;      ///< nose cross-section scale relative to the body
};

/// Bounds applied to every parameter set.
inline constexpr double kMinExtent = 0.05;
inline constexpr double kMaxExtent = 0.95;

/// One row of the keyword table: multiplicative effects on width and height
/// and an additive change to the nose taper.
struct KeywordEffect {
  std::string_view keyword;
  double width_factor;
  double height_factor;
  double taper_delta;
};

std::span<const KeywordEffect> keyword_table();

/// Lower-cased, whitespace-collapsed, trimmed prompt.
std::string canonical_prompt(std::string_view prompt);

/// Keywords of the table that occur in the prompt. Keywords of four or more
/// characters match anywhere inside a word; shorter ones must match a whole
/// word.
std::vector<std::string_view> matched_keywords(std::string_view prompt);

/// Deterministic prompt -> body parameters: base car dimensions, scaled by
/// every matched keyword and by a +-15% residual derived from a hash of the
/// prompt's non-keyword words. Without keywords width and height stay in
/// [0.2, 0.8].
ShapeParams synthetic_shape_params(std::string_view prompt);

/// Per-sample variation for batch member `index` under `seed`, independent of
/// the prompt (two prompts with the same seed get the same perturbation).
ShapeParams vary_sample(const ShapeParams& params, std::uint64_t seed, int index);

geometry::TriMesh build_body_mesh(const ShapeParams& params);

class SyntheticGenerator final : public ShapeGenerator {
 public:
  GenerationResult generate(const GenerationRequest& request) override;
  std::string id() const override { return "synthetic-v1"; }
};

struct ExternalGeneratorOptions {
  std::vector<std::string> command;
  std::size_t pool_size = 1;
  std::chrono::milliseconds timeout{300'000};
};

/// Client for a bridge process speaking the line protocol
///   request:   {"id", "prompt", "seed", "batch"}
///   response:  {"id", "status": "ok"|"error", "mesh_paths": [...], "message"}
/// after the bridge greets with {"ready": true, "model": ...}.
class ExternalGenerator final : public ShapeGenerator {
 public:
  explicit ExternalGenerator(ExternalGeneratorOptions options);
  GenerationResult generate(const GenerationRequest& request) override;
  std::string id() const override;

 private:
  ExternalGeneratorOptions options_;
  ProcessPool pool_;
};

}  // namespace promptevo::genbridge
