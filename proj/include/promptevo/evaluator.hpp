#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "promptevo/geometry.hpp"
#include "promptevo/line_process.hpp"

namespace promptevo::evaluator {

/// Noise level giving R^2 close to 0.84 on the 300-design synthetic "A car"
/// baseline; produced by tools/calibrate_noise.
inline constexpr double kDefaultNoiseSigma = 0.0053;

/// cd = c0 + c1 * frontal_area + N(0, noise_sigma), with the noise drawn from
/// a stream keyed by (seed, mesh content).
struct ProxyCoefficients {
  double c0 = 0.10;
  double c1 = 0.30;
  double noise_sigma = kDefaultNoiseSigma;
  std::uint64_t seed = 0;
  int grid_resolution = geometry::kDefaultGridResolution;
};

/// Drag evaluation of an aligned, validated mesh. Implementations must be safe
/// to call concurrently. `cd_normalized` is left at zero.
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  /// Throws Error(evaluation_failed) when the design cannot be scored.
  virtual geometry::EvalResult evaluate(const geometry::TriMesh& mesh) = 0;
  virtual std::string id() const = 0;
};

class ProxyEvaluator final : public Evaluator {
 public:
  explicit ProxyEvaluator(ProxyCoefficients coefficients = {});
  geometry::EvalResult evaluate(const geometry::TriMesh& mesh) override;
  std::string id() const override { return "proxy-v1"; }
  const ProxyCoefficients& coefficients() const { return coefficients_; }

 private:
  ProxyCoefficients coefficients_;
};

struct ExternalCfdOptions {
  std::vector<std::string> command;
  std::size_t pool_size = 1;
  std::chrono::milliseconds timeout{3'600'000};
  std::string case_name = "default";
  std::filesystem::path scratch_dir;
};

/// Client for a CFD adapter speaking the line protocol
///   request:   {"id", "mesh_path", "case"}
///   response:  {"id", "status": "ok"|"error", "cd": number, "message"}
/// after a {"ready": true} greeting. Meshes are written as OBJ into
/// scratch_dir. Frontal area and dimensions are computed locally.
class ExternalCfdEvaluator final : public Evaluator {
 public:
  explicit ExternalCfdEvaluator(ExternalCfdOptions options);
  geometry::EvalResult evaluate(const geometry::TriMesh& mesh) override;
  std::string id() const override;

 private:
  ExternalCfdOptions options_;
  ProcessPool pool_;
};

struct BaselineStats {
  std::size_t count = 0;
  double cd_min = 0.0;
  double cd_max = 0.0;
  double cd_mean = 0.0;
  double ci95_halfwidth = 0.0;
  double r_squared = 0.0;

  double span() const { return cd_max - cd_min; }
};

/// Summary of a reference set: cd range and mean, normal-approximation 95%
/// half-width 1.96 * sd / sqrt(n) with the sample sd, and the R^2 of an
/// ordinary least-squares fit of cd on frontal area.
/// Throws Error(degenerate_baseline) for fewer than two results, zero cd span
/// or zero frontal-area variance.
BaselineStats compute_baseline(std::span<const geometry::EvalResult> results);

/// Mean and normal-approximation 95% half-width of a sample; half-width is 0
/// for fewer than two values.
struct MeanCi {
  double mean = 0.0;
  double ci95_halfwidth = 0.0;
};
MeanCi mean_ci95(std::span<const double> values);

/// Raw cd charged to designs that failed to generate or evaluate: 20% above
/// the worst baseline design.
double penalty_cd(const BaselineStats& stats);

nlohmann::json to_json(const BaselineStats& stats);
BaselineStats baseline_from_json(const nlohmann::json& doc);
void save_baseline(const std::filesystem::path& path, const BaselineStats& stats);
BaselineStats load_baseline(const std::filesystem::path& path);

}  // namespace promptevo::evaluator
