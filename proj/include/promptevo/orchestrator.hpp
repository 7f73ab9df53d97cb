#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "promptevo/config.hpp"
#include "promptevo/evaluator.hpp"
#include "promptevo/genbridge.hpp"
#include "promptevo/geometry.hpp"

namespace promptevo::orchestrator {

enum class DesignStatus { ok, generation_failed, evaluation_failed };

const char* to_string(DesignStatus s) noexcept;

struct DesignRecord {
  int generation = 0;
  int index = 0;
  std::vector<double> genome;
  std::string prompt;
  std::vector<int> token_ids;           ///< token runs only
  std::string adjective, noun;          ///< bag-of-words runs only
  double adjective_similarity = 0.0;
  double noun_similarity = 0.0;
  geometry::EvalResult result;          ///< zero unless status is ok
  double fitness = 0.0;                 ///< cd_N, or the penalty on failure
  DesignStatus status = DesignStatus::ok;
  std::string message;
};

struct GenerationStats {
  int generation = 0;
  double cdn_mean = 0.0;
  double cdn_ci95 = 0.0;
  double cdn_min = 0.0;
  double population_best = 0.0;  ///< best fitness among the selected parents
  double global_best = 0.0;       ///< running minimum over every record so far
  double sigma = 0.0;             ///< step size used to sample this generation
  std::vector<double> genome_mean;
  std::vector<double> genome_variance;
  double adjective_similarity_mean = 0.0;
  double noun_similarity_mean = 0.0;
  int failures = 0;
};

struct RunLog {
  std::string config_toml;
  evaluator::BaselineStats baseline;
  std::string generator_id;
  std::string evaluator_id;
  std::vector<GenerationStats> generations;
  std::vector<DesignRecord> records;
  std::optional<DesignRecord> best;
  std::string termination_reason;
};

/// Backends for a run. Null members are built from the configuration.
struct Backends {
  std::shared_ptr<genbridge::ShapeGenerator> generator;
  std::shared_ptr<evaluator::Evaluator> evaluator;
};

Backends make_backends(const config::RunConfig& config, Backends overrides = {});

struct RunOptions {
  /// Where artifacts go; empty keeps everything in memory.
  std::filesystem::path run_dir;
  Backends backends;
  /// Used instead of baseline.file or a freshly computed reference set.
  std::optional<evaluator::BaselineStats> baseline;
  std::function<void(const GenerationStats&)> on_generation;
};

/// ask -> decode -> generate -> align -> evaluate -> normalize -> tell until
/// convergence. Candidates are evaluated on run.workers threads; records keep
/// candidate order. Failed candidates get the penalty fitness.
/// Run directory layout: config.toml, baseline.json, records.jsonl,
/// generations.jsonl, runlog.json, cma_state.json and meshes/ when enabled.
RunLog run_optimization(const config::RunConfig& config, const RunOptions& options = {});

struct ReferenceSet {
  evaluator::BaselineStats stats;
  std::vector<DesignRecord> records;
};

/// One batch of n designs for a fixed prompt (seed baseline.seed), aligned and
/// evaluated. Throws DegenerateBaseline when the results have no spread and
/// GenerationFailed when the batch cannot be produced.
ReferenceSet compute_reference_set(const config::RunConfig& config, const std::string& prompt, int n,
                                   const Backends& backends);

/// Writes baseline.json and records.jsonl of a reference set into dir.
void save_reference_set(const std::filesystem::path& dir, const ReferenceSet& set);

struct SweepRow {
  std::string word;
  std::string pos;
  double wup = 0.0;
  double chamfer = 0.0;
  bool ok = true;
  std::string message;
};

/// For word_count words (reference included) of one part of speech: Wu-Palmer
/// similarity to the reference and Chamfer distance between surface samples
/// of generate(word) and generate(reference) under the same seed.
std::vector<SweepRow> similarity_sweep(const config::RunConfig& config, int word_count, const std::string& reference,
                                       const Backends& backends);

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows);

nlohmann::json to_json(const DesignRecord& r);
nlohmann::json to_json(const GenerationStats& s);

/// Reads generations.jsonl and records.jsonl of a run directory and writes
/// generations.csv and records.csv next to them. Returns the written paths.
std::vector<std::filesystem::path> export_report(const std::filesystem::path& run_dir);

}  // namespace promptevo::orchestrator
