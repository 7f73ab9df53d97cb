#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "promptevo/cmaes.hpp"
#include "promptevo/lexicon.hpp"

namespace promptevo::config {

enum class Representation { bow, token };

const char* to_string(Representation r) noexcept;

struct LexiconConfig {
  std::filesystem::path taxonomy;
  std::string reference_adjective = "fast";
  std::string reference_noun = "wing";
  int pool_size = 300;
  std::uint64_t pool_seed = 0;
  lexicon::SenseSelection sense_selection = lexicon::SenseSelection::max_over_pairs;
};

struct TokenizerConfig {
  std::filesystem::path vocab;
  int length = 3;
  int vocab_limit = 32768;
  std::string initial_text = " wing";
};

struct GeneratorConfig {
  std::string backend = "synthetic";  ///< synthetic | external
  std::vector<std::string> command;
  int pool_size = 1;
  double timeout_s = 300.0;
  std::uint64_t seed = 0;
  bool per_individual_seed = false;
};

struct EvaluatorConfig {
  std::string backend = "proxy";  ///< proxy | external
  double c0 = 0.10;
  double c1 = 0.30;
  double noise_sigma;
  std::uint64_t seed = 0;
  int grid_resolution = 256;
  std::vector<std::string> command;
  int pool_size = 1;
  double timeout_s = 3600.0;
  std::string case_name = "default";
};

struct BaselineConfig {
  std::filesystem::path file;  ///< stored baseline; empty means compute at start
  std::string prompt = "A car";
  int count = 300;
  std::uint64_t seed = 0;
};

struct SweepConfig {
  std::string reference = "car";
  std::string pos = "noun";
  int word_count = 300;
  std::uint64_t seed = 0;
  int points = 16384;
};

struct RunConfig {
  Representation representation = Representation::bow;
  std::uint64_t seed = 0;  ///< master seed, drives the optimizer's sampling
  std::filesystem::path output_dir = "runs";
  int workers = 1;
  bool save_meshes = false;

  cmaes::Selection strategy = cmaes::Selection::plus;
  int lambda = 10;
  int mu = 3;
  std::optional<double> sigma0;  ///< unset: 0.25 for bow, 3000 for token
  int max_generations = 100;
  double tolerance = 1e-10;

  LexiconConfig lexicon;
  TokenizerConfig tokenizer;
  GeneratorConfig generator;
  EvaluatorConfig evaluator;
  BaselineConfig baseline;
  SweepConfig sweep;

  RunConfig();

  int dimension() const { return representation == Representation::bow ? 2 : tokenizer.length; }
  double effective_sigma0() const { return sigma0 ? *sigma0 : (representation == Representation::bow ? 0.25 : 3000.0); }
  cmaes::CmaConfig cma() const;
};

/// Directory holding the bundled fixtures: $PROMPTEVO_DATA_DIR if set, else
/// the source tree's data/ directory.
std::filesystem::path data_dir();

/// Parses and validates a TOML document. Unknown sections or keys, wrong
/// value types and out-of-range values raise Error(config_error). Relative
/// paths are resolved against base_dir.
RunConfig parse(std::string_view toml_text, const std::filesystem::path& base_dir);
RunConfig load(const std::filesystem::path& path);

/// Applies one "section.key=value" override (value in TOML syntax, bare
/// strings allowed). Cross-field checks are left to validate so overrides can
/// be applied in any order.
void apply_override(RunConfig& config, std::string_view assignment);

/// Checks cross-field constraints. Throws Error(config_error).
void validate(const RunConfig& config);

/// Full TOML rendering with every key and absolute paths; parse(to_toml(c))
/// yields c.
std::string to_toml(const RunConfig& config);

}  // namespace promptevo::config
