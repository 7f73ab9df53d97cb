// Command-line front end. Talks to the library through the C API only.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "promptevo/promptevo.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

int report_failure(pe_status status, const char* what) {
  std::fprintf(stderr, "promptevo: %s failed (%s): %s\n", what, pe_status_name(status), pe_last_error());
  return status == PE_ERR_CONFIG || status == PE_ERR_BAD_CONFIG ? kExitConfig : kExitRuntime;
}

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out;
  long long seed = -1;
};

void add_common(CLI::App* cmd, Common& c, const char* out_help) {
  cmd->add_option("--config", c.config_path, "TOML configuration file");
  cmd->add_option("--set", c.overrides, "Override, e.g. cmaes.lambda=12 (repeatable)");
  cmd->add_option("--out", c.out, out_help);
  cmd->add_option("--seed", c.seed, "Seed override")->check(CLI::NonNegativeNumber);
}

// Loads the config, applies overrides and the seed. Returns an exit code or -1.
int prepare(const Common& c, const char* seed_key, pe_config** cfg) {
  pe_status st = c.config_path.empty() ? pe_config_default(cfg) : pe_config_load(c.config_path.c_str(), cfg);
  if (st != PE_OK) return report_failure(st, "loading config");
  for (const auto& o : c.overrides) {
    if ((st = pe_config_set(*cfg, o.c_str())) != PE_OK) return report_failure(st, "applying --set");
  }
  if (c.seed >= 0) {
    const std::string assignment = std::string(seed_key) + "=" + std::to_string(c.seed);
    if ((st = pe_config_set(*cfg, assignment.c_str())) != PE_OK) return report_failure(st, "applying --seed");
  }
  return -1;
}

std::string out_dir(const Common& c, const pe_config* cfg, const char* prefix, int& code) {
  if (!c.out.empty()) return c.out;
  char* dir = nullptr;
  const pe_status st = pe_config_next_run_dir(cfg, prefix, &dir);
  if (st != PE_OK) {
    code = report_failure(st, "choosing an output directory");
    return {};
  }
  std::string result = dir;
  pe_string_free(dir);
  return result;
}

int cmd_baseline(const Common& c) {
  pe_config* cfg = nullptr;
  int code = prepare(c, "baseline.seed", &cfg);
  if (code < 0) {
    const std::string dir = out_dir(c, cfg, "baseline", code);
    pe_baseline_stats s{};
    if (code < 0) {
      const pe_status st = pe_baseline(cfg, dir.c_str(), &s);
      if (st != PE_OK) {
        code = report_failure(st, "baseline");
      } else {
        std::fprintf(stderr, "baseline: n=%zu cd in [%.6f, %.6f] mean %.6f +- %.6f, R^2 %.4f\n", s.count, s.cd_min,
                     s.cd_max, s.cd_mean, s.ci95_halfwidth, s.r_squared);
        std::printf("%s\n", dir.c_str());
        code = kExitOk;
      }
    }
  }
  pe_config_free(cfg);
  return code;
}

int cmd_optimize(const Common& c) {
  pe_config* cfg = nullptr;
  int code = prepare(c, "run.seed", &cfg);
  if (code < 0) {
    const std::string dir = out_dir(c, cfg, "run", code);
    if (code < 0) {
      pe_run* run = nullptr;
      const pe_status st = pe_optimize(cfg, dir.c_str(), &run);
      if (st != PE_OK) {
        code = report_failure(st, "optimize");
      } else {
        const int n = pe_run_generation_count(run);
        for (int g = 0; g < n; ++g) {
          pe_generation_stats s{};
          pe_run_generation(run, g, &s);
          std::fprintf(stderr, "gen %3d  mean cd_N %.4f +- %.4f  min %.4f  best %.4f  sigma %.4g%s\n", s.generation,
                       s.cdn_mean, s.cdn_ci95, s.cdn_min, s.population_best, s.sigma,
                       s.failures ? "  (failures)" : "");
        }
        pe_design best{};
        if (pe_run_best(run, &best) == PE_OK) {
          std::fprintf(stderr, "best cd_N %.6f (cd %.6f) at generation %d: %s\n", best.fitness, best.cd,
                       best.generation, best.prompt);
        }
        std::fprintf(stderr, "terminated: %s\n", pe_run_termination_reason(run));
        std::printf("%s\n", dir.c_str());
        code = kExitOk;
      }
      pe_run_free(run);
    }
  }
  pe_config_free(cfg);
  return code;
}

int cmd_similarity(const Common& c, int words, const std::string& reference) {
  pe_config* cfg = nullptr;
  int code = prepare(c, "sweep.seed", &cfg);
  if (code < 0) {
    const std::string dir = out_dir(c, cfg, "similarity", code);
    if (code < 0) {
      std::error_code ec;
      std::filesystem::create_directories(dir, ec);
      const std::string csv = (std::filesystem::path(dir) / "similarity.csv").string();
      size_t rows = 0;
      const pe_status st =
          pe_similarity_sweep(cfg, words, reference.empty() ? nullptr : reference.c_str(), csv.c_str(), &rows);
      if (st != PE_OK) {
        code = report_failure(st, "similarity");
      } else {
        std::fprintf(stderr, "similarity: %zu rows\n", rows);
        std::printf("%s\n", csv.c_str());
        code = kExitOk;
      }
    }
  }
  pe_config_free(cfg);
  return code;
}

int cmd_report(const std::string& run_dir) {
  char* written = nullptr;
  const pe_status st = pe_report(run_dir.c_str(), &written);
  if (st != PE_OK) return report_failure(st, "report");
  std::printf("%s", written);
  pe_string_free(written);
  return kExitOk;
}

int cmd_init_config(const std::string& path) {
  pe_config* cfg = nullptr;
  pe_status st = pe_config_default(&cfg);
  char* text = nullptr;
  if (st == PE_OK) st = pe_config_to_toml(cfg, &text);
  pe_config_free(cfg);
  if (st != PE_OK) return report_failure(st, "init-config");
  int code = kExitOk;
  if (path.empty()) {
    std::fputs(text, stdout);
  } else if (FILE* f = std::fopen(path.c_str(), "w")) {
    std::fputs(text, f);
    std::fclose(f);
    std::printf("%s\n", path.c_str());
  } else {
    std::fprintf(stderr, "promptevo: cannot write %s\n", path.c_str());
    code = kExitRuntime;
  }
  pe_string_free(text);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prompt-space evolutionary shape optimization"};
  app.require_subcommand(1);

  Common baseline, optimize, similarity;
  auto* b = app.add_subcommand("baseline", "Generate and evaluate the reference set");
  add_common(b, baseline, "Output directory");
  auto* o = app.add_subcommand("optimize", "Run CMA-ES over prompts");
  add_common(o, optimize, "Run directory");
  auto* s = app.add_subcommand("similarity", "Word similarity vs. shape distance sweep");
  add_common(s, similarity, "Output directory");
  int words = 0;
  std::string reference;
  s->add_option("--words", words, "Number of words (default: sweep.word_count)");
  s->add_option("--reference", reference, "Reference word (default: sweep.reference)");
  auto* r = app.add_subcommand("report", "Export plot data from a run directory");
  std::string run_dir;
  r->add_option("--run", run_dir, "Run directory")->required();
  auto* i = app.add_subcommand("init-config", "Print or write the default configuration");
  std::string init_out;
  i->add_option("--out", init_out, "Destination file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (*b) return cmd_baseline(baseline);
  if (*o) return cmd_optimize(optimize);
  if (*s) return cmd_similarity(similarity, words, reference);
  if (*r) return cmd_report(run_dir);
  if (*i) return cmd_init_config(init_out);
  return kExitConfig;
}
