#include "promptevo/promptevo.h"

#include <cstdio>
#include <cstring>
#include <exception>
#include <fstream>
#include <memory>
#include <string>

#include "promptevo/config.hpp"
#include "promptevo/error.hpp"
#include "promptevo/orchestrator.hpp"

struct pe_config {
  promptevo::config::RunConfig config;
};

struct pe_run {
  promptevo::orchestrator::RunLog log;
  std::string best_prompt;
  std::string best_status;
};

namespace {

thread_local std::string last_error;

pe_status status_of(promptevo::ErrorCode code) { return static_cast<pe_status>(static_cast<int>(code) + 1); }

template <class F>
pe_status guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return PE_OK;
  } catch (const promptevo::Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const std::exception& e) {
    last_error = e.what();
    return PE_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown failure";
    return PE_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw promptevo::Error(promptevo::ErrorCode::invalid_argument, std::string(what) + " is null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void fill(pe_baseline_stats* out, const promptevo::evaluator::BaselineStats& s) {
  out->count = s.count;
  out->cd_min = s.cd_min;
  out->cd_max = s.cd_max;
  out->cd_mean = s.cd_mean;
  out->ci95_halfwidth = s.ci95_halfwidth;
  out->r_squared = s.r_squared;
}

}  // namespace

extern "C" {

const char* pe_last_error(void) { return last_error.c_str(); }

const char* pe_status_name(pe_status status) {
  if (status == PE_OK) return "Ok";
  if (status == PE_ERR_INTERNAL) return "Internal";
  if (status > PE_OK && status < PE_ERR_INTERNAL) {
    return promptevo::to_string(static_cast<promptevo::ErrorCode>(static_cast<int>(status) - 1));
  }
  return "Unknown";
}

const char* pe_version(void) { return "0.1.0"; }

void pe_string_free(char* s) { std::free(s); }

pe_status pe_config_default(pe_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new pe_config{};
  });
}

pe_status pe_config_load(const char* path, pe_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new pe_config{promptevo::config::load(path)};
  });
}

pe_status pe_config_set(pe_config* config, const char* assignment) {
  return guarded([&] {
    require(config, "config");
    require(assignment, "assignment");
    promptevo::config::apply_override(config->config, assignment);
  });
}

pe_status pe_config_set_seed(pe_config* config, uint64_t seed) {
  return guarded([&] {
    require(config, "config");
    config->config.seed = seed;
  });
}

pe_status pe_config_to_toml(const pe_config* config, char** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = dup_string(promptevo::config::to_toml(config->config));
  });
}

pe_status pe_config_next_run_dir(const pe_config* config, const char* prefix, char** out) {
  return guarded([&] {
    require(config, "config");
    require(prefix, "prefix");
    require(out, "out");
    const auto& c = config->config;
    for (int n = 1;; ++n) {
      char name[64];
      std::snprintf(name, sizeof name, "-s%llu-%03d", static_cast<unsigned long long>(c.seed), n);
      const auto dir = c.output_dir / (std::string(prefix) + name);
      if (!std::filesystem::exists(dir)) {
        *out = dup_string(dir.string());
        return;
      }
    }
  });
}

void pe_config_free(pe_config* config) { delete config; }

pe_status pe_baseline(const pe_config* config, const char* out_dir, pe_baseline_stats* stats) {
  return guarded([&] {
    require(config, "config");
    require(out_dir, "out_dir");
    const auto& c = config->config;
    promptevo::config::validate(c);
    const auto backends = promptevo::orchestrator::make_backends(c);
    const auto set = promptevo::orchestrator::compute_reference_set(c, c.baseline.prompt, c.baseline.count, backends);
    promptevo::orchestrator::save_reference_set(out_dir, set);
    std::ofstream(std::filesystem::path(out_dir) / "config.toml") << promptevo::config::to_toml(c);
    if (stats) fill(stats, set.stats);
  });
}

pe_status pe_optimize(const pe_config* config, const char* run_dir, pe_run** out) {
  return guarded([&] {
    require(config, "config");
    require(run_dir, "run_dir");
    require(out, "out");
    promptevo::orchestrator::RunOptions options;
    options.run_dir = run_dir;
    auto run = std::make_unique<pe_run>();
    run->log = promptevo::orchestrator::run_optimization(config->config, options);
    if (run->log.best) {
      run->best_prompt = run->log.best->prompt;
      run->best_status = promptevo::orchestrator::to_string(run->log.best->status);
    }
    *out = run.release();
  });
}

int pe_run_generation_count(const pe_run* run) {
  return run ? static_cast<int>(run->log.generations.size()) : 0;
}

pe_status pe_run_generation(const pe_run* run, int generation, pe_generation_stats* out) {
  return guarded([&] {
    require(run, "run");
    require(out, "out");
    if (generation < 0 || generation >= static_cast<int>(run->log.generations.size())) {
      throw promptevo::Error(promptevo::ErrorCode::invalid_argument, "generation out of range");
    }
    const auto& g = run->log.generations[static_cast<std::size_t>(generation)];
    *out = {g.generation, g.cdn_mean, g.cdn_ci95, g.cdn_min, g.population_best, g.global_best, g.sigma, g.failures};
  });
}

pe_status pe_run_best(const pe_run* run, pe_design* out) {
  return guarded([&] {
    require(run, "run");
    require(out, "out");
    if (!run->log.best) throw promptevo::Error(promptevo::ErrorCode::invalid_argument, "run has no records");
    const auto& b = *run->log.best;
    *out = {b.generation, b.index, b.fitness, b.result.cd, b.result.frontal_area, run->best_prompt.c_str(),
            run->best_status.c_str()};
  });
}

pe_status pe_run_baseline(const pe_run* run, pe_baseline_stats* out) {
  return guarded([&] {
    require(run, "run");
    require(out, "out");
    fill(out, run->log.baseline);
  });
}

const char* pe_run_termination_reason(const pe_run* run) {
  return run ? run->log.termination_reason.c_str() : "";
}

void pe_run_free(pe_run* run) { delete run; }

pe_status pe_similarity_sweep(const pe_config* config, int word_count, const char* reference, const char* csv_path,
                              size_t* rows) {
  return guarded([&] {
    require(config, "config");
    require(csv_path, "csv_path");
    const auto& c = config->config;
    promptevo::config::validate(c);
    const auto backends = promptevo::orchestrator::make_backends(c);
    const auto table = promptevo::orchestrator::similarity_sweep(
        c, word_count > 0 ? word_count : c.sweep.word_count, reference ? reference : c.sweep.reference, backends);
    promptevo::orchestrator::write_sweep_csv(csv_path, table);
    if (rows) *rows = table.size();
  });
}

pe_status pe_report(const char* run_dir, char** out) {
  return guarded([&] {
    require(run_dir, "run_dir");
    std::string joined;
    for (const auto& p : promptevo::orchestrator::export_report(run_dir)) joined += p.string() + "\n";
    if (out) *out = dup_string(joined);
  });
}

}  // extern "C"
