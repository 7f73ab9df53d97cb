#include "promptevo/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <thread>

#include <Eigen/Dense>

#include "promptevo/cmaes.hpp"
#include "promptevo/error.hpp"
#include "promptevo/lexicon.hpp"
#include "promptevo/tokenizer.hpp"

namespace promptevo::orchestrator {
namespace {

using config::Representation;
using config::RunConfig;

template <class F>
void parallel_for(int n, int workers, F&& f) {
  const int threads = std::max(1, std::min(workers, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) f(i);
    });
  }
  for (auto& th : pool) th.join();
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = seed ^ (a * 0x9E3779B97F4A7C15ULL) ^ (b * 0xC2B2AE3D27D4EB4FULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Maps genomes to prompts for either representation.
class Codec {
 public:
  explicit Codec(const RunConfig& c) : representation_(c.representation), vocab_limit_(c.tokenizer.vocab_limit) {
    if (representation_ == Representation::bow) {
      const auto taxonomy = lexicon::Taxonomy::load(c.lexicon.taxonomy);
      words_ = lexicon::build_word_set(taxonomy, c.lexicon.reference_adjective, c.lexicon.reference_noun,
                                       static_cast<std::size_t>(c.lexicon.pool_size), c.lexicon.pool_seed,
                                       c.lexicon.sense_selection);
      initial_ = Eigen::Vector2d(1.0, 1.0);
    } else {
      vocab_ = tokenizer::BpeVocab::load(c.tokenizer.vocab);
      const auto init = tokenizer::initial_token_genome(c.tokenizer.initial_text, *vocab_,
                                                        static_cast<std::size_t>(c.tokenizer.length));
      initial_ = Eigen::Map<const Eigen::VectorXd>(init.data(), static_cast<Eigen::Index>(init.size()));
    }
  }

  const Eigen::VectorXd& initial_mean() const { return initial_; }

  void decode(DesignRecord& r) const {
    if (representation_ == Representation::bow) {
      const auto d = lexicon::decode_bow({r.genome[0], r.genome[1]}, *words_);
      r.prompt = d.prompt;
      r.adjective = d.adjective;
      r.noun = d.noun;
      r.adjective_similarity = d.adjective_similarity;
      r.noun_similarity = d.noun_similarity;
    } else {
      const auto limit = static_cast<tokenizer::TokenId>(
          std::min<std::size_t>(static_cast<std::size_t>(vocab_limit_), vocab_->size()));
      const auto ids = tokenizer::round_and_clamp(r.genome, limit);
      r.token_ids.assign(ids.begin(), ids.end());
      r.prompt = std::string(tokenizer::kTokenPromptPrefix) + tokenizer::decode_tokens(ids, *vocab_);
    }
  }

 private:
  Representation representation_;
  int vocab_limit_;
  std::optional<lexicon::WordSet> words_;
  std::optional<tokenizer::BpeVocab> vocab_;
  Eigen::VectorXd initial_;
};

geometry::TriMesh generate_aligned(genbridge::ShapeGenerator& gen, const std::string& prompt, std::uint64_t seed) {
  auto result = gen.generate({prompt, seed, 1});
  if (result.meshes.size() != 1) throw Error(ErrorCode::generation_failed, "generator returned no mesh");
  try {
    return geometry::align_to_axes(geometry::validate_mesh(result.meshes.front()));
  } catch (const Error& e) {
    throw Error(ErrorCode::generation_failed, e.what());
  }
}

struct Scoring {
  evaluator::BaselineStats baseline;
  double penalty_fitness = 0.0;
};

void score(DesignRecord& r, const Backends& b, std::uint64_t seed, const Scoring& s,
           const std::filesystem::path& mesh_path) {
  geometry::TriMesh mesh;
  try {
    mesh = generate_aligned(*b.generator, r.prompt, seed);
  } catch (const std::exception& e) {
    r.status = DesignStatus::generation_failed;
    r.message = e.what();
    r.fitness = s.penalty_fitness;
    return;
  }
  try {
    r.result = b.evaluator->evaluate(mesh);
    r.result.cd_normalized = geometry::normalize_cd(r.result.cd, s.baseline.cd_min, s.baseline.cd_max);
    if (!std::isfinite(r.result.cd_normalized)) throw Error(ErrorCode::evaluation_failed, "non-finite cd");
    r.fitness = r.result.cd_normalized;
  } catch (const std::exception& e) {
    r.status = DesignStatus::evaluation_failed;
    r.message = e.what();
    r.result = {};
    r.fitness = s.penalty_fitness;
    return;
  }
  if (!mesh_path.empty()) geometry::write_obj(mesh_path, mesh);
}

GenerationStats summarize(int generation, double sigma, const std::vector<DesignRecord>& records, bool bow) {
  GenerationStats s;
  s.generation = generation;
  s.sigma = sigma;
  std::vector<double> fitness;
  for (const auto& r : records) {
    fitness.push_back(r.fitness);
    if (r.status != DesignStatus::ok) ++s.failures;
  }
  const auto m = evaluator::mean_ci95(fitness);
  s.cdn_mean = m.mean;
  s.cdn_ci95 = m.ci95_halfwidth;
  s.cdn_min = *std::min_element(fitness.begin(), fitness.end());
  const std::size_t d = records.front().genome.size();
  const double n = static_cast<double>(records.size());
  s.genome_mean.assign(d, 0.0);
  s.genome_variance.assign(d, 0.0);
  for (const auto& r : records) {
    for (std::size_t k = 0; k < d; ++k) s.genome_mean[k] += r.genome[k] / n;
  }
  for (const auto& r : records) {
    for (std::size_t k = 0; k < d; ++k) s.genome_variance[k] += (r.genome[k] - s.genome_mean[k]) * (r.genome[k] - s.genome_mean[k]) / n;
  }
  if (bow) {
    for (const auto& r : records) {
      s.adjective_similarity_mean += r.adjective_similarity / n;
      s.noun_similarity_mean += r.noun_similarity / n;
    }
  }
  return s;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
  return out;
}

evaluator::BaselineStats resolve_baseline(const RunConfig& c, const RunOptions& o, const Backends& b) {
  if (o.baseline) return *o.baseline;
  if (!c.baseline.file.empty()) return evaluator::load_baseline(c.baseline.file);
  return compute_reference_set(c, c.baseline.prompt, c.baseline.count, b).stats;
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot read " + path.string());
  std::vector<nlohmann::json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::parse_error, path.string() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

const char* to_string(DesignStatus s) noexcept {
  switch (s) {
    case DesignStatus::ok: return "ok";
    case DesignStatus::generation_failed: return "generation_failed";
    case DesignStatus::evaluation_failed: return "evaluation_failed";
  }
  return "unknown";
}

Backends make_backends(const RunConfig& c, Backends overrides) {
  Backends b = std::move(overrides);
  if (!b.generator) {
    if (c.generator.backend == "external") {
      genbridge::ExternalGeneratorOptions o;
      o.command = c.generator.command;
      o.pool_size = static_cast<std::size_t>(c.generator.pool_size);
      o.timeout = std::chrono::milliseconds(static_cast<long long>(c.generator.timeout_s * 1000.0));
      b.generator = std::make_shared<genbridge::ExternalGenerator>(std::move(o));
    } else {
      b.generator = std::make_shared<genbridge::SyntheticGenerator>();
    }
  }
  if (!b.evaluator) {
    if (c.evaluator.backend == "external") {
      evaluator::ExternalCfdOptions o;
      o.command = c.evaluator.command;
      o.pool_size = static_cast<std::size_t>(c.evaluator.pool_size);
      o.timeout = std::chrono::milliseconds(static_cast<long long>(c.evaluator.timeout_s * 1000.0));
      o.case_name = c.evaluator.case_name;
      const char* scratch = std::getenv("PROMPTEVO_SCRATCH_DIR");
      o.scratch_dir = (scratch && *scratch) ? std::filesystem::path(scratch)
                                            : std::filesystem::temp_directory_path() / "promptevo";
      b.evaluator = std::make_shared<evaluator::ExternalCfdEvaluator>(std::move(o));
    } else {
      evaluator::ProxyCoefficients k;
      k.c0 = c.evaluator.c0;
      k.c1 = c.evaluator.c1;
      k.noise_sigma = c.evaluator.noise_sigma;
      k.seed = c.evaluator.seed;
      k.grid_resolution = c.evaluator.grid_resolution;
      b.evaluator = std::make_shared<evaluator::ProxyEvaluator>(k);
    }
  }
  return b;
}

RunLog run_optimization(const RunConfig& config, const RunOptions& options) {
  config::validate(config);
  const Backends backends = make_backends(config, options.backends);
  const Codec codec(config);
  const bool bow = config.representation == Representation::bow;

  RunLog log;
  log.config_toml = config::to_toml(config);
  log.generator_id = backends.generator->id();
  log.evaluator_id = backends.evaluator->id();
  log.baseline = resolve_baseline(config, options, backends);
  if (!(log.baseline.span() > 0.0)) throw Error(ErrorCode::degenerate_baseline, "baseline cd span is zero");
  const Scoring scoring{log.baseline,
                        geometry::normalize_cd(evaluator::penalty_cd(log.baseline), log.baseline.cd_min,
                                               log.baseline.cd_max)};

  const auto& dir = options.run_dir;
  std::ofstream records_out, generations_out;
  if (!dir.empty()) {
    std::filesystem::create_directories(dir);
    open_out(dir / "config.toml") << log.config_toml;
    evaluator::save_baseline(dir / "baseline.json", log.baseline);
    records_out = open_out(dir / "records.jsonl");
    generations_out = open_out(dir / "generations.jsonl");
    if (config.save_meshes) std::filesystem::create_directories(dir / "meshes");
  }

  auto state = cmaes::init(config.cma(), codec.initial_mean());
  double global_best = std::numeric_limits<double>::infinity();
  while (true) {
    const auto convergence = cmaes::has_converged(state);
    if (convergence.converged) {
      log.termination_reason = convergence.reason;
      break;
    }
    const int generation = state.generation;
    const double sigma = state.sigma;
    const auto samples = cmaes::ask(state);
    std::vector<DesignRecord> records(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      auto& r = records[i];
      r.generation = generation;
      r.index = static_cast<int>(i);
      r.genome.assign(samples[i].data(), samples[i].data() + samples[i].size());
      codec.decode(r);
    }
    parallel_for(static_cast<int>(records.size()), config.workers, [&](int i) {
      auto& r = records[static_cast<std::size_t>(i)];
      const std::uint64_t seed = config.generator.per_individual_seed
                                     ? mix_seed(config.generator.seed, static_cast<std::uint64_t>(generation),
                                                static_cast<std::uint64_t>(i))
                                     : config.generator.seed;
      std::filesystem::path mesh_path;
      if (!dir.empty() && config.save_meshes) {
        char name[48];
        std::snprintf(name, sizeof name, "g%04d_i%03d.obj", generation, i);
        mesh_path = dir / "meshes" / name;
      }
      score(r, backends, seed, scoring, mesh_path);
    });

    std::vector<cmaes::EvaluatedCandidate> evaluated;
    for (std::size_t i = 0; i < records.size(); ++i) {
      evaluated.push_back({samples[i], records[i].fitness, cmaes::Origin::offspring});
    }
    if (config.strategy == cmaes::Selection::plus) {
      for (auto& p : cmaes::surviving_parents(state)) evaluated.push_back(std::move(p));
    }
    cmaes::tell(state, evaluated);

    auto stats = summarize(generation, sigma, records, bow);
    stats.population_best = state.parents.front().fitness;
    global_best = std::min(global_best, stats.cdn_min);
    stats.global_best = global_best;
    for (const auto& r : records) {
      if (!log.best || r.fitness < log.best->fitness) log.best = r;
    }
    if (!dir.empty()) {
      for (const auto& r : records) records_out << to_json(r).dump() << '\n';
      generations_out << to_json(stats).dump() << '\n';
      records_out.flush();
      generations_out.flush();
    }
    if (options.on_generation) options.on_generation(stats);
    log.generations.push_back(std::move(stats));
    for (auto& r : records) log.records.push_back(std::move(r));
  }

  if (!dir.empty()) {
    nlohmann::json doc{{"representation", config::to_string(config.representation)},
                       {"dimension", config.dimension()},
                       {"strategy", cmaes::to_string(config.strategy)},
                       {"seed", config.seed},
                       {"generator", log.generator_id},
                       {"evaluator", log.evaluator_id},
                       {"baseline", evaluator::to_json(log.baseline)},
                       {"termination_reason", log.termination_reason},
                       {"generations", nlohmann::json::array()},
                       {"config", log.config_toml}};
    for (const auto& g : log.generations) doc["generations"].push_back(to_json(g));
    if (log.best) doc["best"] = to_json(*log.best);
    open_out(dir / "runlog.json") << doc.dump(2) << '\n';
    open_out(dir / "cma_state.json") << cmaes::to_json(state).dump(2) << '\n';
  }
  return log;
}

ReferenceSet compute_reference_set(const RunConfig& config, const std::string& prompt, int n,
                                   const Backends& given) {
  if (n < 2) throw Error(ErrorCode::degenerate_baseline, "reference set needs at least two designs");
  const Backends backends = make_backends(config, given);
  auto batch = backends.generator->generate({prompt, config.baseline.seed, n});
  if (batch.meshes.size() != static_cast<std::size_t>(n)) {
    throw Error(ErrorCode::generation_failed, "generator returned the wrong batch size");
  }
  ReferenceSet set;
  set.records.resize(static_cast<std::size_t>(n));
  parallel_for(n, config.workers, [&](int i) {
    auto& r = set.records[static_cast<std::size_t>(i)];
    r.index = i;
    r.prompt = prompt;
    try {
      const auto mesh = geometry::align_to_axes(geometry::validate_mesh(batch.meshes[static_cast<std::size_t>(i)]));
      r.result = backends.evaluator->evaluate(mesh);
    } catch (const std::exception& e) {
      r.status = DesignStatus::evaluation_failed;
      r.message = e.what();
    }
  });
  std::vector<geometry::EvalResult> ok;
  for (const auto& r : set.records) {
    if (r.status == DesignStatus::ok) ok.push_back(r.result);
  }
  set.stats = evaluator::compute_baseline(ok);
  for (auto& r : set.records) {
    if (r.status != DesignStatus::ok) continue;
    r.result.cd_normalized = geometry::normalize_cd(r.result.cd, set.stats.cd_min, set.stats.cd_max);
    r.fitness = r.result.cd_normalized;
  }
  return set;
}

void save_reference_set(const std::filesystem::path& dir, const ReferenceSet& set) {
  std::filesystem::create_directories(dir);
  evaluator::save_baseline(dir / "baseline.json", set.stats);
  auto out = open_out(dir / "records.jsonl");
  for (const auto& r : set.records) out << to_json(r).dump() << '\n';
}

std::vector<SweepRow> similarity_sweep(const RunConfig& config, int word_count, const std::string& reference,
                                       const Backends& given) {
  const Backends backends = make_backends(config, given);
  const auto taxonomy = lexicon::Taxonomy::load(config.lexicon.taxonomy);
  const auto pos = lexicon::parse_part_of_speech(config.sweep.pos);
  const auto words = lexicon::sample_words(taxonomy, pos, reference, static_cast<std::size_t>(word_count),
                                           config.sweep.seed, config.lexicon.sense_selection);
  const auto points = static_cast<std::size_t>(config.sweep.points);
  const auto cloud_of = [&](const std::string& prompt) {
    return geometry::sample_surface(generate_aligned(*backends.generator, prompt, config.generator.seed), points,
                                    config.sweep.seed);
  };
  const auto ref_cloud = cloud_of(reference);
  std::vector<SweepRow> rows(words.size());
  parallel_for(static_cast<int>(words.size()), config.workers, [&](int i) {
    auto& row = rows[static_cast<std::size_t>(i)];
    const auto& w = words[static_cast<std::size_t>(i)];
    row.word = w.word;
    row.pos = lexicon::to_string(pos);
    row.wup = w.similarity;
    try {
      row.chamfer = geometry::chamfer_distance(cloud_of(w.word), ref_cloud);
    } catch (const std::exception& e) {
      row.ok = false;
      row.chamfer = std::numeric_limits<double>::quiet_NaN();
      row.message = e.what();
    }
  });
  return rows;
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
  auto out = open_out(path);
  out << "word,pos,wup,chamfer,status,message\n";
  for (const auto& r : rows) {
    out << csv_quote(r.word) << ',' << r.pos << ',' << fmt_double(r.wup) << ','
        << (r.ok ? fmt_double(r.chamfer) : std::string{}) << ',' << (r.ok ? "ok" : "generation_failed") << ','
        << csv_quote(r.message) << '\n';
  }
}

nlohmann::json to_json(const DesignRecord& r) {
  nlohmann::json j{{"generation", r.generation},
                   {"index", r.index},
                   {"genome", r.genome},
                   {"prompt", r.prompt},
                   {"status", to_string(r.status)},
                   {"fitness", r.fitness},
                   {"cd", r.result.cd},
                   {"cd_normalized", r.result.cd_normalized},
                   {"frontal_area", r.result.frontal_area},
                   {"dims", {r.result.dims.lx, r.result.dims.ly, r.result.dims.lz}}};
  if (!r.token_ids.empty()) j["token_ids"] = r.token_ids;
  if (!r.adjective.empty() || !r.noun.empty()) {
    j["adjective"] = r.adjective;
    j["noun"] = r.noun;
    j["adjective_similarity"] = r.adjective_similarity;
    j["noun_similarity"] = r.noun_similarity;
  }
  if (!r.message.empty()) j["message"] = r.message;
  return j;
}

nlohmann::json to_json(const GenerationStats& s) {
  return {{"generation", s.generation},
          {"cdn_mean", s.cdn_mean},
          {"cdn_ci95", s.cdn_ci95},
          {"cdn_min", s.cdn_min},
          {"population_best", s.population_best},
          {"global_best", s.global_best},
          {"sigma", s.sigma},
          {"genome_mean", s.genome_mean},
          {"genome_variance", s.genome_variance},
          {"adjective_similarity_mean", s.adjective_similarity_mean},
          {"noun_similarity_mean", s.noun_similarity_mean},
          {"failures", s.failures}};
}

std::vector<std::filesystem::path> export_report(const std::filesystem::path& run_dir) {
  const auto generations = read_jsonl(run_dir / "generations.jsonl");
  const auto records = read_jsonl(run_dir / "records.jsonl");
  if (generations.empty()) throw Error(ErrorCode::parse_error, "run has no generations: " + run_dir.string());

  try {
    const std::size_t d = generations.front().at("genome_mean").size();
    const auto gen_path = run_dir / "generations.csv";
    auto g = open_out(gen_path);
    g << "generation,cdn_mean,cdn_ci95,cdn_min,population_best,global_best,sigma,failures,"
         "adjective_similarity_mean,noun_similarity_mean";
    for (std::size_t k = 0; k < d; ++k) g << ",genome_mean_" << k;
    for (std::size_t k = 0; k < d; ++k) g << ",genome_variance_" << k;
    g << '\n';
    for (const auto& s : generations) {
      g << s.at("generation").get<int>();
      for (const char* key : {"cdn_mean", "cdn_ci95", "cdn_min", "population_best", "global_best", "sigma"}) {
        g << ',' << fmt_double(s.at(key).get<double>());
      }
      g << ',' << s.at("failures").get<int>();
      for (const char* key : {"adjective_similarity_mean", "noun_similarity_mean"}) {
        g << ',' << fmt_double(s.at(key).get<double>());
      }
      for (const auto& v : s.at("genome_mean")) g << ',' << fmt_double(v.get<double>());
      for (const auto& v : s.at("genome_variance")) g << ',' << fmt_double(v.get<double>());
      g << '\n';
    }

    const auto rec_path = run_dir / "records.csv";
    auto r = open_out(rec_path);
    r << "generation,index,status,fitness,cd,cd_normalized,frontal_area,lx,ly,lz,prompt\n";
    for (const auto& x : records) {
      r << x.at("generation").get<int>() << ',' << x.at("index").get<int>() << ','
        << x.at("status").get<std::string>();
      for (const char* key : {"fitness", "cd", "cd_normalized", "frontal_area"}) {
        r << ',' << fmt_double(x.at(key).get<double>());
      }
      for (const auto& v : x.at("dims")) r << ',' << fmt_double(v.get<double>());
      r << ',' << csv_quote(x.at("prompt").get<std::string>()) << '\n';
    }
    return {gen_path, rec_path};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, "malformed run records in " + run_dir.string() + ": " + e.what());
  }
}

}  // namespace promptevo::orchestrator
