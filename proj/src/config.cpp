#include "promptevo/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "promptevo/error.hpp"
#include "promptevo/evaluator.hpp"

namespace promptevo::config {
namespace {

[[noreturn]] void fail(const std::string& message) { throw Error(ErrorCode::config_error, message); }

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"run", {"representation", "seed", "output_dir", "workers", "save_meshes"}},
      {"cmaes", {"strategy", "lambda", "mu", "sigma0", "max_generations", "tolerance"}},
      {"lexicon", {"taxonomy", "reference_adjective", "reference_noun", "pool_size", "pool_seed", "sense_selection"}},
      {"tokenizer", {"vocab", "length", "vocab_limit", "initial_text"}},
      {"generator", {"backend", "command", "pool_size", "timeout_s", "seed", "per_individual_seed"}},
      {"evaluator",
       {"backend", "c0", "c1", "noise_sigma", "seed", "grid_resolution", "command", "pool_size", "timeout_s", "case"}},
      {"baseline", {"file", "prompt", "count", "seed"}},
      {"sweep", {"reference", "pos", "word_count", "seed", "points"}},
  };
  return s;
}

class Section {
 public:
  Section(const toml::table* table, std::string name, const std::filesystem::path& base)
      : table_(table), name_(std::move(name)), base_(base) {}

  void read(const char* key, std::string& out) const {
    if (const auto* n = find(key)) {
      const auto v = n->value<std::string>();
      if (!v || !n->is_string()) fail(where(key) + " must be a string");
      out = *v;
    }
  }
  void read(const char* key, double& out) const {
    if (const auto* n = find(key)) {
      if (!n->is_number()) fail(where(key) + " must be a number");
      out = *n->value<double>();
    }
  }
  void read(const char* key, std::optional<double>& out) const {
    if (find(key)) {
      double v = 0.0;
      read(key, v);
      out = v;
    }
  }
  void read(const char* key, int& out) const {
    if (const auto* n = find(key)) {
      if (!n->is_integer()) fail(where(key) + " must be an integer");
      const auto v = *n->value<std::int64_t>();
      if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) fail(where(key) + " is out of range");
      out = static_cast<int>(v);
    }
  }
  void read(const char* key, std::uint64_t& out) const {
    if (const auto* n = find(key)) {
      if (!n->is_integer()) fail(where(key) + " must be an integer");
      const auto v = *n->value<std::int64_t>();
      if (v < 0) fail(where(key) + " must be non-negative");
      out = static_cast<std::uint64_t>(v);
    }
  }
  void read(const char* key, bool& out) const {
    if (const auto* n = find(key)) {
      if (!n->is_boolean()) fail(where(key) + " must be true or false");
      out = *n->value<bool>();
    }
  }
  void read(const char* key, std::vector<std::string>& out) const {
    if (const auto* n = find(key)) {
      const auto* arr = n->as_array();
      if (!arr) fail(where(key) + " must be an array of strings");
      out.clear();
      for (const auto& e : *arr) {
        if (!e.is_string()) fail(where(key) + " must be an array of strings");
        out.push_back(*e.value<std::string>());
      }
    }
  }
  void read_path(const char* key, std::filesystem::path& out) const {
    std::string s;
    if (!find(key)) return;
    read(key, s);
    out = s.empty() ? std::filesystem::path{} : (base_ / s).lexically_normal();
  }

 private:
  const toml::node* find(const char* key) const { return table_ ? table_->get(key) : nullptr; }
  std::string where(const char* key) const { return name_ + "." + key; }

  const toml::table* table_;
  std::string name_;
  const std::filesystem::path& base_;
};

Representation parse_representation(const std::string& s) {
  if (s == "bow") return Representation::bow;
  if (s == "token") return Representation::token;
  fail("run.representation must be \"bow\" or \"token\", got \"" + s + "\"");
}

lexicon::SenseSelection parse_sense_selection(const std::string& s) {
  if (s == "max_over_pairs") return lexicon::SenseSelection::max_over_pairs;
  if (s == "first_sense") return lexicon::SenseSelection::first_sense;
  fail("lexicon.sense_selection must be \"max_over_pairs\" or \"first_sense\", got \"" + s + "\"");
}

const char* to_string(lexicon::SenseSelection s) {
  return s == lexicon::SenseSelection::first_sense ? "first_sense" : "max_over_pairs";
}

RunConfig from_table(const toml::table& root, const std::filesystem::path& base_dir) {
  for (const auto& [key, node] : root) {
    const auto it = schema().find(std::string(key.str()));
    if (it == schema().end()) fail("unknown section [" + std::string(key.str()) + "]");
    const auto* table = node.as_table();
    if (!table) fail("[" + std::string(key.str()) + "] must be a table");
    for (const auto& [sub, value] : *table) {
      if (!it->second.count(std::string(sub.str()))) {
        fail("unknown key " + std::string(key.str()) + "." + std::string(sub.str()));
      }
    }
  }
  const auto section = [&](const char* name) { return Section(root[name].as_table(), name, base_dir); };

  RunConfig c;
  std::string text;
  const auto run = section("run");
  text = to_string(c.representation);
  run.read("representation", text);
  c.representation = parse_representation(text);
  run.read("seed", c.seed);
  run.read_path("output_dir", c.output_dir);
  run.read("workers", c.workers);
  run.read("save_meshes", c.save_meshes);

  const auto cma = section("cmaes");
  text = cmaes::to_string(c.strategy);
  cma.read("strategy", text);
  try {
    c.strategy = cmaes::parse_selection(text);
  } catch (const Error&) {
    fail("cmaes.strategy must be \"comma\" or \"plus\", got \"" + text + "\"");
  }
  cma.read("lambda", c.lambda);
  cma.read("mu", c.mu);
  cma.read("sigma0", c.sigma0);
  cma.read("max_generations", c.max_generations);
  cma.read("tolerance", c.tolerance);

  const auto lex = section("lexicon");
  lex.read_path("taxonomy", c.lexicon.taxonomy);
  lex.read("reference_adjective", c.lexicon.reference_adjective);
  lex.read("reference_noun", c.lexicon.reference_noun);
  lex.read("pool_size", c.lexicon.pool_size);
  lex.read("pool_seed", c.lexicon.pool_seed);
  text = to_string(c.lexicon.sense_selection);
  lex.read("sense_selection", text);
  c.lexicon.sense_selection = parse_sense_selection(text);

  const auto tok = section("tokenizer");
  tok.read_path("vocab", c.tokenizer.vocab);
  tok.read("length", c.tokenizer.length);
  tok.read("vocab_limit", c.tokenizer.vocab_limit);
  tok.read("initial_text", c.tokenizer.initial_text);

  const auto gen = section("generator");
  gen.read("backend", c.generator.backend);
  gen.read("command", c.generator.command);
  gen.read("pool_size", c.generator.pool_size);
  gen.read("timeout_s", c.generator.timeout_s);
  gen.read("seed", c.generator.seed);
  gen.read("per_individual_seed", c.generator.per_individual_seed);

  const auto ev = section("evaluator");
  ev.read("backend", c.evaluator.backend);
  ev.read("c0", c.evaluator.c0);
  ev.read("c1", c.evaluator.c1);
  ev.read("noise_sigma", c.evaluator.noise_sigma);
  ev.read("seed", c.evaluator.seed);
  ev.read("grid_resolution", c.evaluator.grid_resolution);
  ev.read("command", c.evaluator.command);
  ev.read("pool_size", c.evaluator.pool_size);
  ev.read("timeout_s", c.evaluator.timeout_s);
  ev.read("case", c.evaluator.case_name);

  const auto base = section("baseline");
  base.read_path("file", c.baseline.file);
  base.read("prompt", c.baseline.prompt);
  base.read("count", c.baseline.count);
  base.read("seed", c.baseline.seed);

  const auto sw = section("sweep");
  sw.read("reference", c.sweep.reference);
  sw.read("pos", c.sweep.pos);
  sw.read("word_count", c.sweep.word_count);
  sw.read("seed", c.sweep.seed);
  sw.read("points", c.sweep.points);
  return c;
}

toml::table parse_table(std::string_view text, const std::string& source) {
  try {
    return toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << source << ":" << e.source().begin.line << ":" << e.source().begin.column << ": " << e.description();
    fail(msg.str());
  }
}

toml::array string_array(const std::vector<std::string>& v) {
  toml::array a;
  for (const auto& s : v) a.push_back(s);
  return a;
}

std::int64_t as_int(std::uint64_t v) {
  if (v > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) fail("seed does not fit in a TOML integer");
  return static_cast<std::int64_t>(v);
}

std::string absolute_or_empty(const std::filesystem::path& p) {
  return p.empty() ? std::string{} : std::filesystem::absolute(p).lexically_normal().string();
}

toml::table to_table(const RunConfig& c) {
  toml::table cma{{"strategy", cmaes::to_string(c.strategy)},
                  {"lambda", c.lambda},
                  {"mu", c.mu},
                  {"max_generations", c.max_generations},
                  {"tolerance", c.tolerance}};
  if (c.sigma0) cma.insert("sigma0", *c.sigma0);
  return toml::table{
      {"run", toml::table{{"representation", to_string(c.representation)},
                          {"seed", as_int(c.seed)},
                          {"output_dir", absolute_or_empty(c.output_dir)},
                          {"workers", c.workers},
                          {"save_meshes", c.save_meshes}}},
      {"cmaes", cma},
      {"lexicon", toml::table{{"taxonomy", absolute_or_empty(c.lexicon.taxonomy)},
                              {"reference_adjective", c.lexicon.reference_adjective},
                              {"reference_noun", c.lexicon.reference_noun},
                              {"pool_size", c.lexicon.pool_size},
                              {"pool_seed", as_int(c.lexicon.pool_seed)},
                              {"sense_selection", to_string(c.lexicon.sense_selection)}}},
      {"tokenizer", toml::table{{"vocab", absolute_or_empty(c.tokenizer.vocab)},
                                {"length", c.tokenizer.length},
                                {"vocab_limit", c.tokenizer.vocab_limit},
                                {"initial_text", c.tokenizer.initial_text}}},
      {"generator", toml::table{{"backend", c.generator.backend},
                                {"command", string_array(c.generator.command)},
                                {"pool_size", c.generator.pool_size},
                                {"timeout_s", c.generator.timeout_s},
                                {"seed", as_int(c.generator.seed)},
                                {"per_individual_seed", c.generator.per_individual_seed}}},
      {"evaluator", toml::table{{"backend", c.evaluator.backend},
                                {"c0", c.evaluator.c0},
                                {"c1", c.evaluator.c1},
                                {"noise_sigma", c.evaluator.noise_sigma},
                                {"seed", as_int(c.evaluator.seed)},
                                {"grid_resolution", c.evaluator.grid_resolution},
                                {"command", string_array(c.evaluator.command)},
                                {"pool_size", c.evaluator.pool_size},
                                {"timeout_s", c.evaluator.timeout_s},
                                {"case", c.evaluator.case_name}}},
      {"baseline", toml::table{{"file", absolute_or_empty(c.baseline.file)},
                               {"prompt", c.baseline.prompt},
                               {"count", c.baseline.count},
                               {"seed", as_int(c.baseline.seed)}}},
      {"sweep", toml::table{{"reference", c.sweep.reference},
                            {"pos", c.sweep.pos},
                            {"word_count", c.sweep.word_count},
                            {"seed", as_int(c.sweep.seed)},
                            {"points", c.sweep.points}}},
  };
}

}  // namespace

const char* to_string(Representation r) noexcept { return r == Representation::bow ? "bow" : "token"; }

RunConfig::RunConfig() {
  lexicon.taxonomy = data_dir() / "taxonomy_fixture.json";
  tokenizer.vocab = data_dir() / "vocab_fixture.json";
  evaluator.noise_sigma = evaluator::kDefaultNoiseSigma;
}

cmaes::CmaConfig RunConfig::cma() const {
  cmaes::CmaConfig c;
  c.dimension = dimension();
  c.lambda = lambda;
  c.mu = mu;
  c.sigma0 = effective_sigma0();
  c.max_generations = max_generations;
  c.mode = strategy;
  c.seed = seed;
  c.tolerance = tolerance;
  return c;
}

std::filesystem::path data_dir() {
  if (const char* env = std::getenv("PROMPTEVO_DATA_DIR"); env && *env) return env;
#ifdef PROMPTEVO_DATA_DIR
  return PROMPTEVO_DATA_DIR;
#else
  return "data";
#endif
}

RunConfig parse(std::string_view toml_text, const std::filesystem::path& base_dir) {
  auto c = from_table(parse_table(toml_text, "config"), base_dir);
  validate(c);
  return c;
}

RunConfig load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const auto base = std::filesystem::absolute(path).parent_path();
  auto c = from_table(parse_table(buffer.str(), path.string()), base);
  validate(c);
  return c;
}

void apply_override(RunConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string_view::npos || dot == std::string_view::npos || dot > eq) {
    fail("override must look like section.key=value, got \"" + std::string(assignment) + "\"");
  }
  const auto trim = [](std::string_view v) {
    const auto b = v.find_first_not_of(" \t");
    return b == std::string_view::npos ? std::string{} : std::string(v.substr(b, v.find_last_not_of(" \t") - b + 1));
  };
  const std::string section = trim(assignment.substr(0, dot));
  const std::string key = trim(assignment.substr(dot + 1, eq - dot - 1));
  const std::string value = trim(assignment.substr(eq + 1));

  toml::table root = to_table(config);
  toml::table* table = root[section].as_table();
  if (!table) fail("unknown section [" + section + "]");
  toml::table parsed;
  try {
    parsed = toml::parse("v = " + value);
  } catch (const toml::parse_error&) {
    parsed = toml::table{{"v", value}};
  }
  table->insert_or_assign(key, *parsed.get("v"));
  config = from_table(root, std::filesystem::current_path());
}

void validate(const RunConfig& c) {
  if (c.workers < 1) fail("run.workers must be at least 1");
  if (c.lambda < 1) fail("cmaes.lambda must be at least 1");
  if (c.mu < 1 || c.mu > c.lambda) fail("cmaes.mu must be in [1, lambda]");
  if (c.sigma0 && !(*c.sigma0 > 0.0)) fail("cmaes.sigma0 must be positive");
  if (c.max_generations < 1) fail("cmaes.max_generations must be at least 1");
  if (!(c.tolerance >= 0.0)) fail("cmaes.tolerance must be non-negative");
  if (c.lexicon.pool_size < 1) fail("lexicon.pool_size must be at least 1");
  if (c.tokenizer.length < 1) fail("tokenizer.length must be at least 1");
  if (c.tokenizer.vocab_limit < 1) fail("tokenizer.vocab_limit must be positive");
  if (c.generator.backend != "synthetic" && c.generator.backend != "external") {
    fail("generator.backend must be \"synthetic\" or \"external\"");
  }
  if (c.generator.backend == "external" && c.generator.command.empty()) {
    fail("generator.command is required for the external backend");
  }
  if (c.generator.pool_size < 1) fail("generator.pool_size must be at least 1");
  if (!(c.generator.timeout_s > 0.0)) fail("generator.timeout_s must be positive");
  if (c.evaluator.backend != "proxy" && c.evaluator.backend != "external") {
    fail("evaluator.backend must be \"proxy\" or \"external\"");
  }
  if (c.evaluator.backend == "external" && c.evaluator.command.empty()) {
    fail("evaluator.command is required for the external backend");
  }
  if (!(c.evaluator.c1 > 0.0)) fail("evaluator.c1 must be positive");
  if (!(c.evaluator.noise_sigma >= 0.0)) fail("evaluator.noise_sigma must be non-negative");
  if (c.evaluator.grid_resolution < 16) fail("evaluator.grid_resolution must be at least 16");
  if (c.evaluator.pool_size < 1) fail("evaluator.pool_size must be at least 1");
  if (!(c.evaluator.timeout_s > 0.0)) fail("evaluator.timeout_s must be positive");
  if (c.baseline.count < 2) fail("baseline.count must be at least 2");
  if (c.baseline.prompt.empty()) fail("baseline.prompt must not be empty");
  if (c.sweep.pos != "noun" && c.sweep.pos != "adjective") fail("sweep.pos must be \"noun\" or \"adjective\"");
  if (c.sweep.word_count < 1) fail("sweep.word_count must be at least 1");
  if (c.sweep.points < 1) fail("sweep.points must be at least 1");
  if (!std::filesystem::is_regular_file(c.lexicon.taxonomy)) {
    fail("lexicon.taxonomy not found: " + c.lexicon.taxonomy.string());
  }
  if (c.representation == Representation::token && !std::filesystem::is_regular_file(c.tokenizer.vocab)) {
    fail("tokenizer.vocab not found: " + c.tokenizer.vocab.string());
  }
  if (!c.baseline.file.empty() && !std::filesystem::is_regular_file(c.baseline.file)) {
    fail("baseline.file not found: " + c.baseline.file.string());
  }
}

std::string to_toml(const RunConfig& config) {
  std::ostringstream out;
  bool first = true;
  for (const auto& [name, section] : to_table(config)) {
    out << (first ? "" : "\n") << '[' << name.str() << "]\n";
    first = false;
    for (const auto& [key, node] : *section.as_table()) {
      out << key.str() << " = ";
      if (const auto* d = node.as_floating_point()) {
        // Shortest representation that reads back to the same double.
        char buf[64];
        const auto res = std::to_chars(buf, buf + sizeof buf, d->get());
        std::string text(buf, res.ptr);
        if (text.find_first_of(".eEn") == std::string::npos) text += ".0";
        out << text;
      } else {
        node.visit([&](const auto& v) { out << v; });
      }
      out << '\n';
    }
    if (name.str() == "cmaes" && !config.sigma0) out << "# sigma0 unset: 0.25 for bow, 3000.0 for token\n";
  }
  return out.str();
}

}  // namespace promptevo::config
