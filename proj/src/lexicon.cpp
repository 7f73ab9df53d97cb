#include "promptevo/lexicon.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "promptevo/error.hpp"

namespace promptevo::lexicon {
namespace {

using nlohmann::json;

std::unordered_map<int, int> upward_distances(const Taxonomy& t, int start) {
  std::unordered_map<int, int> dist{{start, 0}};
  std::deque<int> queue{start};
  while (!queue.empty()) {
    const int node = queue.front();
    queue.pop_front();
    for (int p : t.parents(node)) {
      if (dist.emplace(p, dist[node] + 1).second) queue.push_back(p);
    }
  }
  return dist;
}

std::vector<WordEntry> sample_entries(const Taxonomy& t, PartOfSpeech pos, std::string_view reference,
                                      std::size_t n, std::mt19937_64& rng, SenseSelection selection) {
  std::vector<std::string> pool = t.words(pos);
  std::erase(pool, std::string(reference));
  std::vector<std::string> chosen{std::string(reference)};
  const std::size_t take = n > 0 ? std::min(pool.size(), n - 1) : 0;
  // Partial Fisher-Yates over the sorted pool.
  for (std::size_t i = 0; i < take; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
    chosen.push_back(pool[i]);
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<WordEntry> out;
  out.reserve(chosen.size());
  for (auto& w : chosen) {
    const double sim = wup_similarity(t, w, reference, selection, pos);
    out.push_back({std::move(w), sim});
  }
  return out;
}

}  // namespace

const char* to_string(PartOfSpeech pos) noexcept {
  return pos == PartOfSpeech::adjective ? "adjective" : "noun";
}

PartOfSpeech parse_part_of_speech(std::string_view text) {
  if (text == "adjective" || text == "adj" || text == "a") return PartOfSpeech::adjective;
  if (text == "noun" || text == "n") return PartOfSpeech::noun;
  throw Error(ErrorCode::parse_error, "unknown part of speech '" + std::string(text) + "'");
}

Taxonomy Taxonomy::from_json_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("taxonomy is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("nodes") || !doc["nodes"].is_array()) {
    throw Error(ErrorCode::parse_error, "taxonomy document needs a 'nodes' array");
  }

  Taxonomy t;
  std::unordered_map<std::string, int> index;
  std::vector<std::vector<std::string>> parent_names;
  try {
    for (const auto& node : doc["nodes"]) {
      const auto id = node.at("id").get<std::string>();
      if (!index.emplace(id, static_cast<int>(t.ids_.size())).second) {
        throw Error(ErrorCode::parse_error, "duplicate node id '" + id + "'");
      }
      t.ids_.push_back(id);
      std::vector<std::string> names;
      if (node.contains("parents")) {
        names = node["parents"].get<std::vector<std::string>>();
      } else if (node.contains("parent") && !node["parent"].is_null()) {
        names.push_back(node["parent"].get<std::string>());
      }
      parent_names.push_back(std::move(names));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("malformed taxonomy node: ") + e.what());
  }

  const std::size_t n = t.ids_.size();
  if (n == 0) throw Error(ErrorCode::missing_root, "taxonomy has no nodes");
  t.parents_.resize(n);
  std::vector<std::vector<int>> children(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& name : parent_names[i]) {
      const auto it = index.find(name);
      if (it == index.end()) {
        throw Error(ErrorCode::parse_error, "node '" + t.ids_[i] + "' has unknown parent '" + name + "'");
      }
      if (it->second == static_cast<int>(i)) {
        throw Error(ErrorCode::cycle_detected, "node '" + t.ids_[i] + "' is its own parent");
      }
      t.parents_[i].push_back(it->second);
      children[static_cast<std::size_t>(it->second)].push_back(static_cast<int>(i));
    }
  }

  // Kahn's algorithm from the parentless nodes; leftovers sit on a cycle.
  std::vector<int> pending(n);
  std::vector<int> roots;
  std::deque<int> queue;
  for (std::size_t i = 0; i < n; ++i) {
    pending[i] = static_cast<int>(t.parents_[i].size());
    if (pending[i] == 0) {
      roots.push_back(static_cast<int>(i));
      queue.push_back(static_cast<int>(i));
    }
  }
  t.depth_.assign(n, 0);
  std::size_t visited = 0;
  while (!queue.empty()) {
    const int node = queue.front();
    queue.pop_front();
    ++visited;
    int d = 0;
    for (int p : t.parents_[static_cast<std::size_t>(node)]) d = std::max(d, t.depth_[static_cast<std::size_t>(p)]);
    t.depth_[static_cast<std::size_t>(node)] = d + 1;
    for (int c : children[static_cast<std::size_t>(node)]) {
      if (--pending[static_cast<std::size_t>(c)] == 0) queue.push_back(c);
    }
  }
  if (visited != n) throw Error(ErrorCode::cycle_detected, "taxonomy contains a cycle");
  if (roots.size() != 1) {
    throw Error(ErrorCode::missing_root,
                "taxonomy must have exactly one root, found " + std::to_string(roots.size()));
  }
  t.root_ = roots.front();

  if (doc.contains("lemmas")) {
    try {
      for (const auto& lemma : doc["lemmas"]) {
        const auto word = lemma.at("word").get<std::string>();
        const auto pos = parse_part_of_speech(lemma.at("pos").get<std::string>());
        auto& senses = t.lemmas_[word];
        for (const auto& s : lemma.at("senses")) {
          const auto it = index.find(s.get<std::string>());
          if (it == index.end()) {
            throw Error(ErrorCode::parse_error, "lemma '" + word + "' references unknown node");
          }
          senses.push_back({it->second, pos});
        }
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::parse_error, std::string("malformed lemma: ") + e.what());
    }
  }
  return t;
}

Taxonomy Taxonomy::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open taxonomy " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

bool Taxonomy::contains(std::string_view word) const {
  return lemmas_.find(std::string(word)) != lemmas_.end();
}

std::vector<Sense> Taxonomy::senses(std::string_view word, std::optional<PartOfSpeech> pos) const {
  const auto it = lemmas_.find(std::string(word));
  if (it == lemmas_.end()) return {};
  if (!pos) return it->second;
  std::vector<Sense> out;
  for (const auto& s : it->second) {
    if (s.pos == *pos) out.push_back(s);
  }
  return out;
}

std::vector<std::string> Taxonomy::words(PartOfSpeech pos) const {
  std::vector<std::string> out;
  for (const auto& [word, senses] : lemmas_) {
    if (word.find_first_of(" _") != std::string::npos) continue;
    if (std::any_of(senses.begin(), senses.end(), [&](const Sense& s) { return s.pos == pos; })) {
      out.push_back(word);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

double wup_similarity(const Taxonomy& t, int node_a, int node_b) {
  const auto up_a = upward_distances(t, node_a);
  const auto up_b = upward_distances(t, node_b);
  int best_depth = 0;
  int best_len = 0;
  for (const auto& [node, da] : up_a) {
    const auto it = up_b.find(node);
    if (it == up_b.end()) continue;
    const int d = t.depth(node);
    const int len = da + it->second;
    if (d > best_depth || (d == best_depth && len < best_len)) {
      best_depth = d;
      best_len = len;
    }
  }
  // A single root guarantees a common ancestor.
  return 2.0 * best_depth / (2.0 * best_depth + best_len);
}

double wup_similarity(const Taxonomy& t, std::string_view word_a, std::string_view word_b,
                      SenseSelection selection, std::optional<PartOfSpeech> pos) {
  const auto sa = t.senses(word_a, pos);
  const auto sb = t.senses(word_b, pos);
  if (sa.empty()) throw Error(ErrorCode::unknown_word, "unknown word '" + std::string(word_a) + "'");
  if (sb.empty()) throw Error(ErrorCode::unknown_word, "unknown word '" + std::string(word_b) + "'");
  if (selection == SenseSelection::first_sense) return wup_similarity(t, sa.front().node, sb.front().node);
  double best = 0.0;
  for (const auto& a : sa) {
    for (const auto& b : sb) {
      best = std::max(best, a.node == b.node ? 1.0 : wup_similarity(t, a.node, b.node));
    }
  }
  return best;
}

std::vector<WordEntry> sample_words(const Taxonomy& t, PartOfSpeech pos, std::string_view reference,
                                    std::size_t n, std::uint64_t seed, SenseSelection selection) {
  if (t.senses(reference, pos).empty()) {
    throw Error(ErrorCode::unknown_word, "unknown reference " + std::string(to_string(pos)) + " '" +
                                             std::string(reference) + "'");
  }
  std::mt19937_64 rng(seed);
  return sample_entries(t, pos, reference, n, rng, selection);
}

WordSet build_word_set(const Taxonomy& t, std::string_view reference_adjective,
                       std::string_view reference_noun, std::size_t n, std::uint64_t seed,
                       SenseSelection selection) {
  if (t.senses(reference_adjective, PartOfSpeech::adjective).empty()) {
    throw Error(ErrorCode::unknown_word, "unknown reference adjective '" + std::string(reference_adjective) + "'");
  }
  if (t.senses(reference_noun, PartOfSpeech::noun).empty()) {
    throw Error(ErrorCode::unknown_word, "unknown reference noun '" + std::string(reference_noun) + "'");
  }
  std::mt19937_64 rng(seed);
  WordSet set;
  set.reference_adjective = reference_adjective;
  set.reference_noun = reference_noun;
  set.adjectives = sample_entries(t, PartOfSpeech::adjective, reference_adjective, n, rng, selection);
  set.nouns = sample_entries(t, PartOfSpeech::noun, reference_noun, n, rng, selection);
  return set;
}

const WordEntry& nearest_word(const std::vector<WordEntry>& words, double target) {
  if (words.empty()) throw Error(ErrorCode::invalid_argument, "empty word list");
  const WordEntry* best = &words.front();
  double best_gap = std::abs(best->similarity - target);
  for (const auto& w : words) {
    const double gap = std::abs(w.similarity - target);
    if (gap < best_gap - kSimilarityTieTolerance ||
        (std::abs(gap - best_gap) <= kSimilarityTieTolerance && w.word < best->word)) {
      best = &w;
      best_gap = std::min(gap, best_gap);
    }
  }
  return *best;
}

std::string bow_prompt(std::string_view adjective, std::string_view noun) {
  std::string out = "A ";
  out += adjective;
  out += " car in the shape of ";
  out += noun;
  return out;
}

BowDecoded decode_bow(const BowGenome& genome, const WordSet& words) {
  const auto clamp01 = [](double v) { return std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0); };
  const WordEntry& adj = nearest_word(words.adjectives, clamp01(genome.adj_value));
  const WordEntry& noun = nearest_word(words.nouns, clamp01(genome.noun_value));
  return {adj.word, noun.word, adj.similarity, noun.similarity, bow_prompt(adj.word, noun.word)};
}

}  // namespace promptevo::lexicon
