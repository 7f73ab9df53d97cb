#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "promptevo/error.hpp"
#include "promptevo/lexicon.hpp"

using namespace promptevo;
using namespace promptevo::lexicon;

namespace {

const std::string kFixture = std::string(PROMPTEVO_DATA_DIR) + "/taxonomy_fixture.json";

const Taxonomy& fixture() {
  static const Taxonomy t = Taxonomy::load(kFixture);
  return t;
}

ErrorCode code_of(const std::string& doc) {
  try {
    Taxonomy::from_json_text(doc);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::invalid_argument;
}

// Independent oracle for a tree: Wu-Palmer from root paths, where the LCS
// depth is the length of the shared path prefix.
struct PathOracle {
  std::map<std::string, std::string> parent;
  std::map<std::string, std::vector<std::string>> senses;

  PathOracle() {
    std::ifstream in(kFixture);
    const auto doc = nlohmann::json::parse(in);
    for (const auto& n : doc["nodes"]) {
      parent[n["id"]] = n["parent"].is_null() ? std::string{} : n["parent"].get<std::string>();
    }
    for (const auto& l : doc["lemmas"]) senses[l["word"]] = l["senses"].get<std::vector<std::string>>();
  }

  std::vector<std::string> root_path(const std::string& id) const {
    std::vector<std::string> p;
    for (std::string cur = id; !cur.empty(); cur = parent.at(cur)) p.push_back(cur);
    std::reverse(p.begin(), p.end());
    return p;
  }

  double wup(const std::string& a, const std::string& b) const {
    double best = 0.0;
    for (const auto& sa : senses.at(a)) {
      for (const auto& sb : senses.at(b)) {
        const auto pa = root_path(sa);
        const auto pb = root_path(sb);
        std::size_t common = 0;
        while (common < pa.size() && common < pb.size() && pa[common] == pb[common]) ++common;
        best = std::max(best, 2.0 * static_cast<double>(common) / static_cast<double>(pa.size() + pb.size()));
      }
    }
    return best;
  }
};

}  // namespace

TEST_CASE("fixture taxonomy loads with one root") {
  const auto& t = fixture();
  CHECK(t.node_id(t.root()) == "entity.n.01");
  CHECK(t.depth(t.root()) == 1);
  CHECK(t.node_count() >= 60);
  CHECK(t.contains("car"));
  CHECK(t.contains("fast"));
  CHECK_FALSE(t.contains("zeppelin"));
}

TEST_CASE("taxonomy validation errors") {
  CHECK(code_of(R"({"nodes":[{"id":"a","parent":null},{"id":"b","parent":"b"}],"lemmas":[]})") ==
        ErrorCode::cycle_detected);
  CHECK(code_of(R"({"nodes":[{"id":"r","parent":null},{"id":"a","parent":"b"},{"id":"b","parent":"a"}],"lemmas":[]})") ==
        ErrorCode::cycle_detected);
  CHECK(code_of(R"({"nodes":[{"id":"a","parent":null},{"id":"b","parent":null}],"lemmas":[]})") ==
        ErrorCode::missing_root);
  CHECK(code_of(R"({"nodes":[{"id":"a","parent":null},{"id":"b","parent":"zzz"}],"lemmas":[]})") ==
        ErrorCode::parse_error);
  CHECK(code_of(R"({"nodes":[{"id":"a","parent":null}],"lemmas":[{"word":"x","pos":"noun","senses":["q"]}]})") ==
        ErrorCode::parse_error);
  CHECK(code_of("{not json") == ErrorCode::parse_error);
}

TEST_CASE("wup identity, symmetry and range on the fixture") {
  const auto& t = fixture();
  std::vector<std::string> words = t.words(PartOfSpeech::noun);
  for (const auto& w : t.words(PartOfSpeech::adjective)) words.push_back(w);
  for (const auto& a : words) {
    CHECK(wup_similarity(t, a, a) == 1.0);
    for (const auto& b : words) {
      const double s = wup_similarity(t, a, b);
      CHECK(s > 0.0);
      CHECK(s <= 1.0);
      CHECK(s == wup_similarity(t, b, a));
      if (a != b) CHECK(s < 1.0);
    }
  }
}

TEST_CASE("wup matches the root-path oracle on every fixture pair") {
  const auto& t = fixture();
  const PathOracle oracle;
  std::vector<std::string> words = t.words(PartOfSpeech::noun);
  for (const auto& w : t.words(PartOfSpeech::adjective)) words.push_back(w);
  for (const auto& a : words) {
    for (const auto& b : words) CHECK(std::abs(wup_similarity(t, a, b) - oracle.wup(a, b)) <= 1e-12);
  }
}

TEST_CASE("wup hand-computed sibling case") {
  // object and process are depth-3 children of physical_entity (depth 2).
  CHECK(std::abs(wup_similarity(fixture(), "object", "process") - 2.0 / 3.0) <= 1e-12);
}

TEST_CASE("wup snake and frog against car") {
  CHECK(wup_similarity(fixture(), "snake", "car") == doctest::Approx(8.0 / 23.0));
  CHECK(wup_similarity(fixture(), "frog", "car") == doctest::Approx(8.0 / 22.0));
}

TEST_CASE("wup unknown word") {
  try {
    wup_similarity(fixture(), "car", "zeppelin");
    FAIL("expected UnknownWord");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unknown_word);
  }
}

TEST_CASE("wup on a DAG uses longest-path depth and sense selection") {
  // r -> a -> b -> x ; r -> x (second parent) ; r -> c -> y
  const auto t = Taxonomy::from_json_text(R"({
    "nodes": [{"id":"r","parent":null},{"id":"a","parent":"r"},{"id":"b","parent":"a"},
              {"id":"x","parents":["b","r"]},{"id":"c","parent":"r"},{"id":"y","parent":"c"},
              {"id":"z","parent":"y"}],
    "lemmas": [{"word":"ex","pos":"noun","senses":["x"]},
               {"word":"bee","pos":"noun","senses":["b"]},
               {"word":"multi","pos":"noun","senses":["z","b"]},
               {"word":"why","pos":"noun","senses":["y"]}]})");
  CHECK(t.depth(t.root()) == 1);
  // x has depth 4 through the longest path.
  CHECK(wup_similarity(t, "ex", "bee") == doctest::Approx(2.0 * 3.0 / (4.0 + 3.0)));
  // Max over pairs picks the b sense of "multi"; the first sense is z.
  CHECK(wup_similarity(t, "multi", "bee") == 1.0);
  CHECK(wup_similarity(t, "multi", "bee", SenseSelection::first_sense) == doctest::Approx(2.0 / (4.0 + 3.0)));
  CHECK(wup_similarity(t, "multi", "why", SenseSelection::first_sense) == doctest::Approx(2.0 * 3.0 / (4.0 + 3.0)));
}

TEST_CASE("build_word_set is deterministic and bounded") {
  const auto& t = fixture();
  const auto a = build_word_set(t, "fast", "wing", 10, 1);
  const auto b = build_word_set(t, "fast", "wing", 10, 1);
  REQUIRE(a.nouns.size() == 10);
  REQUIRE(a.adjectives.size() == 10);
  for (std::size_t i = 0; i < a.nouns.size(); ++i) CHECK(a.nouns[i].word == b.nouns[i].word);
  for (std::size_t i = 0; i < a.adjectives.size(); ++i) CHECK(a.adjectives[i].word == b.adjectives[i].word);
  const auto has = [](const std::vector<WordEntry>& v, const std::string& w) {
    return std::any_of(v.begin(), v.end(), [&](const WordEntry& e) { return e.word == w; });
  };
  CHECK(has(a.nouns, "wing"));
  CHECK(has(a.adjectives, "fast"));
  for (const auto* list : {&a.nouns, &a.adjectives}) {
    std::set<std::string> unique;
    for (const auto& e : *list) {
      CHECK(e.similarity > 0.0);
      CHECK(e.similarity <= 1.0);
      unique.insert(e.word);
    }
    CHECK(unique.size() == list->size());
  }
  const auto other = build_word_set(t, "fast", "wing", 10, 2);
  bool differs = false;
  for (std::size_t i = 0; i < a.nouns.size(); ++i) differs |= a.nouns[i].word != other.nouns[i].word;
  CHECK(differs);
}

TEST_CASE("build_word_set returns the full lexicon when n is large") {
  const auto& t = fixture();
  const auto s = build_word_set(t, "fast", "wing", 100000, 3);
  CHECK(s.nouns.size() == t.words(PartOfSpeech::noun).size());
  CHECK(s.adjectives.size() == t.words(PartOfSpeech::adjective).size());
  CHECK_THROWS_AS(build_word_set(t, "fast", "zeppelin", 5, 0), Error);
}

TEST_CASE("decode_bow examples") {
  const auto s = build_word_set(fixture(), "fast", "wing", 1000, 0);
  CHECK(decode_bow({1.0, 1.0}, s).prompt == "A fast car in the shape of wing");
  const auto clamped = decode_bow({-0.3, 1.7}, s);
  const auto direct = decode_bow({0.0, 1.0}, s);
  CHECK(clamped.prompt == direct.prompt);
  CHECK(decode_bow({std::nan(""), 1.0}, s).prompt == direct.prompt);
}

TEST_CASE("decode_bow picks the brute-force argmin") {
  const auto s = build_word_set(fixture(), "fast", "wing", 1000, 0);
  const auto argmin = [](const std::vector<WordEntry>& words, double target) {
    std::string best;
    double gap = std::numeric_limits<double>::infinity();
    for (const auto& w : words) {
      const double g = std::abs(w.similarity - target);
      if (g < gap - 1e-12 || (std::abs(g - gap) <= 1e-12 && w.word < best)) {
        gap = std::min(gap, g);
        best = w.word;
      }
    }
    return best;
  };
  for (double a = -0.1; a <= 1.1; a += 0.01) {
    for (double n : {0.0, 0.33, 0.5, 0.66, 0.9}) {
      const auto d = decode_bow({a, n}, s);
      CHECK(d.adjective == argmin(s.adjectives, std::clamp(a, 0.0, 1.0)));
      CHECK(d.noun == argmin(s.nouns, n));
    }
  }
  const auto d = decode_bow({0.66, 0.5}, s);
  CHECK(d.adjective == argmin(s.adjectives, 0.66));
  CHECK(d.noun == argmin(s.nouns, 0.5));
}

TEST_CASE("decode_bow recovers a word from its own similarity") {
  const auto s = build_word_set(fixture(), "fast", "wing", 1000, 0);
  for (const auto& w : s.nouns) {
    const auto d = decode_bow({1.0, w.similarity}, s);
    CHECK(std::abs(d.noun_similarity - w.similarity) <= kSimilarityTieTolerance);
  }
}

TEST_CASE("nearest_word ties go to the lexicographically smallest word") {
  const std::vector<WordEntry> words{{"zebra", 0.5}, {"apple", 0.5}, {"mango", 0.7}};
  CHECK(nearest_word(words, 0.5).word == "apple");
  CHECK(nearest_word(words, 0.6).word == "apple");
  CHECK(nearest_word(words, 0.61).word == "mango");
}

TEST_CASE("sample_words includes the reference") {
  const auto w = sample_words(fixture(), PartOfSpeech::noun, "car", 10, 4);
  CHECK(w.size() == 10);
  const auto it = std::find_if(w.begin(), w.end(), [](const WordEntry& e) { return e.word == "car"; });
  REQUIRE(it != w.end());
  CHECK(it->similarity == 1.0);
}

TEST_CASE("full WordNet taxonomy, when available") {
  // Set PROMPTEVO_WORDNET_TAXONOMY to the output of tools/wordnet_to_taxonomy.py.
  const char* path = std::getenv("PROMPTEVO_WORDNET_TAXONOMY");
  if (!path || !*path) {
    MESSAGE("PROMPTEVO_WORDNET_TAXONOMY not set, skipping");
    return;
  }
  const auto t = Taxonomy::load(path);
  const double snake = wup_similarity(t, "snake", "car", SenseSelection::first_sense);
  const double frog = wup_similarity(t, "frog", "car", SenseSelection::first_sense);
  CHECK(std::abs(snake - 0.35) <= 0.05);
  CHECK(std::abs(frog - 0.36) <= 0.05);
  CHECK(wup_similarity(t, "car", "car") == 1.0);
}
