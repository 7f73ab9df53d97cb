#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace promptevo::lexicon {

enum class PartOfSpeech { adjective, noun };

const char* to_string(PartOfSpeech pos) noexcept;
PartOfSpeech parse_part_of_speech(std::string_view text);

/// How word-level similarity is derived from sense-level similarity.
enum class SenseSelection {
  max_over_pairs,  ///< best-matching pair of senses
  first_sense,     ///< first listed sense of each word (WordNet sense order)
};

struct Sense {
  int node = 0;
  PartOfSpeech pos = PartOfSpeech::noun;
};

/// Rooted word hierarchy. Nodes may have several parents (a DAG), but every
/// node reaches the single root.
class Taxonomy {
 public:
  /// Parses and validates a taxonomy document:
  ///   {"nodes":  [{"id": str, "parent": str|null} | {"id": str, "parents": [str]}],
  ///    "lemmas": [{"word": str, "pos": "adjective"|"noun", "senses": [str]}]}
  /// Throws ParseError, CycleDetected or MissingRoot.
  static Taxonomy from_json_text(std::string_view text);
  static Taxonomy load(const std::filesystem::path& path);

  std::size_t node_count() const noexcept { return ids_.size(); }
  int root() const noexcept { return root_; }
  const std::string& node_id(int node) const { return ids_.at(static_cast<std::size_t>(node)); }
  const std::vector<int>& parents(int node) const { return parents_.at(static_cast<std::size_t>(node)); }
  /// Node count on the longest path from the root, root included (root = 1).
  int depth(int node) const { return depth_.at(static_cast<std::size_t>(node)); }

  bool contains(std::string_view word) const;
  /// Senses of a word, optionally restricted to one part of speech.
  std::vector<Sense> senses(std::string_view word, std::optional<PartOfSpeech> pos = std::nullopt) const;
  /// All single-word lemmas with the given part of speech, sorted.
  std::vector<std::string> words(PartOfSpeech pos) const;

 private:
  std::vector<std::string> ids_;
  std::vector<std::vector<int>> parents_;
  std::vector<int> depth_;
  std::unordered_map<std::string, std::vector<Sense>> lemmas_;
  int root_ = -1;
};

/// Wu-Palmer similarity of two nodes: 2 * depth(lcs) / (da + db), where the
/// lcs is the deepest common ancestor and da, db are depth(lcs) plus the
/// shortest upward distance from each node to it. On a tree da and db are the
/// plain node depths.
double wup_similarity(const Taxonomy& t, int node_a, int node_b);

/// Word-level Wu-Palmer similarity in (0, 1]. Throws UnknownWord.
double wup_similarity(const Taxonomy& t, std::string_view word_a, std::string_view word_b,
                      SenseSelection selection = SenseSelection::max_over_pairs,
                      std::optional<PartOfSpeech> pos = std::nullopt);

struct WordEntry {
  std::string word;
  double similarity = 0.0;  ///< to the reference word of the same part of speech
};

/// Candidate words for the two template slots, each with its cached
/// similarity to the slot's reference word.
struct WordSet {
  std::string reference_adjective;
  std::string reference_noun;
  std::vector<WordEntry> adjectives;
  std::vector<WordEntry> nouns;
};

/// Up to n words of one part of speech sampled uniformly without replacement,
/// always including the reference, each with its similarity to it. Sorted by
/// word. Throws UnknownWord for the reference.
std::vector<WordEntry> sample_words(const Taxonomy& t, PartOfSpeech pos, std::string_view reference,
                                    std::size_t n, std::uint64_t seed,
                                    SenseSelection selection = SenseSelection::max_over_pairs);

/// Samples up to n adjectives and n nouns uniformly without replacement
/// (deterministic per seed). The reference words are always members; the
/// whole lexicon is returned when it has at most n words. Lists come back
/// sorted by word.
WordSet build_word_set(const Taxonomy& t, std::string_view reference_adjective,
                       std::string_view reference_noun, std::size_t n, std::uint64_t seed,
                       SenseSelection selection = SenseSelection::max_over_pairs);

/// Bag-of-words genome: target similarities to the reference adjective and
/// noun. Values outside [0, 1] are clamped when decoding.
struct BowGenome {
  double adj_value = 1.0;
  double noun_value = 1.0;
};

struct BowDecoded {
  std::string adjective;
  std::string noun;
  double adjective_similarity = 0.0;
  double noun_similarity = 0.0;
  std::string prompt;
};

inline constexpr double kSimilarityTieTolerance = 1e-12;

/// Word whose cached similarity is nearest to target; ties go to the
/// lexicographically smallest word.
const WordEntry& nearest_word(const std::vector<WordEntry>& words, double target);

/// "A {adjective} car in the shape of {noun}".
BowDecoded decode_bow(const BowGenome& genome, const WordSet& words);

std::string bow_prompt(std::string_view adjective, std::string_view noun);

}  // namespace promptevo::lexicon
