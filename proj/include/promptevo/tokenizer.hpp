#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace promptevo::tokenizer {

using TokenId = std::int32_t;

inline constexpr TokenId kDefaultVocabLimit = 32768;
inline constexpr std::string_view kTokenPromptPrefix = "A car in the shape of ";

/// Byte-level BPE vocabulary: dense ids, each mapped to a byte string, plus a
/// ranked merge list used for encoding.
class BpeVocab {
 public:
  /// Document layout (bytes are base64):
  ///   {"tokens": ["IQ==", ...], "merges": [["d2k=", "bmc="], ...]}
  /// Token i is the i-th entry of "tokens". Every single byte must be present
  /// and every merge must produce a listed token.
  static BpeVocab from_json_text(std::string_view text);
  static BpeVocab load(const std::filesystem::path& path);

  std::size_t size() const noexcept { return id_to_bytes_.size(); }
  const std::string& bytes(TokenId id) const { return id_to_bytes_.at(static_cast<std::size_t>(id)); }
  TokenId byte_token(unsigned char b) const noexcept { return byte_ids_[b]; }

  struct Merge {
    std::size_t rank;
    TokenId result;
  };
  /// Merge rule for an adjacent pair, nullptr if the pair never merges.
  const Merge* find_merge(TokenId left, TokenId right) const;
  std::size_t merge_count() const noexcept { return merges_.size(); }

 private:
  std::vector<std::string> id_to_bytes_;
  std::array<TokenId, 256> byte_ids_{};
  std::map<std::pair<TokenId, TokenId>, Merge> merges_;
};

/// Rounds half away from zero, then clamps into [0, vocab_limit - 1]. NaN maps
/// to 0 and infinities to the nearest bound.
std::vector<TokenId> round_and_clamp(std::span<const double> values, TokenId vocab_limit = kDefaultVocabLimit);

/// Concatenated token bytes decoded as UTF-8 (invalid sequences become
/// U+FFFD) with surrounding ASCII whitespace trimmed. Never throws for ids in
/// range.
std::string decode_tokens(std::span<const TokenId> ids, const BpeVocab& vocab);

/// Greedy BPE over the UTF-8 bytes of text: repeatedly merge the adjacent
/// pair with the lowest merge rank.
std::vector<TokenId> encode_text(std::string_view text, const BpeVocab& vocab);

/// Replaces malformed UTF-8 with U+FFFD (one per maximal invalid subpart).
std::string sanitize_utf8(std::string_view bytes);
std::string trim_ascii_whitespace(std::string_view s);

struct TokenGenome {
  std::vector<double> values;
};

/// "A car in the shape of {decoded}". The effective id range is
/// [0, min(vocab_limit, vocab.size())).
std::string decode_token_genome(const TokenGenome& genome, const BpeVocab& vocab,
                                TokenId vocab_limit = kDefaultVocabLimit);

/// Genome seeding: encode_text(text) padded with token 0 or truncated to length.
std::vector<double> initial_token_genome(std::string_view text, const BpeVocab& vocab, std::size_t length);

}  // namespace promptevo::tokenizer
