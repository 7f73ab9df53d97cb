#include "promptevo/tokenizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "promptevo/error.hpp"

namespace promptevo::tokenizer {
namespace {

using nlohmann::json;

std::string base64_decode(std::string_view in) {
  static const auto table = [] {
    std::array<int, 256> t{};
    t.fill(-1);
    const std::string_view alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    for (std::size_t i = 0; i < alphabet.size(); ++i) t[static_cast<unsigned char>(alphabet[i])] = static_cast<int>(i);
    return t;
  }();
  std::string out;
  unsigned buffer = 0;
  int bits = 0;
  for (char c : in) {
    if (c == '=') break;
    const int v = table[static_cast<unsigned char>(c)];
    if (v < 0) throw Error(ErrorCode::parse_error, "invalid base64 character in vocabulary");
    buffer = (buffer << 6) | static_cast<unsigned>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<char>((buffer >> bits) & 0xFFu));
    }
  }
  return out;
}

// Length of the well-formed UTF-8 sequence at s[i], or the length of the
// maximal invalid subpart negated.
int utf8_sequence(std::string_view s, std::size_t i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) return 1;
  int need = 0;
  unsigned char lo = 0x80, hi = 0xBF;
  if (b0 >= 0xC2 && b0 <= 0xDF) {
    need = 1;
  } else if (b0 >= 0xE0 && b0 <= 0xEF) {
    need = 2;
    if (b0 == 0xE0) lo = 0xA0;
    if (b0 == 0xED) hi = 0x9F;
  } else if (b0 >= 0xF0 && b0 <= 0xF4) {
    need = 3;
    if (b0 == 0xF0) lo = 0x90;
    if (b0 == 0xF4) hi = 0x8F;
  } else {
    return -1;
  }
  for (int k = 1; k <= need; ++k) {
    if (i + static_cast<std::size_t>(k) >= s.size()) return -k;
    const auto b = static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]);
    const unsigned char l = k == 1 ? lo : 0x80;
    const unsigned char h = k == 1 ? hi : 0xBF;
    if (b < l || b > h) return -k;
  }
  return need + 1;
}

}  // namespace

BpeVocab BpeVocab::from_json_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("vocabulary is not valid JSON: ") + e.what());
  }
  BpeVocab v;
  std::unordered_map<std::string, TokenId> by_bytes;
  try {
    for (const auto& tok : doc.at("tokens")) {
      auto bytes = base64_decode(tok.get<std::string>());
      if (bytes.empty()) throw Error(ErrorCode::parse_error, "vocabulary contains an empty token");
      const auto id = static_cast<TokenId>(v.id_to_bytes_.size());
      if (!by_bytes.emplace(bytes, id).second) {
        throw Error(ErrorCode::parse_error, "vocabulary contains a duplicate token");
      }
      v.id_to_bytes_.push_back(std::move(bytes));
    }
    if (doc.contains("vocab_size") && doc["vocab_size"].get<std::size_t>() != v.id_to_bytes_.size()) {
      throw Error(ErrorCode::parse_error, "vocab_size does not match the token table");
    }
    for (int b = 0; b < 256; ++b) {
      const auto it = by_bytes.find(std::string(1, static_cast<char>(b)));
      if (it == by_bytes.end()) {
        throw Error(ErrorCode::parse_error, "vocabulary lacks single-byte token " + std::to_string(b));
      }
      v.byte_ids_[static_cast<std::size_t>(b)] = it->second;
    }
    std::size_t rank = 0;
    for (const auto& pair : doc.at("merges")) {
      const auto left = base64_decode(pair.at(0).get<std::string>());
      const auto right = base64_decode(pair.at(1).get<std::string>());
      const auto l = by_bytes.find(left);
      const auto r = by_bytes.find(right);
      const auto m = by_bytes.find(left + right);
      if (l == by_bytes.end() || r == by_bytes.end() || m == by_bytes.end()) {
        throw Error(ErrorCode::parse_error, "merge " + std::to_string(rank) + " references unknown tokens");
      }
      v.merges_.emplace(std::make_pair(l->second, r->second), Merge{rank++, m->second});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("malformed vocabulary: ") + e.what());
  }
  return v;
}

BpeVocab BpeVocab::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open vocabulary " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

const BpeVocab::Merge* BpeVocab::find_merge(TokenId left, TokenId right) const {
  const auto it = merges_.find({left, right});
  return it == merges_.end() ? nullptr : &it->second;
}

std::vector<TokenId> round_and_clamp(std::span<const double> values, TokenId vocab_limit) {
  if (vocab_limit <= 0) throw Error(ErrorCode::invalid_argument, "vocab_limit must be positive");
  std::vector<TokenId> out;
  out.reserve(values.size());
  const double upper = static_cast<double>(vocab_limit - 1);
  for (double v : values) {
    if (!(v >= 0.0)) {
      out.push_back(0);
      continue;
    }
    const double r = std::round(v);
    out.push_back(r >= upper ? vocab_limit - 1 : static_cast<TokenId>(r));
  }
  return out;
}

std::string sanitize_utf8(std::string_view bytes) {
  static constexpr std::string_view kReplacement = "\xEF\xBF\xBD";
  std::string out;
  out.reserve(bytes.size());
  std::size_t i = 0;
  while (i < bytes.size()) {
    const int len = utf8_sequence(bytes, i);
    if (len > 0) {
      out.append(bytes.substr(i, static_cast<std::size_t>(len)));
      i += static_cast<std::size_t>(len);
    } else {
      out.append(kReplacement);
      i += static_cast<std::size_t>(-len);
    }
  }
  return out;
}

std::string trim_ascii_whitespace(std::string_view s) {
  constexpr std::string_view ws = " \t\n\r\f\v";
  const auto first = s.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(ws);
  return std::string(s.substr(first, last - first + 1));
}

std::string decode_tokens(std::span<const TokenId> ids, const BpeVocab& vocab) {
  std::string raw;
  for (TokenId id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab.size()) {
      throw Error(ErrorCode::invalid_argument, "token id " + std::to_string(id) + " outside vocabulary");
    }
    raw += vocab.bytes(id);
  }
  return trim_ascii_whitespace(sanitize_utf8(raw));
}

std::vector<TokenId> encode_text(std::string_view text, const BpeVocab& vocab) {
  std::vector<TokenId> ids;
  ids.reserve(text.size());
  for (char c : text) ids.push_back(vocab.byte_token(static_cast<unsigned char>(c)));
  while (ids.size() > 1) {
    std::size_t best_rank = std::numeric_limits<std::size_t>::max();
    const BpeVocab::Merge* best = nullptr;
    TokenId best_left = 0, best_right = 0;
    for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
      const auto* m = vocab.find_merge(ids[i], ids[i + 1]);
      if (m && m->rank < best_rank) {
        best_rank = m->rank;
        best = m;
        best_left = ids[i];
        best_right = ids[i + 1];
      }
    }
    if (!best) break;
    std::vector<TokenId> next;
    next.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (i + 1 < ids.size() && ids[i] == best_left && ids[i + 1] == best_right) {
        next.push_back(best->result);
        ++i;
      } else {
        next.push_back(ids[i]);
      }
    }
    ids = std::move(next);
  }
  return ids;
}

std::string decode_token_genome(const TokenGenome& genome, const BpeVocab& vocab, TokenId vocab_limit) {
  const auto limit = std::min<TokenId>(vocab_limit, static_cast<TokenId>(vocab.size()));
  const auto ids = round_and_clamp(genome.values, limit);
  return std::string(kTokenPromptPrefix) + decode_tokens(ids, vocab);
}

std::vector<double> initial_token_genome(std::string_view text, const BpeVocab& vocab, std::size_t length) {
  auto ids = encode_text(text, vocab);
  ids.resize(length, 0);
  return {ids.begin(), ids.end()};
}

}  // namespace promptevo::tokenizer
