#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <random>

#include "promptevo/error.hpp"
#include "promptevo/genbridge.hpp"

namespace promptevo::genbridge {
namespace {

// Base "A car" body before keywords and residual.
constexpr double kBaseWidth = 0.69;
constexpr double kBaseHeight = 0.62;
constexpr double kBaseCabinFraction = 0.4;
constexpr double kBaseNoseTaper = 0.6;
constexpr double kResidual = 0.15;
constexpr double kSampleSpread = 0.15;

// Aerodynamic words shrink the cross-section, bluff words grow it. Nothing
// here follows from Wu-Palmer distances: semantically close words can sit at
// opposite ends of the table.
constexpr std::array<KeywordEffect, 61> kKeywords{{
    {"aerodynamic", 0.80, 0.80, -0.10},
    {"arrow", 0.30, 0.30, -0.30},
    {"ball", 1.30, 1.40, 0.20},
    {"barn", 1.40, 1.60, 0.30},
    {"big", 1.25, 1.25, 0.00},
    {"blade", 0.90, 0.30, -0.20},
    {"box", 1.35, 1.35, 0.35},
    {"boxy", 1.30, 1.30, 0.35},
    {"brick", 1.30, 1.30, 0.35},
    {"broad", 1.30, 1.00, 0.10},
    {"bubble", 1.30, 1.40, 0.20},
    {"bulky", 1.30, 1.30, 0.20},
    {"bullet", 0.40, 0.40, -0.30},
    {"bus", 1.30, 1.60, 0.30},
    {"car", 1.00, 1.00, 0.00},
    {"cloud", 1.45, 1.50, 0.30},
    {"compact", 0.90, 0.90, 0.00},
    {"crate", 1.30, 1.35, 0.35},
    {"cube", 1.40, 1.50, 0.40},
    {"dart", 0.30, 0.30, -0.30},
    {"eel", 0.25, 0.30, -0.20},
    {"elephant", 1.40, 1.50, 0.20},
    {"fast", 0.95, 0.92, -0.10},
    {"fin", 0.50, 0.90, -0.10},
    {"flat", 1.05, 0.55, -0.10},
    {"frog", 1.10, 0.95, 0.05},
    {"heavy", 1.20, 1.20, 0.10},
    {"house", 1.40, 1.60, 0.35},
    {"huge", 1.40, 1.40, 0.10},
    {"low", 1.00, 0.70, -0.05},
    {"narrow", 0.55, 0.90, -0.05},
    {"needle", 0.15, 0.15, -0.40},
    {"penguin", 0.90, 1.30, 0.10},
    {"pencil", 0.20, 0.20, -0.30},
    {"pipe", 0.30, 0.30, 0.00},
    {"riffle", 0.25, 0.25, -0.30},
    {"rifle", 0.20, 0.20, -0.30},
    {"rocket", 0.40, 0.40, -0.30},
    {"rod", 0.20, 0.20, 0.00},
    {"round", 1.15, 1.20, 0.10},
    {"sleek", 0.85, 0.80, -0.10},
    {"slender", 0.50, 0.70, -0.10},
    {"small", 0.85, 0.85, 0.00},
    {"smoke", 1.40, 1.40, 0.25},
    {"snake", 0.25, 0.25, -0.20},
    {"spear", 0.20, 0.20, -0.40},
    {"sport", 0.95, 0.75, -0.10},
    {"streamline", 0.80, 0.80, -0.15},
    {"tall", 1.00, 1.45, 0.05},
    {"thin", 0.60, 0.70, -0.05},
    {"tiny", 0.70, 0.70, 0.00},
    {"torpedo", 0.40, 0.40, -0.30},
    {"tower", 1.00, 1.70, 0.20},
    {"truck", 1.25, 1.40, 0.30},
    {"tube", 0.30, 0.30, 0.00},
    {"van", 1.20, 1.45, 0.30},
    {"whale", 1.35, 1.30, 0.10},
    {"wide", 1.35, 1.00, 0.05},
    {"wing", 1.00, 0.90, -0.15},
    {"sphere", 1.30, 1.45, 0.30},
    {"wall", 1.40, 1.50, 0.40},
}};

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Uniform in [-1, 1) from the top 53 bits.
double signed_unit(std::uint64_t& state) {
  return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-52 - 1.0;
}

std::vector<std::string> words_of(std::string_view canonical) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : canonical) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(c);
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

bool keyword_hits(const KeywordEffect& k, const std::string& word) {
  return k.keyword.size() >= 4 ? word.find(k.keyword) != std::string::npos : word == k.keyword;
}

ShapeParams clamp_params(ShapeParams p) {
  p.length = 1.0;
  p.width = std::clamp(p.width, kMinExtent, kMaxExtent);
  p.height = std::clamp(p.height, kMinExtent, kMaxExtent);
  p.cabin_fraction = std::clamp(p.cabin_fraction, 0.1, 0.6);
  p.nose_taper = std::clamp(p.nose_taper, 0.2, 1.0);
  return p;
}

}  // namespace

std::span<const KeywordEffect> keyword_table() { return kKeywords; }

std::string canonical_prompt(std::string_view prompt) {
  std::string out;
  bool pending_space = false;
  for (char c : prompt) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::vector<std::string_view> matched_keywords(std::string_view prompt) {
  const auto words = words_of(canonical_prompt(prompt));
  std::vector<std::string_view> out;
  for (const auto& k : kKeywords) {
    if (std::any_of(words.begin(), words.end(), [&](const std::string& w) { return keyword_hits(k, w); })) {
      out.push_back(k.keyword);
    }
  }
  return out;
}

ShapeParams synthetic_shape_params(std::string_view prompt) {
  const std::string canonical = canonical_prompt(prompt);
  ShapeParams p{1.0, kBaseWidth, kBaseHeight, kBaseCabinFraction, kBaseNoseTaper};
  for (const auto keyword : matched_keywords(canonical)) {
    const auto it = std::find_if(kKeywords.begin(), kKeywords.end(),
                                 [&](const KeywordEffect& k) { return k.keyword == keyword; });
    p.width *= it->width_factor;
    p.height *= it->height_factor;
    p.nose_taper += it->taper_delta;
  }
  // The residual is keyed on the words that hit no keyword, so adding a
  // keyword to a prompt changes the shape by exactly that keyword's factors.
  std::string rest;
  for (const auto& w : words_of(canonical)) {
    if (std::none_of(kKeywords.begin(), kKeywords.end(), [&](const KeywordEffect& k) { return keyword_hits(k, w); })) {
      rest += w;
      rest += ' ';
    }
  }
  std::uint64_t state = fnv1a(rest);
  p.width *= 1.0 + kResidual * signed_unit(state);
  p.height *= 1.0 + kResidual * signed_unit(state);
  p.cabin_fraction += 0.1 * signed_unit(state);
  p.nose_taper += 0.1 * signed_unit(state);
  return clamp_params(p);
}

ShapeParams vary_sample(const ShapeParams& params, std::uint64_t seed, int index) {
  std::uint64_t state = seed ^ (0xD1B54A32D192ED03ULL * (static_cast<std::uint64_t>(index) + 1));
  ShapeParams p = params;
  p.width *= 1.0 + kSampleSpread * signed_unit(state);
  p.height *= 1.0 + kSampleSpread * signed_unit(state);
  p.cabin_fraction += 0.05 * signed_unit(state);
  p.nose_taper += 0.05 * signed_unit(state);
  return clamp_params(p);
}

geometry::TriMesh build_body_mesh(const ShapeParams& p) {
  using geometry::Vec3;
  geometry::TriMesh m;
  const double cabin_h = p.height * p.cabin_fraction;
  const double body_h = p.height - cabin_h;
  const double hw = 0.5 * p.width;

  // Hull: rectangular sections along x, bottom on z = 0.
  const std::array<double, 4> xs{0.0, 0.12, 0.88, 1.0};
  const std::array<double, 4> scale{p.nose_taper, 1.0, 1.0, 0.85};
  for (std::size_t s = 0; s < xs.size(); ++s) {
    const double w = hw * scale[s];
    const double h = body_h * scale[s];
    m.vertices.push_back(Vec3{xs[s], -w, 0.0});
    m.vertices.push_back(Vec3{xs[s], w, 0.0});
    m.vertices.push_back(Vec3{xs[s], w, h});
    m.vertices.push_back(Vec3{xs[s], -w, h});
  }
  for (std::uint32_t s = 0; s + 1 < xs.size(); ++s) {
    for (std::uint32_t k = 0; k < 4; ++k) {
      const std::uint32_t a = 4 * s + k;
      const std::uint32_t b = 4 * s + (k + 1) % 4;
      m.faces.push_back({a, a + 4, b + 4});
      m.faces.push_back({a, b + 4, b});
    }
  }
  m.faces.push_back({0, 2, 1});
  m.faces.push_back({0, 3, 2});
  m.faces.push_back({12, 13, 14});
  m.faces.push_back({12, 14, 15});

  // Cabin wedge: wider, longer base on the hull top, narrower roof.
  const auto base = static_cast<std::uint32_t>(m.vertices.size());
  const double bw = 0.8 * hw;
  const double tw = 0.65 * hw;
  const double z0 = body_h;
  const double z1 = p.height;
  for (const auto& v : std::array<Vec3, 8>{Vec3{0.30, -bw, z0}, Vec3{0.78, -bw, z0}, Vec3{0.78, bw, z0},
                                           Vec3{0.30, bw, z0}, Vec3{0.40, -tw, z1}, Vec3{0.66, -tw, z1},
                                           Vec3{0.66, tw, z1}, Vec3{0.40, tw, z1}}) {
    m.vertices.push_back(v);
  }
  const std::array<geometry::Face, 12> cabin{{{0, 2, 1}, {0, 3, 2}, {4, 5, 6}, {4, 6, 7},
                                              {0, 1, 5}, {0, 5, 4}, {1, 2, 6}, {1, 6, 5},
                                              {2, 3, 7}, {2, 7, 6}, {3, 0, 4}, {3, 4, 7}}};
  for (auto f : cabin) m.faces.push_back({f[0] + base, f[1] + base, f[2] + base});
  return m;
}

GenerationResult SyntheticGenerator::generate(const GenerationRequest& request) {
  const auto start = std::chrono::steady_clock::now();
  if (request.prompt.empty()) throw Error(ErrorCode::generation_failed, "empty prompt");
  if (request.batch_size < 1) throw Error(ErrorCode::generation_failed, "batch_size must be at least 1");
  const ShapeParams params = synthetic_shape_params(request.prompt);
  GenerationResult result;
  result.generator_id = id();
  for (int i = 0; i < request.batch_size; ++i) {
    result.meshes.push_back(geometry::validate_mesh(build_body_mesh(vary_sample(params, request.seed, i))));
  }
  result.latency = std::chrono::steady_clock::now() - start;
  return result;
}

}  // namespace promptevo::genbridge
