// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "promptevo/cmaes.hpp"
#include "promptevo/config.hpp"
#include "promptevo/error.hpp"
#include "promptevo/geometry.hpp"
#include "promptevo/lexicon.hpp"
#include "promptevo/orchestrator.hpp"
#include "promptevo/tokenizer.hpp"

using namespace promptevo;
namespace fs = std::filesystem;

namespace {

const std::string kData = PROMPTEVO_DATA_DIR;

// Ratio of best cd_N to the generation-0 mean for the seed-7 reference run.
constexpr double kPinnedEndToEndRatio = 0.536210;

struct Outcome {
  bool pass = true;
  std::string detail;
};

void expect(Outcome& o, bool ok, const std::string& what) {
  if (!ok) {
    o.pass = false;
    o.detail += (o.detail.empty() ? "" : "; ") + what;
  }
}

std::string fmt(const char* f, double v) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int failures = 0;

void criterion(const char* name, double time_limit_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (time_limit_s > 0.0 && secs > time_limit_s) {
    o.pass = false;
    o.detail += fmt("; over the %.0f s limit", time_limit_s);
  }
  if (!o.pass) ++failures;
  std::printf("%s  %-28s %7.2fs  %s\n", o.pass ? "PASS" : "FAIL", name, secs, o.detail.c_str());
  std::fflush(stdout);
}

double dist(const geometry::Vec3& a, const geometry::Vec3& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

// Wu-Palmer on a tree from root paths; LCS depth is the shared prefix length.
double path_wup(const std::map<std::string, std::string>& parent,
                const std::map<std::string, std::vector<std::string>>& senses, const std::string& a,
                const std::string& b) {
  const auto root_path = [&](const std::string& id) {
    std::vector<std::string> p;
    for (std::string cur = id; !cur.empty(); cur = parent.at(cur)) p.push_back(cur);
    std::reverse(p.begin(), p.end());
    return p;
  };
  double best = 0.0;
  for (const auto& sa : senses.at(a)) {
    for (const auto& sb : senses.at(b)) {
      const auto pa = root_path(sa);
      const auto pb = root_path(sb);
      std::size_t k = 0;
      while (k < pa.size() && k < pb.size() && pa[k] == pb[k]) ++k;
      best = std::max(best, 2.0 * static_cast<double>(k) / static_cast<double>(pa.size() + pb.size()));
    }
  }
  return best;
}

Outcome wup_suite() {
  Outcome o;
  const auto t = lexicon::Taxonomy::load(kData + "/taxonomy_fixture.json");
  std::ifstream in(kData + "/taxonomy_fixture.json");
  const auto doc = nlohmann::json::parse(in);
  std::map<std::string, std::string> parent;
  std::map<std::string, std::vector<std::string>> senses;
  for (const auto& n : doc["nodes"]) parent[n["id"]] = n["parent"].is_null() ? "" : n["parent"].get<std::string>();
  for (const auto& l : doc["lemmas"]) senses[l["word"]] = l["senses"].get<std::vector<std::string>>();

  auto words = t.words(lexicon::PartOfSpeech::noun);
  for (const auto& w : t.words(lexicon::PartOfSpeech::adjective)) words.push_back(w);
  std::size_t pairs = 0;
  double worst = 0.0;
  for (const auto& a : words) {
    expect(o, lexicon::wup_similarity(t, a, a) == 1.0, "identity for " + a);
    for (const auto& b : words) {
      const double s = lexicon::wup_similarity(t, a, b);
      expect(o, s > 0.0 && s <= 1.0, "range " + a + "/" + b);
      expect(o, s == lexicon::wup_similarity(t, b, a), "symmetry " + a + "/" + b);
      worst = std::max(worst, std::abs(s - path_wup(parent, senses, a, b)));
      ++pairs;
    }
  }
  expect(o, worst <= 1e-12, "oracle mismatch");
  const double sib = lexicon::wup_similarity(t, "object", "process");
  expect(o, std::abs(sib - 2.0 / 3.0) <= 1e-12, "sibling case");
  o.detail = o.pass ? std::to_string(pairs) + " pairs, sibling " + fmt("%.15f", sib) : o.detail;
  return o;
}

Outcome chamfer_suite() {
  Outcome o;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto cloud = [&](std::size_t n) {
    geometry::PointCloud c;
    for (std::size_t i = 0; i < n; ++i) c.points.push_back({u(rng), u(rng), u(rng)});
    return c;
  };
  const auto brute = [](const geometry::PointCloud& a, const geometry::PointCloud& b) {
    const auto directed = [](const geometry::PointCloud& p, const geometry::PointCloud& q) {
      double sum = 0.0;
      for (const auto& x : p.points) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& y : q.points) best = std::min(best, dist(x, y) * dist(x, y));
        sum += best;
      }
      return sum / static_cast<double>(p.points.size());
    };
    return directed(a, b) + directed(b, a);
  };
  double worst_rel = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = cloud(200);
    const auto b = cloud(200);
    const double d = geometry::chamfer_distance(a, b);
    worst_rel = std::max(worst_rel, std::abs(d - brute(a, b)) / brute(a, b));
    expect(o, geometry::chamfer_distance(a, a) == 0.0, "self distance");
    expect(o, d == geometry::chamfer_distance(b, a), "symmetry");
    auto ta = a, tb = b;
    for (auto* c : {&ta, &tb}) {
      for (auto& p : c->points) p = {p[0] + 3.25, p[1] - 1.5, p[2] + 0.75};
    }
    expect(o, std::abs(geometry::chamfer_distance(ta, tb) - d) <= 1e-9 * d, "translation invariance");
  }
  expect(o, worst_rel <= 1e-9, "oracle mismatch");
  if (o.pass) o.detail = "20 pairs of 200 points, max rel. error " + fmt("%.2e", worst_rel);
  return o;
}

double sphere(const Eigen::VectorXd& x) { return x.squaredNorm(); }

double rosenbrock(const Eigen::VectorXd& x) {
  double s = 0.0;
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
    s += 100.0 * std::pow(x[i + 1] - x[i] * x[i], 2) + std::pow(1.0 - x[i], 2);
  }
  return s;
}

int evaluations_to(double (*f)(const Eigen::VectorXd&), const Eigen::VectorXd& start, double target, int budget) {
  cmaes::CmaConfig c;
  c.dimension = 5;
  c.sigma0 = 0.5;
  c.max_generations = 1000000;
  c.mode = cmaes::Selection::comma;
  c.seed = 0;
  auto s = cmaes::init(c, start);
  while (s.evaluations < budget) {
    std::vector<cmaes::EvaluatedCandidate> ev;
    for (auto& x : cmaes::ask(s)) ev.push_back({x, f(x), cmaes::Origin::offspring});
    cmaes::tell(s, ev);
    if (s.C.llt().info() != Eigen::Success) return -2;
    if (s.best->fitness < target) return s.evaluations;
  }
  return -1;
}

Outcome cma_convergence() {
  Outcome o;
  const int sph = evaluations_to(sphere, Eigen::VectorXd::Ones(5), 1e-8, 5000);
  const int ros = evaluations_to(rosenbrock, Eigen::VectorXd::Zero(5), 1e-6, 30000);
  expect(o, sph > 0, "sphere missed the 5000-evaluation budget");
  expect(o, ros > 0, "rosenbrock missed the 30000-evaluation budget");
  o.detail += (o.detail.empty() ? "" : "; ") + std::string("seed 0: sphere ") + std::to_string(sph) +
              " evals (budget 5000), rosenbrock " + std::to_string(ros) + " evals (budget 30000)";
  return o;
}

config::RunConfig reference_config(std::uint64_t seed) {
  config::RunConfig c;
  c.seed = seed;
  return c;
}

Outcome elitism() {
  Outcome o;
  auto c = reference_config(7);
  c.strategy = cmaes::Selection::plus;
  c.max_generations = 100;
  const auto log = orchestrator::run_optimization(c);
  expect(o, log.generations.size() == 100, "expected 100 generations");
  double prev = std::numeric_limits<double>::infinity();
  int increases = 0;
  for (const auto& g : log.generations) {
    if (g.population_best > prev) ++increases;
    prev = g.population_best;
  }
  expect(o, increases == 0, std::to_string(increases) + " increases of the best-so-far");
  if (o.pass) {
    o.detail = "best cd_N " + fmt("%.4f", log.generations.front().population_best) + " -> " +
               fmt("%.4f", log.generations.back().population_best) + " over 100 generations";
  }
  return o;
}

Outcome rank_invariance() {
  Outcome o;
  for (auto mode : {cmaes::Selection::comma, cmaes::Selection::plus}) {
    cmaes::CmaConfig c;
    c.dimension = 5;
    c.sigma0 = 0.5;
    c.max_generations = 1000;
    c.mode = mode;
    c.seed = 31;
    auto a = cmaes::init(c, Eigen::VectorXd::Zero(5));
    auto b = a;
    for (int g = 0; g < 60; ++g) {
      std::vector<cmaes::EvaluatedCandidate> ea, eb;
      for (auto& x : cmaes::ask(a)) ea.push_back({x, rosenbrock(x), cmaes::Origin::offspring});
      for (auto& x : cmaes::ask(b)) {
        const double f = rosenbrock(x);
        eb.push_back({x, std::exp(0.01 * f) + 5.0 * std::cbrt(f), cmaes::Origin::offspring});
      }
      if (mode == cmaes::Selection::plus) {
        for (auto& p : cmaes::surviving_parents(a)) ea.push_back(p);
        for (auto& p : cmaes::surviving_parents(b)) eb.push_back(p);
      }
      cmaes::tell(a, ea);
      cmaes::tell(b, eb);
      bool same = a.mean == b.mean && a.sigma == b.sigma && a.C == b.C;
      for (std::size_t i = 0; i < a.parents.size(); ++i) same = same && a.parents[i].genome == b.parents[i].genome;
      if (!same) {
        expect(o, false, std::string(cmaes::to_string(mode)) + " diverged at generation " + std::to_string(g));
        break;
      }
    }
  }
  if (o.pass) o.detail = "60 generations, comma and plus, mean/sigma/C/selection bit-identical";
  return o;
}

Outcome normalization() {
  Outcome o;
  const double cd = 0.2314, lo = 0.1802, hi = 0.2577;
  expect(o, geometry::normalize_cd(cd, lo, hi) == cd / (hi - lo), "span normalization");
  expect(o, geometry::normalize_cd(0.5, 0.25, 0.75) == 1.0, "exact case");
  try {
    geometry::normalize_cd(0.3, 0.2, 0.2);
    expect(o, false, "zero span accepted");
  } catch (const Error& e) {
    expect(o, e.code() == ErrorCode::degenerate_baseline, "wrong error code for zero span");
  }
  try {
    std::vector<geometry::EvalResult> same(3);
    for (auto& r : same) {
      r.cd = 0.3;
      r.frontal_area = 0.4;
    }
    evaluator::compute_baseline(same);
    expect(o, false, "degenerate baseline accepted");
  } catch (const Error& e) {
    expect(o, e.code() == ErrorCode::degenerate_baseline, "wrong error code for degenerate baseline");
  }
  if (o.pass) o.detail = "cd/(max-min) exact, DegenerateBaseline on zero span";
  return o;
}

Outcome baseline_correlation() {
  Outcome o;
  const auto c = reference_config(0);
  const auto set = orchestrator::compute_reference_set(c, "A car", 300, orchestrator::make_backends(c));
  const double r2 = set.stats.r_squared;
  expect(o, set.stats.count == 300, "expected 300 designs");
  expect(o, r2 > 0.75 && r2 < 0.95, "R^2 outside (0.75, 0.95)");
  o.detail += (o.detail.empty() ? "" : "; ") + fmt("R^2 %.4f", r2) + fmt(", cd in [%.4f, ", set.stats.cd_min) +
              fmt("%.4f]", set.stats.cd_max);
  return o;
}

Outcome end_to_end() {
  Outcome o;
  auto c = reference_config(7);
  c.representation = config::Representation::bow;
  c.strategy = cmaes::Selection::plus;
  c.lambda = 10;
  c.mu = 3;
  c.max_generations = 30;
  const auto log = orchestrator::run_optimization(c);
  const double g0 = log.generations.front().cdn_mean;
  const double best = log.best->fitness;
  const double ratio = best / g0;
  expect(o, ratio <= 0.6, "ratio above 0.6");
  expect(o, std::abs(ratio - kPinnedEndToEndRatio) <= 1e-6, fmt("ratio differs from pinned %.6f", kPinnedEndToEndRatio));
  o.detail += (o.detail.empty() ? "" : "; ") + fmt("gen-0 mean %.4f", g0) + fmt(", best %.4f", best) +
              fmt(", ratio %.6f", ratio) + " ('" + log.best->prompt + "')";
  return o;
}

Outcome token_totality() {
  Outcome o;
  const auto vocab = tokenizer::BpeVocab::load(kData + "/vocab_fixture.json");
  std::mt19937_64 rng(99);
  std::normal_distribution<double> wide(16384.0, 30000.0);
  for (int i = 0; i < 10000; ++i) {
    tokenizer::TokenGenome g{{wide(rng), wide(rng), wide(rng)}};
    const auto ids = tokenizer::round_and_clamp(g.values, tokenizer::kDefaultVocabLimit);
    for (auto id : ids) expect(o, id >= 0 && id < 32768, "id out of range");
    const auto p = tokenizer::decode_token_genome(g, vocab);
    if (p.rfind(tokenizer::kTokenPromptPrefix, 0) != 0) expect(o, false, "prefix missing");
    if (!o.pass) break;
  }
  if (o.pass) o.detail = "10000 genomes decoded, ids within [0, 32768)";
  return o;
}

Outcome alignment() {
  Outcome o;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> extent(0.1, 5.0);
  std::uniform_real_distribution<double> shift(-10.0, 10.0);
  std::array<int, 3> perm{0, 1, 2};
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::array<double, 3> e{extent(rng), extent(rng), extent(rng)};
    auto box = geometry::make_box({0, 0, 0}, {e[0], e[1], e[2]});
    // Random proper rotation from the cube group plus a translation.
    std::shuffle(perm.begin(), perm.end(), rng);
    std::array<double, 3> sign{1, 1, 1};
    for (auto& s : sign) s = (rng() & 1) ? 1.0 : -1.0;
    const int parity = (perm[0] > perm[1]) + (perm[0] > perm[2]) + (perm[1] > perm[2]);
    if ((parity % 2 == 1) != (sign[0] * sign[1] * sign[2] < 0)) sign[2] = -sign[2];
    const geometry::Vec3 t{shift(rng), shift(rng), shift(rng)};
    for (auto& v : box.vertices) {
      const auto old = v;
      for (int k = 0; k < 3; ++k) v[k] = sign[k] * old[perm[k]] + t[k];
    }
    const auto aligned = geometry::align_to_axes(box);
    const auto d = geometry::bounding_dims(aligned);
    auto sorted = e;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    expect(o, d.lx >= d.ly && d.ly >= d.lz, "extents not sorted");
    worst = std::max({worst, std::abs(d.lx - sorted[0]), std::abs(d.ly - sorted[1]), std::abs(d.lz - sorted[2])});
    for (std::size_t i = 0; i < box.vertices.size(); ++i) {
      for (std::size_t j = i + 1; j < box.vertices.size(); ++j) {
        worst = std::max(worst, std::abs(dist(box.vertices[i], box.vertices[j]) -
                                         dist(aligned.vertices[i], aligned.vertices[j])));
      }
    }
    if (!o.pass) break;
  }
  expect(o, worst <= 1e-9, "distance or extent error above 1e-9");
  o.detail += (o.detail.empty() ? "" : "; ") + std::string("200 boxes, max error ") + fmt("%.2e", worst);
  return o;
}

bool same_records(const orchestrator::RunLog& a, const orchestrator::RunLog& b) {
  if (a.records.size() != b.records.size()) return false;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const auto ja = orchestrator::to_json(a.records[i]).dump();
    const auto jb = orchestrator::to_json(b.records[i]).dump();
    if (ja != jb || a.records[i].fitness != b.records[i].fitness || a.records[i].genome != b.records[i].genome) {
      return false;
    }
  }
  return true;
}

Outcome determinism() {
  Outcome o;
  const auto dir = fs::temp_directory_path() / ("promptevo_accept_" + std::to_string(std::random_device{}()));
  std::size_t records = 0;
  for (auto rep : {config::Representation::bow, config::Representation::token}) {
    auto c = reference_config(13);
    c.representation = rep;
    c.max_generations = 10;
    c.baseline.count = 50;
    c.generator.per_individual_seed = rep == config::Representation::token;
    orchestrator::RunOptions opts;
    opts.run_dir = dir / config::to_string(rep);
    const auto first = orchestrator::run_optimization(c, opts);
    const auto replay = orchestrator::run_optimization(config::load(opts.run_dir / "config.toml"));
    auto threaded = c;
    threaded.workers = 4;
    const auto parallel = orchestrator::run_optimization(threaded);
    expect(o, same_records(first, replay), std::string(config::to_string(rep)) + " replay differs");
    expect(o, same_records(first, parallel), std::string(config::to_string(rep)) + " parallel run differs");
    records += first.records.size();
  }
  fs::remove_all(dir);
  if (o.pass) o.detail = std::to_string(records) + " records replayed bit-for-bit (bow and token, 1 and 4 workers)";
  return o;
}

}  // namespace

int main() {
  criterion("wup-suite", 1.0, wup_suite);
  criterion("chamfer-suite", 5.0, chamfer_suite);
  criterion("cmaes-convergence", 30.0, cma_convergence);
  criterion("elitism", 60.0, elitism);
  criterion("rank-invariance", 0.0, rank_invariance);
  criterion("cd-normalization", 0.0, normalization);
  criterion("baseline-correlation", 60.0, baseline_correlation);
  criterion("end-to-end-bow", 120.0, end_to_end);
  criterion("token-totality", 0.0, token_totality);
  criterion("alignment", 0.0, alignment);
  criterion("determinism", 0.0, determinism);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
