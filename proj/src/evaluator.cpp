#include "promptevo/evaluator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "promptevo/error.hpp"

namespace promptevo::evaluator {

ProxyEvaluator::ProxyEvaluator(ProxyCoefficients coefficients) : coefficients_(coefficients) {
  if (!(coefficients_.c1 > 0.0)) throw Error(ErrorCode::bad_config, "proxy c1 must be positive");
  if (!(coefficients_.noise_sigma >= 0.0)) throw Error(ErrorCode::bad_config, "proxy noise_sigma must be >= 0");
  if (!std::isfinite(coefficients_.c0)) throw Error(ErrorCode::bad_config, "proxy c0 must be finite");
}

geometry::EvalResult ProxyEvaluator::evaluate(const geometry::TriMesh& mesh) {
  geometry::EvalResult r;
  try {
    r.frontal_area = geometry::projected_frontal_area(mesh, coefficients_.grid_resolution);
    r.dims = geometry::bounding_dims(mesh);
  } catch (const Error& e) {
    throw Error(ErrorCode::evaluation_failed, e.what());
  }
  r.cd = coefficients_.c0 + coefficients_.c1 * r.frontal_area;
  if (coefficients_.noise_sigma > 0.0) {
    std::seed_seq seq{static_cast<std::uint32_t>(coefficients_.seed), static_cast<std::uint32_t>(coefficients_.seed >> 32),
                      static_cast<std::uint32_t>(geometry::content_hash(mesh)),
                      static_cast<std::uint32_t>(geometry::content_hash(mesh) >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> noise(0.0, coefficients_.noise_sigma);
    r.cd += noise(rng);
  }
  return r;
}

ExternalCfdEvaluator::ExternalCfdEvaluator(ExternalCfdOptions options)
    : options_(std::move(options)), pool_(options_.command, options_.pool_size, options_.timeout) {
  if (options_.command.empty()) throw Error(ErrorCode::config_error, "external evaluator needs a command");
  if (options_.scratch_dir.empty()) options_.scratch_dir = std::filesystem::temp_directory_path();
  std::filesystem::create_directories(options_.scratch_dir);
}

std::string ExternalCfdEvaluator::id() const { return "external-cfd:" + options_.command.front(); }

geometry::EvalResult ExternalCfdEvaluator::evaluate(const geometry::TriMesh& mesh) {
  static std::atomic<std::uint64_t> counter{0};
  geometry::EvalResult r;
  try {
    r.frontal_area = geometry::projected_frontal_area(mesh);
    r.dims = geometry::bounding_dims(mesh);
  } catch (const Error& e) {
    throw Error(ErrorCode::evaluation_failed, e.what());
  }
  char name[64];
  std::snprintf(name, sizeof name, "cfd-%016llx-%llu.obj",
                static_cast<unsigned long long>(geometry::content_hash(mesh)),
                static_cast<unsigned long long>(counter++));
  const auto path = options_.scratch_dir / name;
  try {
    geometry::write_obj(path, mesh);
  } catch (const Error& e) {
    throw Error(ErrorCode::evaluation_failed, e.what());
  }
  nlohmann::json reply;
  try {
    reply = pool_.call({{"mesh_path", path.string()}, {"case", options_.case_name}}, ErrorCode::evaluation_failed);
  } catch (...) {
    std::filesystem::remove(path);
    throw;
  }
  std::filesystem::remove(path);
  if (reply.value("status", std::string{}) != "ok") {
    throw Error(ErrorCode::evaluation_failed, "CFD adapter error: " + reply.value("message", std::string{"no message"}));
  }
  const auto cd = reply.find("cd");
  if (cd == reply.end() || !cd->is_number() || !std::isfinite(cd->get<double>())) {
    throw Error(ErrorCode::evaluation_failed, "CFD adapter returned no finite cd");
  }
  r.cd = cd->get<double>();
  return r;
}

MeanCi mean_ci95(std::span<const double> values) {
  MeanCi out;
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / n;
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.ci95_halfwidth = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return out;
}

BaselineStats compute_baseline(std::span<const geometry::EvalResult> results) {
  if (results.size() < 2) throw Error(ErrorCode::degenerate_baseline, "baseline needs at least two results");
  BaselineStats s;
  s.count = results.size();
  std::vector<double> cd;
  cd.reserve(results.size());
  double area_mean = 0.0;
  for (const auto& r : results) {
    cd.push_back(r.cd);
    area_mean += r.frontal_area;
  }
  area_mean /= static_cast<double>(results.size());
  const auto [lo, hi] = std::minmax_element(cd.begin(), cd.end());
  s.cd_min = *lo;
  s.cd_max = *hi;
  if (!(s.cd_max > s.cd_min)) throw Error(ErrorCode::degenerate_baseline, "baseline cd span is zero");
  const MeanCi m = mean_ci95(cd);
  s.cd_mean = m.mean;
  s.ci95_halfwidth = m.ci95_halfwidth;

  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& r : results) {
    const double dx = r.frontal_area - area_mean;
    const double dy = r.cd - s.cd_mean;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::degenerate_baseline, "baseline frontal areas have zero variance");
  s.r_squared = std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
  return s;
}

double penalty_cd(const BaselineStats& stats) { return 1.2 * stats.cd_max; }

nlohmann::json to_json(const BaselineStats& s) {
  return {{"count", s.count},   {"cd_min", s.cd_min},
          {"cd_max", s.cd_max}, {"cd_mean", s.cd_mean},
          {"ci95_halfwidth", s.ci95_halfwidth}, {"r_squared", s.r_squared}};
}

BaselineStats baseline_from_json(const nlohmann::json& doc) {
  try {
    BaselineStats s;
    s.count = doc.at("count").get<std::size_t>();
    s.cd_min = doc.at("cd_min").get<double>();
    s.cd_max = doc.at("cd_max").get<double>();
    s.cd_mean = doc.at("cd_mean").get<double>();
    s.ci95_halfwidth = doc.at("ci95_halfwidth").get<double>();
    s.r_squared = doc.at("r_squared").get<double>();
    if (s.count < 2 || !(s.cd_max > s.cd_min)) {
      throw Error(ErrorCode::degenerate_baseline, "stored baseline has no usable span");
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("bad baseline document: ") + e.what());
  }
}

void save_baseline(const std::filesystem::path& path, const BaselineStats& stats) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
  out << to_json(stats).dump(2) << '\n';
}

BaselineStats load_baseline(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot read baseline " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, "bad baseline file " + path.string() + ": " + e.what());
  }
  return baseline_from_json(doc);
}

}  // namespace promptevo::evaluator
