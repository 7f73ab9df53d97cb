#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "promptevo/error.hpp"
#include "promptevo/evaluator.hpp"

using namespace promptevo;
using namespace promptevo::evaluator;
namespace fs = std::filesystem;

namespace {

geometry::EvalResult result(double cd, double area) {
  geometry::EvalResult r;
  r.cd = cd;
  r.frontal_area = area;
  return r;
}

ErrorCode baseline_error(const std::vector<geometry::EvalResult>& rs) {
  try {
    compute_baseline(rs);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::invalid_argument;
}

// R^2 as 1 - SS_res / SS_tot of the least-squares line from the normal
// equations.
double ols_r_squared(const std::vector<geometry::EvalResult>& rs) {
  const double n = static_cast<double>(rs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& r : rs) {
    sx += r.frontal_area;
    sy += r.cd;
    sxx += r.frontal_area * r.frontal_area;
    sxy += r.frontal_area * r.cd;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / n;
  const double ybar = sy / n;
  double ss_res = 0, ss_tot = 0;
  for (const auto& r : rs) {
    ss_res += std::pow(r.cd - (intercept + slope * r.frontal_area), 2);
    ss_tot += std::pow(r.cd - ybar, 2);
  }
  return 1.0 - ss_res / ss_tot;
}

}  // namespace

TEST_CASE("proxy without noise is the linear law") {
  ProxyCoefficients c;
  c.noise_sigma = 0.0;
  ProxyEvaluator e(c);
  const auto cube = geometry::make_box({-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5});
  const auto r = e.evaluate(cube);
  CHECK(r.frontal_area == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.cd == doctest::Approx(0.10 + 0.30 * 1.0).epsilon(1e-12));
  CHECK(r.cd_normalized == 0.0);
  const auto box = geometry::make_box({0, 0, 0}, {3, 2, 0.5});
  CHECK(e.evaluate(box).cd == doctest::Approx(0.10 + 0.30 * 1.0).epsilon(1e-12));
  CHECK(e.id() == "proxy-v1");
}

TEST_CASE("proxy noise is keyed by seed and mesh content") {
  ProxyCoefficients c;
  c.noise_sigma = 0.01;
  c.seed = 4;
  ProxyEvaluator a(c);
  ProxyEvaluator b(c);
  c.seed = 5;
  ProxyEvaluator other(c);
  const auto cube = geometry::make_box({0, 0, 0}, {1, 1, 1});
  const auto shifted = geometry::make_box({0, 0, 0.25}, {1, 1, 1.25});
  CHECK(a.evaluate(cube).cd == b.evaluate(cube).cd);
  CHECK(a.evaluate(cube).cd != other.evaluate(cube).cd);
  CHECK(a.evaluate(cube).cd != a.evaluate(shifted).cd);
  CHECK(a.evaluate(cube).frontal_area == a.evaluate(shifted).frontal_area);
}

TEST_CASE("proxy noise has the configured spread") {
  ProxyCoefficients c;
  c.noise_sigma = 0.02;
  ProxyEvaluator e(c);
  std::vector<double> residuals;
  for (int i = 0; i < 2000; ++i) {
    const double z = 0.001 * i;
    const auto r = e.evaluate(geometry::make_box({0, 0, z}, {1, 1, 1 + z}));
    residuals.push_back(r.cd - (c.c0 + c.c1 * r.frontal_area));
  }
  double mean = 0, var = 0;
  for (double v : residuals) mean += v;
  mean /= static_cast<double>(residuals.size());
  for (double v : residuals) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(residuals.size() - 1));
  CHECK(std::abs(mean) < 4.0 * 0.02 / std::sqrt(2000.0));
  CHECK(sd == doctest::Approx(0.02).epsilon(0.1));
}

TEST_CASE("proxy rejects unscorable meshes") {
  ProxyEvaluator e;
  try {
    e.evaluate(geometry::TriMesh{});
    FAIL("expected failure");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::evaluation_failed);
  }
}

TEST_CASE("baseline statistics") {
  const std::vector<geometry::EvalResult> rs{result(0.2, 0.3), result(0.3, 0.6), result(0.25, 0.4),
                                             result(0.22, 0.35)};
  const auto s = compute_baseline(rs);
  CHECK(s.count == 4);
  CHECK(s.cd_min == 0.2);
  CHECK(s.cd_max == 0.3);
  CHECK(s.span() == doctest::Approx(0.1));
  CHECK(s.cd_mean == doctest::Approx(0.2425));
  const double sd = std::sqrt(((0.2 - 0.2425) * (0.2 - 0.2425) + (0.3 - 0.2425) * (0.3 - 0.2425) +
                               (0.25 - 0.2425) * (0.25 - 0.2425) + (0.22 - 0.2425) * (0.22 - 0.2425)) /
                              3.0);
  CHECK(s.ci95_halfwidth == doctest::Approx(1.96 * sd / 2.0));
  CHECK(std::abs(s.r_squared - ols_r_squared(rs)) <= 1e-12);
  CHECK(penalty_cd(s) == doctest::Approx(1.2 * 0.3));
}

TEST_CASE("baseline R^2 matches least squares on random data") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> area(0.2, 0.6);
  std::normal_distribution<double> noise(0.0, 0.01);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<geometry::EvalResult> rs;
    for (int i = 0; i < 300; ++i) {
      const double a = area(rng);
      rs.push_back(result(0.1 + 0.3 * a + noise(rng), a));
    }
    CHECK(std::abs(compute_baseline(rs).r_squared - ols_r_squared(rs)) <= 1e-12);
  }
  const std::vector<geometry::EvalResult> perfect{result(0.1, 0.0), result(0.4, 1.0), result(0.25, 0.5)};
  CHECK(compute_baseline(perfect).r_squared == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("degenerate baselines") {
  CHECK(baseline_error({result(0.2, 0.3)}) == ErrorCode::degenerate_baseline);
  CHECK(baseline_error({}) == ErrorCode::degenerate_baseline);
  CHECK(baseline_error({result(0.2, 0.3), result(0.2, 0.4)}) == ErrorCode::degenerate_baseline);
  CHECK(baseline_error({result(0.2, 0.3), result(0.25, 0.3)}) == ErrorCode::degenerate_baseline);
}

TEST_CASE("mean_ci95") {
  const std::vector<double> v{1, 2, 3, 4};
  const auto m = mean_ci95(v);
  CHECK(m.mean == 2.5);
  CHECK(m.ci95_halfwidth == doctest::Approx(1.96 * std::sqrt(5.0 / 3.0) / 2.0));
  const std::vector<double> one{7};
  CHECK(mean_ci95(one).mean == 7.0);
  CHECK(mean_ci95(one).ci95_halfwidth == 0.0);
}

TEST_CASE("baseline json round trip") {
  const auto s = compute_baseline(std::vector<geometry::EvalResult>{result(0.2, 0.3), result(0.3, 0.6),
                                                                    result(0.27, 0.5)});
  const auto back = baseline_from_json(nlohmann::json::parse(to_json(s).dump()));
  CHECK(back.count == s.count);
  CHECK(back.cd_min == s.cd_min);
  CHECK(back.cd_max == s.cd_max);
  CHECK(back.cd_mean == s.cd_mean);
  CHECK(back.ci95_halfwidth == s.ci95_halfwidth);
  CHECK(back.r_squared == s.r_squared);
  const auto path = fs::temp_directory_path() / "promptevo_baseline_test.json";
  save_baseline(path, s);
  CHECK(load_baseline(path).cd_max == s.cd_max);
  fs::remove(path);
  CHECK_THROWS_AS(load_baseline("/nonexistent/baseline.json"), Error);
  CHECK_THROWS_AS(baseline_from_json(nlohmann::json{{"cd_min", 0.3}, {"cd_max", 0.2}, {"count", 3}}), Error);
}

TEST_CASE("external CFD evaluator") {
  const auto scratch = fs::temp_directory_path() / ("promptevo_cfd_" + std::to_string(std::random_device{}()));
  ExternalCfdOptions o;
  o.command = {FAKE_BRIDGE, "cfd"};
  o.scratch_dir = scratch;
  o.timeout = std::chrono::milliseconds(5000);
  ExternalCfdEvaluator e(o);
  const auto box = geometry::make_box({-1, -0.4, -0.3}, {1, 0.4, 0.3});
  const auto r = e.evaluate(box);
  CHECK(r.cd == doctest::Approx(0.1 + 0.3 * geometry::projected_frontal_area(box, 64)).epsilon(1e-9));
  CHECK(r.frontal_area == doctest::Approx(0.48).epsilon(1e-9));
  CHECK(fs::is_empty(scratch));

  for (const std::string mode : {"fail", "garbage", "hang", "crash"}) {
    CAPTURE(mode);
    ExternalCfdOptions bad = o;
    bad.command = {FAKE_BRIDGE, mode};
    bad.timeout = std::chrono::milliseconds(300);
    ExternalCfdEvaluator failing(bad);
    try {
      failing.evaluate(box);
      FAIL("expected failure");
    } catch (const Error& err) {
      CHECK(err.code() == ErrorCode::evaluation_failed);
    }
    CHECK(fs::is_empty(scratch));
  }
  fs::remove_all(scratch);
}
