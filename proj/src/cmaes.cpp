#include "promptevo/cmaes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "promptevo/error.hpp"

namespace promptevo::cmaes {
namespace {

using nlohmann::json;

void decompose(CmaState& s) {
  // Keep C exactly symmetric before decomposing.
  s.C = 0.5 * (s.C + s.C.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s.C);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::covariance_degenerate, "eigendecomposition of C failed");
  }
  const Eigen::VectorXd ev = solver.eigenvalues();
  if (!ev.allFinite() || ev.minCoeff() <= 0.0) {
    throw Error(ErrorCode::covariance_degenerate, "covariance matrix is not positive definite");
  }
  s.B = solver.eigenvectors();
  s.D = ev.cwiseSqrt();
}

double sort_key(double f) { return std::isnan(f) ? std::numeric_limits<double>::infinity() : f; }

json vec_to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json candidate_to_json(const EvaluatedCandidate& c) {
  return {{"genome", vec_to_json(c.genome)},
          {"fitness", c.fitness},
          {"origin", c.origin == Origin::offspring ? "offspring" : "surviving_parent"}};
}

EvaluatedCandidate candidate_from_json(const json& j) {
  return {vec_from_json(j.at("genome")), j.at("fitness").get<double>(),
          j.at("origin").get<std::string>() == "offspring" ? Origin::offspring : Origin::surviving_parent};
}

}  // namespace

const char* to_string(Selection s) noexcept { return s == Selection::comma ? "comma" : "plus"; }

Selection parse_selection(const std::string& text) {
  if (text == "comma") return Selection::comma;
  if (text == "plus") return Selection::plus;
  throw Error(ErrorCode::bad_config, "strategy must be 'comma' or 'plus', got '" + text + "'");
}

CmaState init(const CmaConfig& config, const Eigen::VectorXd& initial_mean) {
  if (config.dimension < 1) throw Error(ErrorCode::bad_config, "dimension must be at least 1");
  if (config.mu < 1 || config.mu > config.lambda) {
    throw Error(ErrorCode::bad_config, "need 1 <= mu <= lambda");
  }
  if (!(config.sigma0 > 0.0)) throw Error(ErrorCode::bad_config, "sigma0 must be positive");
  if (config.max_generations < 1) throw Error(ErrorCode::bad_config, "max_generations must be positive");
  if (initial_mean.size() != config.dimension || !initial_mean.allFinite()) {
    throw Error(ErrorCode::bad_config, "initial mean does not match the dimension");
  }

  CmaState s;
  s.config = config;
  const int n = config.dimension;
  const int mu = config.mu;
  const double nd = n;

  s.weights.resize(mu);
  for (int i = 0; i < mu; ++i) s.weights[i] = std::log(mu + 0.5) - std::log(i + 1.0);
  s.weights /= s.weights.sum();
  s.mu_eff = 1.0 / s.weights.squaredNorm();

  s.c_sigma = (s.mu_eff + 2.0) / (nd + s.mu_eff + 5.0);
  s.d_sigma = 1.0 + 2.0 * std::max(0.0, std::sqrt((s.mu_eff - 1.0) / (nd + 1.0)) - 1.0) + s.c_sigma;
  s.c_c = (4.0 + s.mu_eff / nd) / (nd + 4.0 + 2.0 * s.mu_eff / nd);
  s.c_1 = 2.0 / ((nd + 1.3) * (nd + 1.3) + s.mu_eff);
  s.c_mu = std::min(1.0 - s.c_1, 2.0 * (s.mu_eff - 2.0 + 1.0 / s.mu_eff) / ((nd + 2.0) * (nd + 2.0) + s.mu_eff));
  s.chi_n = std::sqrt(nd) * (1.0 - 1.0 / (4.0 * nd) + 1.0 / (21.0 * nd * nd));

  s.mean = initial_mean;
  s.sigma = config.sigma0;
  s.C = Eigen::MatrixXd::Identity(n, n);
  s.B = Eigen::MatrixXd::Identity(n, n);
  s.D = Eigen::VectorXd::Ones(n);
  s.p_sigma = Eigen::VectorXd::Zero(n);
  s.p_c = Eigen::VectorXd::Zero(n);
  s.rng.seed(config.seed);
  return s;
}

std::vector<Eigen::VectorXd> ask(CmaState& s) {
  if (!s.D.allFinite() || s.D.minCoeff() <= 0.0 || !std::isfinite(s.sigma)) {
    throw Error(ErrorCode::covariance_degenerate, "search distribution is degenerate");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  const int n = s.config.dimension;
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(s.config.lambda));
  for (int k = 0; k < s.config.lambda; ++k) {
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z[i] = normal(s.rng);
    out.push_back(s.mean + s.sigma * (s.B * s.D.cwiseProduct(z)));
  }
  return out;
}

std::vector<EvaluatedCandidate> surviving_parents(const CmaState& s) {
  std::vector<EvaluatedCandidate> out = s.parents;
  for (auto& p : out) p.origin = Origin::surviving_parent;
  return out;
}

void tell(CmaState& s, const std::vector<EvaluatedCandidate>& evaluated) {
  const int n = s.config.dimension;
  const auto offspring = std::count_if(evaluated.begin(), evaluated.end(),
                                       [](const auto& c) { return c.origin == Origin::offspring; });
  const auto parents = static_cast<std::ptrdiff_t>(evaluated.size()) - offspring;
  if (offspring != s.config.lambda) {
    throw Error(ErrorCode::wrong_population_size,
                "expected " + std::to_string(s.config.lambda) + " offspring, got " + std::to_string(offspring));
  }
  if (s.config.mode == Selection::comma && parents != 0) {
    throw Error(ErrorCode::wrong_population_size, "comma selection does not accept surviving parents");
  }
  if (parents > s.config.mu) {
    throw Error(ErrorCode::wrong_population_size, "more surviving parents than mu");
  }
  for (const auto& c : evaluated) {
    if (c.genome.size() != n) throw Error(ErrorCode::wrong_population_size, "candidate dimension mismatch");
  }

  std::vector<std::size_t> order(evaluated.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sort_key(evaluated[a].fitness) < sort_key(evaluated[b].fitness);
  });

  const int mu = s.config.mu;
  const Eigen::VectorXd old_mean = s.mean;
  Eigen::MatrixXd y(n, mu);
  for (int i = 0; i < mu; ++i) y.col(i) = (evaluated[order[static_cast<std::size_t>(i)]].genome - old_mean) / s.sigma;
  const Eigen::VectorXd y_w = y * s.weights;
  s.mean = old_mean + s.sigma * y_w;

  // C^{-1/2} y_w = B D^{-1} B^T y_w
  const Eigen::VectorXd c_inv_sqrt_y = s.B * (s.B.transpose() * y_w).cwiseQuotient(s.D);
  s.p_sigma = (1.0 - s.c_sigma) * s.p_sigma + std::sqrt(s.c_sigma * (2.0 - s.c_sigma) * s.mu_eff) * c_inv_sqrt_y;

  const double ps_norm = s.p_sigma.norm();
  const double decay = 1.0 - std::pow(1.0 - s.c_sigma, 2.0 * (s.generation + 1));
  const bool h_sigma = ps_norm / std::sqrt(decay) / s.chi_n < 1.4 + 2.0 / (n + 1.0);
  s.p_c = (1.0 - s.c_c) * s.p_c;
  if (h_sigma) s.p_c += std::sqrt(s.c_c * (2.0 - s.c_c) * s.mu_eff) * y_w;

  const double delta_h = h_sigma ? 0.0 : s.c_c * (2.0 - s.c_c);
  Eigen::MatrixXd rank_mu = y * s.weights.asDiagonal() * y.transpose();
  s.C = (1.0 - s.c_1 - s.c_mu) * s.C + s.c_1 * (s.p_c * s.p_c.transpose() + delta_h * s.C) + s.c_mu * rank_mu;

  s.sigma *= std::exp((s.c_sigma / s.d_sigma) * (ps_norm / s.chi_n - 1.0));

  s.parents.clear();
  for (int i = 0; i < mu; ++i) s.parents.push_back(evaluated[order[static_cast<std::size_t>(i)]]);
  const auto& top = evaluated[order.front()];
  if (!s.best || sort_key(top.fitness) < sort_key(s.best->fitness)) s.best = top;

  s.evaluations += static_cast<int>(offspring);
  ++s.generation;
  decompose(s);
}

Convergence has_converged(const CmaState& s) {
  if (s.generation >= s.config.max_generations) return {true, "max_generations"};
  const double spread = s.sigma * s.D.maxCoeff();
  if (spread < s.config.tolerance) return {true, "step_size"};
  return {false, ""};
}

json to_json(const CmaState& s) {
  json j;
  j["config"] = {{"dimension", s.config.dimension}, {"lambda", s.config.lambda},
                 {"mu", s.config.mu},               {"sigma0", s.config.sigma0},
                 {"max_generations", s.config.max_generations},
                 {"mode", to_string(s.config.mode)}, {"seed", s.config.seed},
                 {"tolerance", s.config.tolerance}};
  j["mean"] = vec_to_json(s.mean);
  j["sigma"] = s.sigma;
  std::vector<double> c(s.C.data(), s.C.data() + s.C.size());
  j["C"] = c;
  j["p_sigma"] = vec_to_json(s.p_sigma);
  j["p_c"] = vec_to_json(s.p_c);
  j["generation"] = s.generation;
  j["evaluations"] = s.evaluations;
  j["parents"] = json::array();
  for (const auto& p : s.parents) j["parents"].push_back(candidate_to_json(p));
  if (s.best) j["best"] = candidate_to_json(*s.best);
  std::ostringstream rng;
  rng << s.rng;
  j["rng"] = rng.str();
  return j;
}

CmaState state_from_json(const json& j) {
  try {
    const auto& c = j.at("config");
    CmaConfig cfg;
    cfg.dimension = c.at("dimension").get<int>();
    cfg.lambda = c.at("lambda").get<int>();
    cfg.mu = c.at("mu").get<int>();
    cfg.sigma0 = c.at("sigma0").get<double>();
    cfg.max_generations = c.at("max_generations").get<int>();
    cfg.mode = parse_selection(c.at("mode").get<std::string>());
    cfg.seed = c.at("seed").get<std::uint64_t>();
    cfg.tolerance = c.at("tolerance").get<double>();
    CmaState s = init(cfg, vec_from_json(j.at("mean")));
    s.sigma = j.at("sigma").get<double>();
    const auto cv = j.at("C").get<std::vector<double>>();
    if (cv.size() != static_cast<std::size_t>(cfg.dimension * cfg.dimension)) {
      throw Error(ErrorCode::parse_error, "covariance size mismatch in snapshot");
    }
    s.C = Eigen::Map<const Eigen::MatrixXd>(cv.data(), cfg.dimension, cfg.dimension);
    s.p_sigma = vec_from_json(j.at("p_sigma"));
    s.p_c = vec_from_json(j.at("p_c"));
    s.generation = j.at("generation").get<int>();
    s.evaluations = j.at("evaluations").get<int>();
    for (const auto& p : j.at("parents")) s.parents.push_back(candidate_from_json(p));
    if (j.contains("best")) s.best = candidate_from_json(j["best"]);
    std::istringstream rng(j.at("rng").get<std::string>());
    rng >> s.rng;
    decompose(s);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("malformed optimizer snapshot: ") + e.what());
  }
}

}  // namespace promptevo::cmaes
