#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace promptevo::cmaes {

enum class Selection { comma, plus };

const char* to_string(Selection s) noexcept;
Selection parse_selection(const std::string& text);

struct CmaConfig {
  int dimension = 2;
  int lambda = 10;
  int mu = 3;
  double sigma0 = 0.25;
  int max_generations = 100;
  Selection mode = Selection::comma;
  std::uint64_t seed = 0;
  double tolerance = 1e-10;
};

enum class Origin { offspring, surviving_parent };

struct EvaluatedCandidate {
  Eigen::VectorXd genome;
  double fitness = 0.0;  ///< lower is better
  Origin origin = Origin::offspring;
};

/// Complete optimizer state. Copying a state copies its random stream, so two
/// copies produce identical samples.
struct CmaState {
  CmaConfig config;
  Eigen::VectorXd mean;
  double sigma = 0.0;
  Eigen::MatrixXd C;
  Eigen::MatrixXd B;  ///< eigenvectors of C (columns)
  Eigen::VectorXd D;  ///< square roots of the eigenvalues of C
  Eigen::VectorXd p_sigma;
  Eigen::VectorXd p_c;
  int generation = 0;
  int evaluations = 0;

  Eigen::VectorXd weights;
  double mu_eff = 0.0;
  double c_sigma = 0.0;
  double d_sigma = 0.0;
  double c_c = 0.0;
  double c_1 = 0.0;
  double c_mu = 0.0;
  double chi_n = 0.0;

  /// The mu candidates selected by the last tell, best first.
  std::vector<EvaluatedCandidate> parents;
  std::optional<EvaluatedCandidate> best;

  std::mt19937_64 rng;
};

/// Fresh state with C = I, zero paths and the standard (Hansen) strategy
/// parameters for the given dimension and mu. Throws BadConfig.
CmaState init(const CmaConfig& config, const Eigen::VectorXd& initial_mean);

/// Draws lambda candidates mean + sigma * B * D * z, z ~ N(0, I), advancing
/// the state's random stream. Throws CovarianceDegenerate.
std::vector<Eigen::VectorXd> ask(CmaState& state);

/// The surviving parents to pass back into tell under plus selection.
std::vector<EvaluatedCandidate> surviving_parents(const CmaState& state);

/// Selects mu candidates (from the offspring under comma selection, from
/// offspring and surviving parents under plus selection) by stable sort on
/// fitness, then updates mean, evolution paths, step size and covariance.
/// Only the ranking of fitness values is used. Throws WrongPopulationSize or
/// CovarianceDegenerate.
void tell(CmaState& state, const std::vector<EvaluatedCandidate>& evaluated);

struct Convergence {
  bool converged = false;
  std::string reason;  ///< "max_generations", "step_size" or empty
};

Convergence has_converged(const CmaState& state);

/// Snapshot for run resumption, including the random stream.
nlohmann::json to_json(const CmaState& state);
CmaState state_from_json(const nlohmann::json& doc);

}  // namespace promptevo::cmaes
