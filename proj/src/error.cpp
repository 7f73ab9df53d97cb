#include "promptevo/error.hpp"

namespace promptevo {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::io_error: return "IoError";
    case ErrorCode::parse_error: return "ParseError";
    case ErrorCode::config_error: return "ConfigError";
    case ErrorCode::empty_mesh: return "EmptyMesh";
    case ErrorCode::zero_projection: return "ZeroProjection";
    case ErrorCode::degenerate_baseline: return "DegenerateBaseline";
    case ErrorCode::cycle_detected: return "CycleDetected";
    case ErrorCode::missing_root: return "MissingRoot";
    case ErrorCode::unknown_word: return "UnknownWord";
    case ErrorCode::bad_config: return "BadConfig";
    case ErrorCode::covariance_degenerate: return "CovarianceDegenerate";
    case ErrorCode::wrong_population_size: return "WrongPopulationSize";
    case ErrorCode::generation_failed: return "GenerationFailed";
    case ErrorCode::evaluation_failed: return "EvaluationFailed";
  }
  return "Unknown";
}

}  // namespace promptevo
