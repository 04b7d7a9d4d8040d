#pragma once

#include <stdexcept>
#include <string>

namespace guidecloak {

// Base of everything thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid input: bad config files, precondition violations, geometry rejects.
struct ConfigError : Error {
  using Error::Error;
};

// A numerical procedure failed to reach its certified accuracy.
struct NumericError : Error {
  using Error::Error;
};

// The requested physical regime is rejected (not an input typo, not a
// numerical failure: the method itself does not apply).
struct RegimeError : Error {
  using Error::Error;
};

struct CoincidentPointsError : ConfigError {
  using ConfigError::ConfigError;
};

struct GradientVanishesError : ConfigError {
  using ConfigError::ConfigError;
};

struct NonConvergentError : NumericError {
  using NumericError::NumericError;
};

struct ExtrapolationDivergedError : NumericError {
  using NumericError::NumericError;
};

struct SingularSystemError : NumericError {
  using NumericError::NumericError;
};

struct MaxIterError : NumericError {
  using NumericError::NumericError;
};

struct NonContractionError : NumericError {
  using NumericError::NumericError;
};

struct SearchExhaustedError : NumericError {
  using NumericError::NumericError;
};

struct NearCutoffError : RegimeError {
  using RegimeError::RegimeError;
};

struct DegenerateGammaError : RegimeError {
  using RegimeError::RegimeError;
};

// Process exit codes used by the CLI.
enum ExitCode : int {
  exit_ok = 0,
  exit_failure = 1,
  exit_config = 2,
  exit_numeric = 3,
  exit_regime = 4,
};

inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const RegimeError*>(&e)) return exit_regime;
  if (dynamic_cast<const NumericError*>(&e)) return exit_numeric;
  if (dynamic_cast<const ConfigError*>(&e)) return exit_config;
  return exit_failure;
}

}  // namespace guidecloak
