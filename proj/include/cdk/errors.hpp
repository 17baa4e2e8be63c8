#pragma once

#include <stdexcept>
#include <string>

namespace cdk {

struct InvalidInput : std::invalid_argument {
  explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

struct DimensionMismatch : InvalidInput {
  explicit DimensionMismatch(const std::string& what) : InvalidInput(what) {}
};

struct NotPositiveDefinite : std::runtime_error {
  explicit NotPositiveDefinite(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateLeadingCoefficient : InvalidInput {
  explicit DegenerateLeadingCoefficient(const std::string& what) : InvalidInput(what) {}
};

struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

struct SingularMatrix : std::runtime_error {
  explicit SingularMatrix(const std::string& what) : std::runtime_error(what) {}
};

struct UnsupportedProblem : InvalidInput {
  explicit UnsupportedProblem(const std::string& what) : InvalidInput(what) {}
};

struct UnderdeterminedGauge : InvalidInput {
  explicit UnderdeterminedGauge(const std::string& what) : InvalidInput(what) {}
};

// Oracle asked to enumerate a domain above its hard size cap.
struct OracleRefused : std::runtime_error {
  explicit OracleRefused(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cdk
