#pragma once

#include <stdexcept>
#include <string>

namespace multsub {

// Error taxonomy shared by the library and the CLI. Each class maps to a
// distinct process exit code (see exit_code_for).

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// The generating set prunes to nothing, or a query has no admissible answer.
struct EmptyOmega : std::runtime_error {
  explicit EmptyOmega(const std::string& what) : std::runtime_error(what) {}
};

// A query reaches past the declared truncation depth of an explicit tree,
// or past a guarded recursion limit.
struct DepthExceeded : std::runtime_error {
  explicit DepthExceeded(const std::string& what) : std::runtime_error(what) {}
};

// An exact-enumeration request exceeds the configured work budget.
struct BudgetExceeded : std::runtime_error {
  explicit BudgetExceeded(const std::string& what) : std::runtime_error(what) {}
};

struct NotAProbability : std::runtime_error {
  explicit NotAProbability(const std::string& what) : std::runtime_error(what) {}
};

struct IndexOutOfSchedule : std::out_of_range {
  explicit IndexOutOfSchedule(const std::string& what) : std::out_of_range(what) {}
};

// The fixed-point map fails its contraction certificate.
struct NonContracting : std::runtime_error {
  explicit NonContracting(const std::string& what) : std::runtime_error(what) {}
};

struct ResolutionTooCoarse : std::runtime_error {
  explicit ResolutionTooCoarse(const std::string& what) : std::runtime_error(what) {}
};

int exit_code_for(const std::exception& e);

}  // namespace multsub
