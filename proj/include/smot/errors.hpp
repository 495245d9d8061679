#pragma once

#include <stdexcept>
#include <string>

namespace smot {

/// Base class for all domain errors; `kind()` is a stable machine-readable tag.
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string& detail)
      : std::runtime_error(detail), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

private:
  std::string kind_;
};

struct DomainError : Error {
  explicit DomainError(const std::string& d) : Error("domain_error", d) {}
};

struct MassError : Error {
  explicit MassError(const std::string& d) : Error("mass_error", d) {}
};

struct InvalidPotentialError : Error {
  explicit InvalidPotentialError(const std::string& d) : Error("invalid_potential", d) {}
};

struct OrderViolationError : Error {
  explicit OrderViolationError(const std::string& d, double breakpoint = 0.0, double gap = 0.0)
      : Error("order_violation", d), breakpoint(breakpoint), gap(gap) {}
  double breakpoint;  // point where P_mu exceeds P_nu
  double gap;         // size of the violation
};

struct ChainingError : Error {
  explicit ChainingError(const std::string& d) : Error("chaining_error", d) {}
};

struct SolverError : Error {
  explicit SolverError(const std::string& d) : Error("solver_error", d) {}
};

struct InternalConsistencyError : Error {
  explicit InternalConsistencyError(const std::string& d) : Error("internal_consistency", d) {}
};

struct CouplingInconsistentError : Error {
  explicit CouplingInconsistentError(const std::string& d) : Error("coupling_inconsistent", d) {}
};

struct ParameterSearchError : Error {
  explicit ParameterSearchError(const std::string& d) : Error("parameter_search", d) {}
};

struct TargetConstructionError : Error {
  explicit TargetConstructionError(const std::string& d) : Error("target_construction", d) {}
};

struct LocalizationError : Error {
  explicit LocalizationError(const std::string& d) : Error("degenerate_localization", d) {}
};

struct CorrectionError : Error {
  explicit CorrectionError(const std::string& d) : Error("correction_error", d) {}
};

struct CompletionError : Error {
  explicit CompletionError(const std::string& d) : Error("completion_error", d) {}
};

struct PerturbationError : Error {
  explicit PerturbationError(const std::string& d) : Error("perturbation_error", d) {}
};

struct CostDomainError : Error {
  explicit CostDomainError(const std::string& d) : Error("cost_domain_error", d) {}
};

struct StageError : Error {
  StageError(const std::string& stage, const Error& cause)
      : Error("stage_error", "stage " + stage + ": " + cause.what()), stage(stage),
        cause_kind(cause.kind()) {}
  std::string stage;
  std::string cause_kind;
};

// Tolerances. Construction-time atom merging always uses kMergeTol; order
// predicates and constraint residuals use the (overridable) order tolerance.
inline constexpr double kMergeTol = 1e-12;

double order_tol();
void set_order_tol(double tol);

}  // namespace smot
