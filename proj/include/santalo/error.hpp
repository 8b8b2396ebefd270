#pragma once

#include <stdexcept>
#include <string>

namespace santalo {

enum class Errc {
  DimensionUnsupported,
  InvalidArgument,
  ZeroMass,
  UnboundedConjugate,
  InstanceTooLarge,
  InfiniteStencil,
  NegativeHessianDeterminant,
  NotProbabilityDensity,
  TailNotResolved,
  DimensionMismatch,
  NotConverged,
  EmptyRow,
  BudgetExceeded,
  HDoesNotDominate,
  HypothesisViolated,
  BodyNotStarShaped,
  CurvatureUndefined,
  MapNotMonotone,
  MappedPointOffGrid,
  InvalidFamily,
  Config,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

}  // namespace santalo
