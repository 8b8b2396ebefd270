#include "santalo/util.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "santalo/error.hpp"

namespace santalo {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::DimensionUnsupported: return "dimension unsupported";
    case Errc::InvalidArgument: return "invalid argument";
    case Errc::ZeroMass: return "zero mass";
    case Errc::UnboundedConjugate: return "unbounded conjugate";
    case Errc::InstanceTooLarge: return "instance too large";
    case Errc::InfiniteStencil: return "infinite stencil";
    case Errc::NegativeHessianDeterminant: return "negative Hessian determinant";
    case Errc::NotProbabilityDensity: return "not a probability density";
    case Errc::TailNotResolved: return "tail not resolved";
    case Errc::DimensionMismatch: return "dimension mismatch";
    case Errc::NotConverged: return "not converged";
    case Errc::EmptyRow: return "empty row";
    case Errc::BudgetExceeded: return "budget exceeded";
    case Errc::HDoesNotDominate: return "h does not dominate";
    case Errc::HypothesisViolated: return "hypothesis violated";
    case Errc::BodyNotStarShaped: return "body not star-shaped sampling";
    case Errc::CurvatureUndefined: return "curvature undefined";
    case Errc::MapNotMonotone: return "map not monotone";
    case Errc::MappedPointOffGrid: return "mapped point off-grid";
    case Errc::InvalidFamily: return "invalid family parameter";
    case Errc::Config: return "config error";
  }
  return "unknown error";
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace santalo
