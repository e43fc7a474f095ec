#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace masim {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define MASIM_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& msg) : Error(#Name ": " + msg) {} \
  }

MASIM_DEFINE_ERROR(InvalidParameter);
MASIM_DEFINE_ERROR(NotNormalizable);
MASIM_DEFINE_ERROR(RegimeMismatch);
MASIM_DEFINE_ERROR(MissingHeavyProfile);
MASIM_DEFINE_ERROR(UnsupportedDimension);
MASIM_DEFINE_ERROR(UnsupportedFamily);
MASIM_DEFINE_ERROR(UnsupportedSet);
MASIM_DEFINE_ERROR(RootNotBracketed);
MASIM_DEFINE_ERROR(EmptyRegion);
MASIM_DEFINE_ERROR(QuadratureTolNotMet);
MASIM_DEFINE_ERROR(DivergentTerm);
MASIM_DEFINE_ERROR(ForbiddenOmega);
MASIM_DEFINE_ERROR(EmptyFeasibleSet);
MASIM_DEFINE_ERROR(InsufficientData);
MASIM_DEFINE_ERROR(NoDriftCertificate);
MASIM_DEFINE_ERROR(NoNegativeG);
MASIM_DEFINE_ERROR(ConfigError);

#undef MASIM_DEFINE_ERROR

/// Search exceeded its step budget; carries the cap that was hit.
class NotFoundWithinBudget : public Error {
 public:
  NotFoundWithinBudget(const std::string& msg, long budget)
      : Error("NotFoundWithinBudget: " + msg + " (budget " +
              std::to_string(budget) + ")"),
        budget_(budget) {}
  long budget() const { return budget_; }

 private:
  long budget_;
};

/// Open interval of the real line, endpoints possibly infinite.
struct Interval {
  double lo = -kInf;
  double hi = kInf;
  bool contains(double x) const { return x > lo && x < hi; }
  bool whole_line() const { return lo == -kInf && hi == kInf; }
};

/// Execution policy for the batch kernels. Every parallel kernel has a
/// serial twin producing bit-identical output; tests and the benchmark
/// compare the two.
enum class Exec { Serial, Parallel };

}  // namespace masim
