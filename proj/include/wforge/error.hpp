#pragma once

#include <stdexcept>
#include <string>

namespace wforge {

/// Base class for every recoverable failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define WFORGE_DEFINE_ERROR(Name)          \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  }

WFORGE_DEFINE_ERROR(GridMismatch);
WFORGE_DEFINE_ERROR(NonPeriodicGrid);
WFORGE_DEFINE_ERROR(KindMismatch);
WFORGE_DEFINE_ERROR(InvalidPotential);
WFORGE_DEFINE_ERROR(InvalidSeed);
WFORGE_DEFINE_ERROR(BadDispersion);
WFORGE_DEFINE_ERROR(NotPeriodic);
WFORGE_DEFINE_ERROR(PotentialMismatch);
WFORGE_DEFINE_ERROR(EmptyPlan);
WFORGE_DEFINE_ERROR(ShapeMismatch);
WFORGE_DEFINE_ERROR(AllDegenerate);
WFORGE_DEFINE_ERROR(DegenerateMetric);
WFORGE_DEFINE_ERROR(ImaginaryDrift);
WFORGE_DEFINE_ERROR(StepTooLarge);
WFORGE_DEFINE_ERROR(ParseError);
WFORGE_DEFINE_ERROR(ConfigError);

#undef WFORGE_DEFINE_ERROR

/// Raised by inv_dzbar when the periodic problem has no solution.
class NonzeroMean : public Error {
 public:
  NonzeroMean(double mean_abs, const std::string& detail = {})
      : Error("NonzeroMean: |mean| = " + std::to_string(mean_abs) +
              (detail.empty() ? std::string{} : "; " + detail)),
        mean_abs_(mean_abs) {}
  double mean_abs() const { return mean_abs_; }

 private:
  double mean_abs_;
};

class NoConvergence : public Error {
 public:
  NoConvergence(int iterations, double last_residual)
      : Error("NoConvergence after " + std::to_string(iterations) +
              " iterations, last residual " + std::to_string(last_residual)),
        iterations_(iterations),
        last_residual_(last_residual) {}
  int iterations() const { return iterations_; }
  double last_residual() const { return last_residual_; }

 private:
  int iterations_;
  double last_residual_;
};

}  // namespace wforge
