#pragma once

#include <stdexcept>
#include <string>

namespace wiener {

// Every failure raised by the library derives from Error so callers (the CLI
// in particular) can catch one type and still report the specific category.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CapacityError : public Error { using Error::Error; };
class DomainError : public Error { using Error::Error; };
class PreconditionError : public Error { using Error::Error; };
class ValidationError : public Error { using Error::Error; };
class DivergenceError : public Error { using Error::Error; };
class AccuracyError : public Error { using Error::Error; };
class ConvergenceError : public Error { using Error::Error; };

// A Monte Carlo sample produced NaN or an infinity.
class PoisonedSampleError : public Error {
 public:
  PoisonedSampleError(const std::string& what, unsigned long long sample_index)
      : Error(what), sample_index_(sample_index) {}
  unsigned long long sample_index() const { return sample_index_; }

 private:
  unsigned long long sample_index_;
};

}  // namespace wiener
