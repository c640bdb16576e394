#pragma once

#include <stdexcept>
#include <string>

namespace imgbias {

/// Base of every error the library throws. `kind()` is a stable short name
/// used in machine-readable diagnostics.
class Error : public std::runtime_error {
 public:
  Error(const char* kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  const char* kind() const noexcept { return kind_; }

 private:
  const char* kind_;
};

#define IMGBIAS_DEFINE_ERROR(Name)                                \
  class Name : public Error {                                     \
   public:                                                        \
    explicit Name(const std::string& what) : Error(#Name, what) {} \
  }

// container parsing / decoding
IMGBIAS_DEFINE_ERROR(MalformedStream);
IMGBIAS_DEFINE_ERROR(UnsupportedStream);
// argument outside the documented domain
IMGBIAS_DEFINE_ERROR(DomainError);
IMGBIAS_DEFINE_ERROR(IoError);
// audit
IMGBIAS_DEFINE_ERROR(EmptyDistribution);
IMGBIAS_DEFINE_ERROR(ShapeMismatch);
// debias
IMGBIAS_DEFINE_ERROR(InsufficientData);
IMGBIAS_DEFINE_ERROR(ConstraintViolation);
// probe / eval
IMGBIAS_DEFINE_ERROR(DegenerateData);
IMGBIAS_DEFINE_ERROR(EmptyEval);
IMGBIAS_DEFINE_ERROR(ParseError);
IMGBIAS_DEFINE_ERROR(MissingCell);
IMGBIAS_DEFINE_ERROR(JoinError);

#undef IMGBIAS_DEFINE_ERROR

}  // namespace imgbias
