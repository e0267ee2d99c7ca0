#ifndef ABSTAIN_ERRORS_HPP_
#define ABSTAIN_ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace abstain {

// Every error raised by the library derives from Error so callers (the CLI in
// particular) can map the whole family onto one exit status.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string &what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  ValidationError(std::string instance_id, const std::string &what)
      : Error("instance '" + instance_id + "': " + what),
        instance_id_(std::move(instance_id)) {}
  const std::string &instance_id() const { return instance_id_; }

 private:
  std::string instance_id_;
};

#define ABSTAIN_DEFINE_ERROR(Name)  \
  class Name : public Error {       \
   public:                          \
    using Error::Error;             \
  };

ABSTAIN_DEFINE_ERROR(RangeError)
ABSTAIN_DEFINE_ERROR(UnknownScore)
ABSTAIN_DEFINE_ERROR(EmptyCalibration)
ABSTAIN_DEFINE_ERROR(LengthMismatch)
ABSTAIN_DEFINE_ERROR(DegenerateStratum)
ABSTAIN_DEFINE_ERROR(EmptySelection)
ABSTAIN_DEFINE_ERROR(DomainError)
ABSTAIN_DEFINE_ERROR(EmptyInput)
ABSTAIN_DEFINE_ERROR(InsufficientPoints)
ABSTAIN_DEFINE_ERROR(SpecError)
ABSTAIN_DEFINE_ERROR(TooLarge)
ABSTAIN_DEFINE_ERROR(NoClosedForm)
ABSTAIN_DEFINE_ERROR(ConfigError)

#undef ABSTAIN_DEFINE_ERROR

}  // namespace abstain

#endif  // ABSTAIN_ERRORS_HPP_
