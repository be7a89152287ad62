#pragma once

#include <stdexcept>
#include <string>

namespace cib {

enum class ErrorKind {
  parse,
  reference,
  range,
  structure,
  infeasible,
  tractability,
  configuration,
  empty_input,
  insufficient_candidates,
  coverage,
  unrepairable,
  input,
  io,
};

const char* to_string(ErrorKind kind) noexcept;

// Base of every error the library throws. `path` locates the offending item
// (a JSON pointer-like path for documents, a descriptor id for runtime errors)
// and may be empty.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string path, const std::string& reason);

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& path() const noexcept { return path_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  ErrorKind kind_;
  std::string path_;
  std::string reason_;
};

#define CIB_DEFINE_ERROR(Name, Kind)                                   \
  class Name : public Error {                                          \
   public:                                                             \
    Name(std::string path, const std::string& reason)                  \
        : Error(ErrorKind::Kind, std::move(path), reason) {}           \
  }

CIB_DEFINE_ERROR(ParseError, parse);
CIB_DEFINE_ERROR(ReferenceError, reference);
CIB_DEFINE_ERROR(RangeError, range);
CIB_DEFINE_ERROR(StructureError, structure);
CIB_DEFINE_ERROR(InfeasibilityError, infeasible);
CIB_DEFINE_ERROR(TractabilityError, tractability);
CIB_DEFINE_ERROR(ConfigError, configuration);
CIB_DEFINE_ERROR(EmptyInputError, empty_input);
CIB_DEFINE_ERROR(InsufficientCandidatesError, insufficient_candidates);
CIB_DEFINE_ERROR(CoverageError, coverage);
CIB_DEFINE_ERROR(UnrepairableError, unrepairable);
CIB_DEFINE_ERROR(InputError, input);
CIB_DEFINE_ERROR(IoError, io);

#undef CIB_DEFINE_ERROR

}  // namespace cib
