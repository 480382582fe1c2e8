#pragma once

#include <stdexcept>
#include <string>

namespace sumlens {

// Coarse failure class; the CLI maps these onto process exit codes.
enum class ErrorKind { Config, Backend, Data };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define SUMLENS_DEFINE_ERROR(Name, Kind)                                           \
  class Name : public Error {                                                      \
   public:                                                                         \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, #Name ": " + what) {} \
  };

SUMLENS_DEFINE_ERROR(ConfigError, Config)
SUMLENS_DEFINE_ERROR(PathError, Config)
SUMLENS_DEFINE_ERROR(RangeError, Config)
SUMLENS_DEFINE_ERROR(UnsupportedCapability, Backend)
SUMLENS_DEFINE_ERROR(BackendUnavailable, Backend)
SUMLENS_DEFINE_ERROR(ProtocolError, Backend)
SUMLENS_DEFINE_ERROR(EmptyDocument, Data)
SUMLENS_DEFINE_ERROR(IndexError, Data)
SUMLENS_DEFINE_ERROR(VocabError, Data)
SUMLENS_DEFINE_ERROR(ShapeError, Data)
SUMLENS_DEFINE_ERROR(EmptySourceError, Data)
SUMLENS_DEFINE_ERROR(NotApplicable, Data)
SUMLENS_DEFINE_ERROR(DataError, Data)

#undef SUMLENS_DEFINE_ERROR

}  // namespace sumlens
