#pragma once

#include <stdexcept>
#include <string>

namespace sciagent {

/// Base for every error raised by the library. `kind()` is a stable name
/// used in transcript error events and CLI diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define SCIAGENT_DEFINE_ERROR(Name, Base)                                 \
  class Name : public Base {                                              \
   public:                                                                \
    explicit Name(const std::string& message) : Base(#Name, message) {}   \
                                                                          \
   protected:                                                             \
    Name(std::string kind, const std::string& message)                    \
        : Base(std::move(kind), message) {}                               \
  };

SCIAGENT_DEFINE_ERROR(PreconditionError, Error)
SCIAGENT_DEFINE_ERROR(ConfigError, Error)

// chat backend
SCIAGENT_DEFINE_ERROR(TransportError, Error)
SCIAGENT_DEFINE_ERROR(MalformedResponse, Error)
SCIAGENT_DEFINE_ERROR(ScriptExhausted, Error)

// workflow engine
SCIAGENT_DEFINE_ERROR(InvalidGraph, Error)
SCIAGENT_DEFINE_ERROR(NodeFailure, Error)
SCIAGENT_DEFINE_ERROR(LimitExceeded, Error)
SCIAGENT_DEFINE_ERROR(UnknownCheckpoint, Error)
SCIAGENT_DEFINE_ERROR(CorruptSnapshot, Error)

// tools
SCIAGENT_DEFINE_ERROR(ToolError, Error)
SCIAGENT_DEFINE_ERROR(CommandTimeout, ToolError)
SCIAGENT_DEFINE_ERROR(SpawnFailure, ToolError)
SCIAGENT_DEFINE_ERROR(GateViolation, ToolError)
SCIAGENT_DEFINE_ERROR(PathEscape, ToolError)
SCIAGENT_DEFINE_ERROR(IoFailure, ToolError)
SCIAGENT_DEFINE_ERROR(ProviderUnavailable, ToolError)
SCIAGENT_DEFINE_ERROR(FetchFailure, ToolError)

// agents
SCIAGENT_DEFINE_ERROR(FormalizationFailed, Error)
SCIAGENT_DEFINE_ERROR(MalformedDebate, Error)
SCIAGENT_DEFINE_ERROR(ApiUnavailable, Error)
SCIAGENT_DEFINE_ERROR(EmptyResultSet, Error)
SCIAGENT_DEFINE_ERROR(ExtractionFailure, Error)

// workbench
SCIAGENT_DEFINE_ERROR(OutOfBounds, Error)

#undef SCIAGENT_DEFINE_ERROR

}  // namespace sciagent
