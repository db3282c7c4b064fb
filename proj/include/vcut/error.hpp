#pragma once

#include <stdexcept>
#include <string>

namespace vcut {

enum class ErrorKind {
    DuplicateEdge,
    SelfLoop,
    Disconnected,
    InvalidInput,
    InvalidParams,
    TagMismatch,
    BudgetExceeded,
    NonTermination,
    NotANeighbor,
    FootprintViolation,
    ExtractionExhausted,
    NotSpanning,
    Precondition,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace vcut
