#pragma once

#include <stdexcept>
#include <string>

namespace pamcts {

// A caller broke an operation's precondition (stepping a terminal state,
// zero visit counts in a score, mismatched path lengths).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class InvalidAction : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad user-supplied parameters or configuration.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ResourceLimitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent file contents. field() names the offending entry.
class LoadError : public std::runtime_error {
public:
    LoadError(std::string field, const std::string& what)
        : std::runtime_error("'" + field + "': " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace pamcts
