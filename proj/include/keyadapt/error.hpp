#pragma once

#include <stdexcept>
#include <string>

namespace keyadapt {

enum class ErrorKind {
    domain,
    degenerate_channel,
    shape,
    profile_incomplete,
    ordering,
    exhausted_channel,
    no_eligible_channel,
    invariant_violation,
    infeasible,
    config,
    io,
    parse,
};

inline const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::degenerate_channel: return "degenerate-channel";
    case ErrorKind::shape: return "shape";
    case ErrorKind::profile_incomplete: return "profile-incomplete";
    case ErrorKind::ordering: return "ordering";
    case ErrorKind::exhausted_channel: return "exhausted-channel";
    case ErrorKind::no_eligible_channel: return "no-eligible-channel";
    case ErrorKind::invariant_violation: return "invariant-violation";
    case ErrorKind::infeasible: return "infeasible";
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
    case ErrorKind::parse: return "parse";
    }
    return "unknown";
}

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace keyadapt
