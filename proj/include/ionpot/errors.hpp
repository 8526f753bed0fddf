#ifndef IONPOT_ERRORS_HPP
#define IONPOT_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace ionpot {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad call arguments: out-of-range index, unordered positions, size mismatch.
class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& msg) : Error(msg) {}
};

// Evaluation outside a curve or potential domain.
class DomainError : public Error {
public:
    explicit DomainError(const std::string& msg) : Error(msg) {}
};

// Numerical failure: non-convergence, coincident ions, singular system.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

// Malformed or inconsistent configuration / input file content.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Filesystem-level failure.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

// Offset alignment cannot couple all segments; carries the connected
// components so the caller can anchor each one separately.
class DisconnectedOverlap : public Error {
public:
    DisconnectedOverlap(const std::string& msg,
                        std::vector<std::vector<std::size_t>> components)
        : Error(msg), components_(std::move(components)) {}

    const std::vector<std::vector<std::size_t>>& components() const {
        return components_;
    }

private:
    std::vector<std::vector<std::size_t>> components_;
};

} // namespace ionpot

#endif
