#pragma once

#include <stdexcept>
#include <string>

namespace phylo {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Unreadable/unwritable files, malformed encodings.
class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(what) {}
};

/// Caller handed us arguments that violate a precondition.
class InvalidInputError : public Error {
public:
    explicit InvalidInputError(const std::string& what) : Error(what) {}
};

/// Parsed data violates a structural invariant (manifests, ground truth).
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(what) {}
};

/// Invariant broken inside the library itself; indicates a bug upstream.
class InternalError : public Error {
public:
    explicit InternalError(const std::string& what) : Error(what) {}
};

}  // namespace phylo
