#pragma once

#include <stdexcept>
#include <string>

namespace mnlb {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Gram matrix (or design) is numerically singular; the requested solve or
// estimate is not identified.
struct SingularDesignError : Error {
    using Error::Error;
};

struct IndexError : Error {
    using Error::Error;
};

struct DomainError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

// Combinatorial enumeration would exceed its size guard.
struct GuardExceededError : Error {
    using Error::Error;
};

}  // namespace mnlb
