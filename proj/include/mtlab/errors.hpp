#pragma once
#include <stdexcept>
#include <string>

namespace mtlab {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// schema/config problems map to exit code 2 in the CLI, everything else to 3
struct ConfigError : Error { using Error::Error; };
struct WellCurvedViolation : Error { using Error::Error; };
struct SupportViolation : Error { using Error::Error; };
struct QuadratureError : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct InvalidInstance : Error { using Error::Error; };
struct PackingError : Error { using Error::Error; };

struct ConstructionError : Error {
    long achieved;
    ConstructionError(const std::string& what, long m) : Error(what), achieved(m) {}
};

}  // namespace mtlab
