#pragma once

#include <stdexcept>
#include <string>

namespace otafl {

// Error taxonomy shared by all modules. Callers that can recover catch the
// specific type; the experiment harness records the message per cell.

struct ZeroGradientError : std::runtime_error {
    explicit ZeroGradientError(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateChannelError : std::runtime_error {
    explicit DegenerateChannelError(const std::string& what) : std::runtime_error(what) {}
};

struct EmptySelectionError : std::runtime_error {
    explicit EmptySelectionError(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateProjectionError : std::runtime_error {
    explicit DegenerateProjectionError(const std::string& what) : std::runtime_error(what) {}
};

struct NumericDegeneracyError : std::runtime_error {
    explicit NumericDegeneracyError(const std::string& what) : std::runtime_error(what) {}
};

struct PackingError : std::runtime_error {
    explicit PackingError(const std::string& what) : std::runtime_error(what) {}
};

struct SolverFailureError : std::runtime_error {
    explicit SolverFailureError(const std::string& what) : std::runtime_error(what) {}
};

struct SizeError : std::runtime_error {
    explicit SizeError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace otafl
