#pragma once

#include <stdexcept>
#include <string>

namespace wavemesh {

// One exception type per rejected-input class so callers can dispatch on
// the failure kind without parsing messages.

struct NonDyadicLength : std::invalid_argument {
    explicit NonDyadicLength(const std::string& msg) : std::invalid_argument(msg) {}
};

struct InvalidLevel : std::invalid_argument {
    explicit InvalidLevel(const std::string& msg) : std::invalid_argument(msg) {}
};

struct OutOfDomain : std::invalid_argument {
    explicit OutOfDomain(const std::string& msg) : std::invalid_argument(msg) {}
};

struct DimensionMismatch : std::invalid_argument {
    explicit DimensionMismatch(const std::string& msg) : std::invalid_argument(msg) {}
};

struct EmptyMatrix : std::invalid_argument {
    explicit EmptyMatrix(const std::string& msg) : std::invalid_argument(msg) {}
};

struct LayoutMismatch : std::invalid_argument {
    explicit LayoutMismatch(const std::string& msg) : std::invalid_argument(msg) {}
};

struct ConstantResponse : std::invalid_argument {
    explicit ConstantResponse(const std::string& msg) : std::invalid_argument(msg) {}
};

struct TooFewObservations : std::invalid_argument {
    explicit TooFewObservations(const std::string& msg) : std::invalid_argument(msg) {}
};

struct DegenerateScale : std::invalid_argument {
    explicit DegenerateScale(const std::string& msg) : std::invalid_argument(msg) {}
};

struct InvalidLabels : std::invalid_argument {
    explicit InvalidLabels(const std::string& msg) : std::invalid_argument(msg) {}
};

struct InvalidScenario : std::invalid_argument {
    explicit InvalidScenario(const std::string& msg) : std::invalid_argument(msg) {}
};

struct CsvError : std::runtime_error {
    std::size_t line;
    CsvError(std::size_t line_, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line_) + ": " + msg), line(line_) {}
};

} // namespace wavemesh
