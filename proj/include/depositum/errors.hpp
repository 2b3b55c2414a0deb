#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace depositum {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define DEPOSITUM_DEFINE_ERROR(Name)          \
    class Name : public Error {               \
    public:                                   \
        using Error::Error;                   \
    }

// prox / step-size well-posedness
DEPOSITUM_DEFINE_ERROR(StepTooLarge);
DEPOSITUM_DEFINE_ERROR(InvalidRegularizer);

// topology
DEPOSITUM_DEFINE_ERROR(InvalidTopology);
DEPOSITUM_DEFINE_ERROR(DisconnectedGraph);
DEPOSITUM_DEFINE_ERROR(NonDoublyStochastic);
DEPOSITUM_DEFINE_ERROR(NotStochastic);
DEPOSITUM_DEFINE_ERROR(DimensionMismatch);
DEPOSITUM_DEFINE_ERROR(InadmissibleStep);

// problems
DEPOSITUM_DEFINE_ERROR(NonMonotoneIndex);
DEPOSITUM_DEFINE_ERROR(IndexOutOfRange);
DEPOSITUM_DEFINE_ERROR(InvalidProblem);

// optimizer / metrics
DEPOSITUM_DEFINE_ERROR(InvalidHyperParams);
DEPOSITUM_DEFINE_ERROR(BudgetTooSmall);
DEPOSITUM_DEFINE_ERROR(TooFewPoints);
DEPOSITUM_DEFINE_ERROR(InvalidArgument);

// harness
DEPOSITUM_DEFINE_ERROR(ConfigError);
DEPOSITUM_DEFINE_ERROR(IoError);

#undef DEPOSITUM_DEFINE_ERROR

/// Malformed LIBSVM or config text. Line and column are 1-based.
class ParseError : public Error {
public:
    ParseError(std::size_t line, std::size_t column, const std::string& what)
        : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
          line_(line),
          column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

}  // namespace depositum
