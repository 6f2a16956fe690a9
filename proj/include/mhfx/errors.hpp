#pragma once

#include <stdexcept>
#include <string>

namespace mhfx {

// Base of every domain error raised by the library. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define MHFX_DEFINE_ERROR(Name)                 \
    class Name : public Error {                 \
    public:                                     \
        using Error::Error;                     \
    }

MHFX_DEFINE_ERROR(InvalidInput);
MHFX_DEFINE_ERROR(MeanExplosion);
MHFX_DEFINE_ERROR(UnknownCurrency);
MHFX_DEFINE_ERROR(InvalidPair);
MHFX_DEFINE_ERROR(DimensionMismatch);
MHFX_DEFINE_ERROR(DegenerateVariance);
MHFX_DEFINE_ERROR(StripViolation);
MHFX_DEFINE_ERROR(NumericalOverflow);
MHFX_DEFINE_ERROR(PriceOutOfBounds);
MHFX_DEFINE_ERROR(InfeasibleDelta);
MHFX_DEFINE_ERROR(QuadratureFailure);
MHFX_DEFINE_ERROR(FixedPointDivergence);
MHFX_DEFINE_ERROR(InsufficientQuotes);
MHFX_DEFINE_ERROR(NoConvergence);
MHFX_DEFINE_ERROR(OdeFailure);

#undef MHFX_DEFINE_ERROR

// Malformed input file. row/column are 1-based; 0 means unknown.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t row = 0, std::size_t column = 0)
        : Error(format(what, row, column)), row_(row), column_(column) {}

    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

private:
    static std::string format(const std::string& what, std::size_t row, std::size_t column) {
        if (row == 0) return what;
        std::string s = "row " + std::to_string(row);
        if (column != 0) s += ", column " + std::to_string(column);
        return s + ": " + what;
    }

    std::size_t row_;
    std::size_t column_;
};

}  // namespace mhfx
