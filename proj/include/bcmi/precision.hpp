#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <gmpxx.h>

namespace bcmi {

inline constexpr int kMinDigits = 50;
inline constexpr int kDefaultDigits = 500;
inline constexpr int kDefaultMarginDigits = 20;

/// Decimal fixed-point real: value = mantissa * 10^-digits, known to within
/// err_ulp units of 10^-digits. Immutable once built.
class FixedReal {
public:
    FixedReal(mpz_class mantissa, int digits, std::uint64_t err_ulp = 0, bool rational = false);

    static FixedReal from_integer(long value, int digits);
    /// Parses "123.456" (no sign, no exponent); the result is exact.
    static FixedReal from_decimal(std::string_view text, int digits);

    const mpz_class& mantissa() const noexcept { return mantissa_; }
    int digits() const noexcept { return digits_; }
    std::uint64_t err_ulp() const noexcept { return err_ulp_; }
    bool exact() const noexcept { return err_ulp_ == 0; }
    /// True when the value is known to be rational (log10 of a power of ten).
    bool rational() const noexcept { return rational_; }

    mpz_class floor() const;
    FixedReal frac() const;
    /// Same value at another scale; truncation adds one ulp of error.
    FixedReal rescaled(int digits) const;

    /// (this + other) mod 1. Both operands must share the scale and lie in [0,1).
    FixedReal add_mod1(const FixedReal& other) const;

    double to_double() const;
    std::string to_string(int shown_digits) const;

    /// Compares mantissas at equal scale, ignoring error bounds.
    std::strong_ordering operator<=>(const FixedReal& other) const;
    bool operator==(const FixedReal& other) const;

private:
    mpz_class mantissa_;
    int digits_;
    std::uint64_t err_ulp_;
    bool rational_;
};

/// 10^exponent as a big integer.
mpz_class pow10(unsigned long exponent);

/// Approximates mantissa * 10^-digits as a double without overflow.
double scaled_to_double(const mpz_class& mantissa, int digits);

struct PrecisionBudget {
    int digits = kDefaultDigits;
    std::uint64_t max_n = 0;
    /// Orbit points closer than 10^-margin_digits to a cylinder boundary are ambiguous.
    int margin_digits = kDefaultMarginDigits;

    /// Budget certifying n orbit points, raising `digits` when n needs it.
    static PrecisionBudget for_count(std::uint64_t n, int digits = kDefaultDigits,
                                     int margin_digits = kDefaultMarginDigits);

    /// Throws PrecisionError unless max_n*(alpha_err+1)*10^-D < 10^-10 and the
    /// accumulated orbit error stays below the safety margin.
    void validate(std::uint64_t alpha_err_ulp) const;

    mpz_class margin_ulps() const;
};

/// log10(b) to `digits` decimals with err_ulp <= 2. Powers of ten come back
/// exact and flagged rational.
FixedReal log10_int(std::uint64_t b, int digits);

/// log10(k) for every k in [lo, hi], each with err_ulp <= 2. Uses the
/// recurrence ln(k+1) = ln(k) + 2 atanh(1/(2k+1)).
std::vector<FixedReal> log10_range(std::uint64_t lo, std::uint64_t hi, int digits);

/// Streams {n*alpha} for n = 1..count by repeated addition mod 1.
class OrbitStream {
public:
    OrbitStream(const FixedReal& alpha, std::uint64_t count, const PrecisionBudget& budget);

    /// Advances to the next index; false once `count` points were produced.
    bool next();

    std::uint64_t index() const noexcept { return n_; }
    std::uint64_t count() const noexcept { return count_; }
    const mpz_class& mantissa() const noexcept { return theta_; }
    std::uint64_t err_ulp() const noexcept { return n_ * step_err_; }
    int digits() const noexcept { return digits_; }
    FixedReal point() const;
    double approx() const { return scaled_to_double(theta_, digits_); }

private:
    mpz_class step_;
    mpz_class theta_;
    mpz_class one_;
    std::uint64_t step_err_;
    std::uint64_t n_ = 0;
    std::uint64_t count_;
    int digits_;
};

/// Materialized orbit; convenient for small counts and tests.
std::vector<FixedReal> orbit_fracs(const FixedReal& alpha, std::uint64_t count,
                                   const PrecisionBudget& budget);

} // namespace bcmi
