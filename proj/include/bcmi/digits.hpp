#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include <gmpxx.h>

#include "bcmi/precision.hpp"

namespace bcmi {

inline constexpr int kCells = 900;
inline constexpr int kFirstTriple = 100;

inline int cell_of(int delta) { return delta - kFirstTriple; }
inline int triple_of_cell(int cell) { return cell + kFirstTriple; }

struct TripleCounts {
    std::array<std::uint64_t, kCells> counts{};
    std::uint64_t total = 0;

    void add(int delta) {
        ++counts[static_cast<std::size_t>(cell_of(delta))];
        ++total;
    }
    std::uint64_t at(int delta) const { return counts[static_cast<std::size_t>(cell_of(delta))]; }
    TripleCounts& operator+=(const TripleCounts& other);
    bool operator==(const TripleCounts&) const = default;
};

/// Probability vector over the 900 digit triples.
struct JointDist {
    std::array<double, kCells> p{};

    static JointDist from_counts(const TripleCounts& counts);
    double at(int delta) const { return p[static_cast<std::size_t>(cell_of(delta))]; }
    /// Throws DomainError on negative entries or a total off by more than 1e-12.
    void validate() const;
};

/// Exact limiting distribution P(delta) = log10(1 + 1/delta).
JointDist benford_joint();
/// Same, in long double.
std::array<long double, kCells> benford_joint_extended();

/// Cylinder boundaries log10(delta) - 2 for delta = 100..1000 at a fixed digit budget.
class CylinderTable {
public:
    explicit CylinderTable(int digits);

    /// Shared instance per digit budget.
    static const CylinderTable& get(int digits);

    int digits() const noexcept { return digits_; }
    const mpz_class& boundary(int delta) const { return bounds_[static_cast<std::size_t>(delta - 100)]; }
    std::uint64_t boundary_err(int delta) const { return delta == 100 || delta == 1000 ? 0 : 2; }
    /// |C(delta)| = log10(1 + 1/delta) in double.
    double width(int delta) const;

    /// Locates theta (scaled by 10^digits, known to within err_ulp) in its
    /// cylinder. Throws AmbiguityError when a boundary lies within `margin`.
    int locate(const mpz_class& theta, std::uint64_t err_ulp, const mpz_class& margin) const;

private:
    int digits_;
    std::vector<mpz_class> bounds_;
    mpz_class one_;
};

/// Leading digit triple of theta in [0,1): the delta with log10(delta) <= theta + 2 < log10(delta + 1).
int triple_of_frac(const FixedReal& theta, const CylinderTable& table, const mpz_class& margin_ulps);
int triple_of_frac(const FixedReal& theta, const CylinderTable& table,
                   int margin_digits = kDefaultMarginDigits);

/// Leading three significant digits of a positive integer, padding short values with zeros.
int leading_triple(const mpz_class& value);

struct StreamStats {
    int digits = 0;
    std::uint64_t exact_resolutions = 0; ///< boundary hits settled by exact integer powers
    int guard_digits = 0;                ///< final tracker guard digits (recurrences)
    int restarts = 0;
};

/// Called once per term with its index, triple and (for geometric streams) {n alpha}.
using TripleSink = std::function<void(std::uint64_t n, int delta, double theta)>;

/// Streams the leading triples of b^1..b^N.
StreamStats stream_geometric(std::uint64_t b, std::uint64_t count, const TripleSink& sink,
                             int digits = kDefaultDigits, int margin_digits = kDefaultMarginDigits);

TripleCounts count_triples_geometric(std::uint64_t b, std::uint64_t count, int digits = kDefaultDigits);

enum class Recurrence { Fibonacci, Factorial };

/// Significand m in [1,10) of a sequence term, kept as mantissa * 10^-guard
/// with a certified error bound, plus its decimal exponent.
class SignificandTracker {
public:
    explicit SignificandTracker(int guard_digits);

    static SignificandTracker from_integer(unsigned long value, int guard_digits);

    const mpz_class& significand() const noexcept { return sig_; }
    long exponent() const noexcept { return exp_; }
    std::uint64_t err_ulp() const noexcept { return err_; }
    int guard_digits() const noexcept { return guard_; }
    std::uint64_t renorm_count() const noexcept { return renorms_; }

    void multiply(unsigned long factor);
    /// Sum of two tracked terms.
    static SignificandTracker add(const SignificandTracker& a, const SignificandTracker& b);

    /// floor(100 m); throws AmbiguityError if the error interval reaches a triple boundary.
    int triple() const;

private:
    void normalize();

    mpz_class sig_;
    long exp_ = 0;
    std::uint64_t err_ = 0;
    std::uint64_t renorms_ = 0;
    int guard_;
    mpz_class lo_;
    mpz_class hi_;
    mpz_class unit_;
};

/// Streams triples of F_1..F_N (F_1 = F_2 = 1) or 1!..N!. Ambiguity doubles
/// the guard digits and restarts the sequence.
StreamStats stream_recurrence(Recurrence kind, std::uint64_t count, const TripleSink& sink,
                              int guard_digits = 50);

TripleCounts count_triples_recurrence(Recurrence kind, std::uint64_t count, int guard_digits = 50);

} // namespace bcmi
