#include "bcmi/precision.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>

#include "bcmi/errors.hpp"

namespace bcmi {

namespace {

constexpr int kGuardDigits = 30;

void check_digits(int digits) {
    if (digits < kMinDigits)
        throw PrecisionError("digit budget " + std::to_string(digits) + " below floor of " +
                             std::to_string(kMinDigits));
}

std::uint64_t add_err(std::uint64_t a, std::uint64_t b) {
    if (a > std::numeric_limits<std::uint64_t>::max() - b - 1)
        throw PrecisionError("error bound overflow");
    return a + b + 1;
}

// 2*atanh(u/v) * one, truncated; requires 0 <= u < v.
mpz_class two_atanh(const mpz_class& u, const mpz_class& v, const mpz_class& one) {
    if (u == 0)
        return 0;
    mpz_class u2 = u * u;
    mpz_class v2 = v * v;
    mpz_class power = one * u / v;
    mpz_class sum = power;
    for (unsigned long j = 3;; j += 2) {
        power = power * u2 / v2;
        if (power == 0)
            break;
        sum += power / j;
    }
    return 2 * sum;
}

struct LogConstants {
    mpz_class ln2;
    mpz_class ln10;
};

const LogConstants& log_constants(int scale) {
    static std::mutex mu;
    static std::map<int, LogConstants> cache;
    std::lock_guard lock(mu);
    auto it = cache.find(scale);
    if (it != cache.end())
        return it->second;
    mpz_class one = pow10(scale);
    LogConstants c;
    c.ln2 = two_atanh(1, 3, one);
    c.ln10 = 3 * c.ln2 + two_atanh(1, 9, one);
    return cache.emplace(scale, std::move(c)).first->second;
}

bool is_power_of_ten(std::uint64_t b, unsigned& exponent) {
    exponent = 0;
    while (b % 10 == 0) {
        b /= 10;
        ++exponent;
    }
    return b == 1 && exponent > 0;
}

// Rounds x * 10^-kGuardDigits to the nearest integer.
mpz_class drop_guard(const mpz_class& x) {
    static const mpz_class guard = pow10(kGuardDigits);
    mpz_class q = (2 * x + guard) / (2 * guard);
    return q;
}

} // namespace

mpz_class pow10(unsigned long exponent) {
    mpz_class r;
    mpz_ui_pow_ui(r.get_mpz_t(), 10, exponent);
    return r;
}

double scaled_to_double(const mpz_class& mantissa, int digits) {
    if (mantissa == 0)
        return 0.0;
    long exp2 = 0;
    double m = mpz_get_d_2exp(&exp2, mantissa.get_mpz_t());
    long double x = static_cast<long double>(exp2) * 0.693147180559945309417232121458176568L -
                    static_cast<long double>(digits) * 2.30258509299404568401799145468436421L;
    return static_cast<double>(static_cast<long double>(m) * std::exp(x));
}

FixedReal::FixedReal(mpz_class mantissa, int digits, std::uint64_t err_ulp, bool rational)
    : mantissa_(std::move(mantissa)), digits_(digits), err_ulp_(err_ulp), rational_(rational) {
    check_digits(digits);
    if (mantissa_ < 0)
        throw DomainError("FixedReal holds non-negative values only");
}

FixedReal FixedReal::from_integer(long value, int digits) {
    if (value < 0)
        throw DomainError("negative integer");
    return FixedReal(mpz_class(value) * pow10(digits), digits, 0, true);
}

FixedReal FixedReal::from_decimal(std::string_view text, int digits) {
    check_digits(digits);
    auto dot = text.find('.');
    std::string_view ip = text.substr(0, dot);
    std::string_view fp = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
    if (ip.empty() && fp.empty())
        throw DomainError("empty decimal");
    if (static_cast<int>(fp.size()) > digits)
        throw PrecisionError("decimal has more digits than the budget");
    std::string all(ip);
    all += fp;
    all.append(static_cast<std::size_t>(digits) - fp.size(), '0');
    for (char ch : all)
        if (ch < '0' || ch > '9')
            throw DomainError("malformed decimal: " + std::string(text));
    return FixedReal(mpz_class(all, 10), digits, 0, true);
}

mpz_class FixedReal::floor() const {
    mpz_class q;
    mpz_fdiv_q(q.get_mpz_t(), mantissa_.get_mpz_t(), pow10(digits_).get_mpz_t());
    return q;
}

FixedReal FixedReal::frac() const {
    mpz_class r;
    mpz_fdiv_r(r.get_mpz_t(), mantissa_.get_mpz_t(), pow10(digits_).get_mpz_t());
    return FixedReal(r, digits_, err_ulp_, rational_);
}

FixedReal FixedReal::rescaled(int digits) const {
    if (digits == digits_)
        return *this;
    if (digits > digits_) {
        mpz_class m = mantissa_ * pow10(digits - digits_);
        mpz_class err = mpz_class(static_cast<unsigned long>(err_ulp_)) * pow10(digits - digits_);
        if (!err.fits_ulong_p())
            throw PrecisionError("error bound overflow while rescaling");
        return FixedReal(m, digits, err.get_ui(), rational_);
    }
    mpz_class d = pow10(digits_ - digits);
    mpz_class m, r;
    mpz_fdiv_qr(m.get_mpz_t(), r.get_mpz_t(), mantissa_.get_mpz_t(), d.get_mpz_t());
    mpz_class err = mpz_class(static_cast<unsigned long>(err_ulp_));
    mpz_cdiv_q(err.get_mpz_t(), err.get_mpz_t(), d.get_mpz_t());
    if (r != 0)
        err += 1;
    std::uint64_t e = err.get_ui();
    return FixedReal(m, digits, e, rational_);
}

FixedReal FixedReal::add_mod1(const FixedReal& other) const {
    if (digits_ != other.digits_)
        throw DomainError("add_mod1 needs equal scales");
    mpz_class one = pow10(digits_);
    mpz_class s = mantissa_ + other.mantissa_;
    if (s >= one)
        s -= one;
    std::uint64_t e = err_ulp_ == 0 && other.err_ulp_ == 0 ? 0 : add_err(err_ulp_, other.err_ulp_);
    return FixedReal(s, digits_, e, rational_ && other.rational_);
}

double FixedReal::to_double() const {
    return scaled_to_double(mantissa_, digits_);
}

std::string FixedReal::to_string(int shown_digits) const {
    if (shown_digits > digits_)
        shown_digits = digits_;
    mpz_class t = mantissa_ / pow10(digits_ - shown_digits);
    std::string s = t.get_str();
    if (static_cast<int>(s.size()) <= shown_digits)
        s.insert(0, static_cast<std::size_t>(shown_digits) + 1 - s.size(), '0');
    if (shown_digits > 0)
        s.insert(s.size() - static_cast<std::size_t>(shown_digits), ".");
    return s;
}

std::strong_ordering FixedReal::operator<=>(const FixedReal& other) const {
    int c;
    if (digits_ == other.digits_) {
        c = cmp(mantissa_, other.mantissa_);
    } else if (digits_ < other.digits_) {
        c = cmp(mantissa_ * pow10(other.digits_ - digits_), other.mantissa_);
    } else {
        c = cmp(mantissa_, other.mantissa_ * pow10(digits_ - other.digits_));
    }
    return c < 0 ? std::strong_ordering::less
                 : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
}

bool FixedReal::operator==(const FixedReal& other) const {
    return (*this <=> other) == std::strong_ordering::equal;
}

PrecisionBudget PrecisionBudget::for_count(std::uint64_t n, int digits, int margin_digits) {
    check_digits(digits);
    if (margin_digits < 11)
        throw PrecisionError("safety margin must be below 1e-10");
    // Keeps n * (3 ulp) below 10^-margin with ten digits to spare.
    int need = margin_digits + 10 + static_cast<int>(std::ceil(std::log10(3.0 * (double)n + 1.0)));
    PrecisionBudget b;
    b.digits = std::max({digits, kMinDigits, need});
    b.max_n = n;
    b.margin_digits = margin_digits;
    return b;
}

void PrecisionBudget::validate(std::uint64_t alpha_err_ulp) const {
    check_digits(digits);
    mpz_class total = mpz_class(static_cast<unsigned long>(max_n)) *
                      (mpz_class(static_cast<unsigned long>(alpha_err_ulp)) + 1);
    if (total >= pow10(static_cast<unsigned long>(digits - 10)))
        throw PrecisionError("budget of " + std::to_string(digits) + " digits cannot certify " +
                             std::to_string(max_n) + " orbit points");
    if (digits <= margin_digits || total >= pow10(static_cast<unsigned long>(digits - margin_digits)))
        throw PrecisionError("accumulated orbit error would exceed the safety margin");
}

mpz_class PrecisionBudget::margin_ulps() const {
    return pow10(static_cast<unsigned long>(digits - margin_digits));
}

FixedReal log10_int(std::uint64_t b, int digits) {
    if (b < 2)
        throw DomainError("log10_int needs b >= 2, got " + std::to_string(b));
    check_digits(digits);
    unsigned e10 = 0;
    if (is_power_of_ten(b, e10))
        return FixedReal(mpz_class(e10) * pow10(digits), digits, 0, true);

    const int scale = digits + kGuardDigits;
    const LogConstants& c = log_constants(scale);
    mpz_class one = pow10(scale);

    int k = static_cast<int>(std::lround(std::log2(static_cast<double>(b))));
    mpz_class pk = mpz_class(1) << k;
    mpz_class bb(static_cast<unsigned long>(b));
    mpz_class lnb = k * c.ln2;
    if (bb >= pk)
        lnb += two_atanh(bb - pk, bb + pk, one);
    else
        lnb -= two_atanh(pk - bb, bb + pk, one);
    mpz_class scaled = lnb * one / c.ln10;
    return FixedReal(drop_guard(scaled), digits, 2, false);
}

std::vector<FixedReal> log10_range(std::uint64_t lo, std::uint64_t hi, int digits) {
    if (lo < 1 || hi < lo)
        throw DomainError("log10_range needs 1 <= lo <= hi");
    check_digits(digits);
    const int scale = digits + kGuardDigits;
    const LogConstants& c = log_constants(scale);
    mpz_class one = pow10(scale);

    mpz_class ln = 0;
    if (lo > 1) {
        FixedReal start = log10_int(lo, scale);
        ln = start.mantissa() * c.ln10 / one;
    }
    std::vector<FixedReal> out;
    out.reserve(hi - lo + 1);
    for (std::uint64_t k = lo;; ++k) {
        unsigned e10 = 0;
        if (k == 1)
            out.emplace_back(mpz_class(0), digits, 0, true);
        else if (is_power_of_ten(k, e10))
            out.emplace_back(mpz_class(e10) * pow10(digits), digits, 0, true);
        else
            out.emplace_back(drop_guard(ln * one / c.ln10), digits, 2, false);
        if (k == hi)
            break;
        ln += two_atanh(1, mpz_class(static_cast<unsigned long>(2 * k + 1)), one);
    }
    return out;
}

OrbitStream::OrbitStream(const FixedReal& alpha, std::uint64_t count, const PrecisionBudget& budget)
    : count_(count), digits_(budget.digits) {
    if (alpha.rational() && !alpha.exact())
        throw DomainError("rational alpha must be exact");
    if (count > budget.max_n)
        throw PrecisionError("orbit length " + std::to_string(count) + " exceeds budget max_n " +
                             std::to_string(budget.max_n));
    FixedReal a = alpha.rescaled(budget.digits).frac();
    budget.validate(a.err_ulp());
    step_ = a.mantissa();
    step_err_ = a.err_ulp();
    one_ = pow10(budget.digits);
    theta_ = 0;
}

bool OrbitStream::next() {
    if (n_ >= count_)
        return false;
    theta_ += step_;
    if (theta_ >= one_)
        theta_ -= one_;
    ++n_;
    return true;
}

FixedReal OrbitStream::point() const {
    return FixedReal(theta_, digits_, err_ulp());
}

std::vector<FixedReal> orbit_fracs(const FixedReal& alpha, std::uint64_t count,
                                   const PrecisionBudget& budget) {
    OrbitStream s(alpha, count, budget);
    std::vector<FixedReal> out;
    out.reserve(count);
    while (s.next())
        out.push_back(s.point());
    return out;
}

} // namespace bcmi
