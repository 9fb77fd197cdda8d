#include "bcmi/digits.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "bcmi/errors.hpp"

namespace bcmi {

TripleCounts& TripleCounts::operator+=(const TripleCounts& other) {
    for (int i = 0; i < kCells; ++i)
        counts[i] += other.counts[i];
    total += other.total;
    return *this;
}

JointDist JointDist::from_counts(const TripleCounts& c) {
    if (c.total == 0)
        throw InsufficientDataError("no samples to normalize");
    JointDist d;
    const double n = static_cast<double>(c.total);
    for (int i = 0; i < kCells; ++i)
        d.p[i] = static_cast<double>(c.counts[i]) / n;
    return d;
}

void JointDist::validate() const {
    double s = 0.0;
    for (double v : p) {
        if (!(v >= 0.0))
            throw DomainError("distribution has a negative or NaN entry");
        s += v;
    }
    if (std::fabs(s - 1.0) > 1e-12)
        throw DomainError("distribution sums to " + std::to_string(s));
}

JointDist benford_joint() {
    JointDist d;
    double partial = 0.0;
    for (int i = 0; i + 1 < kCells; ++i) {
        d.p[i] = std::log1p(1.0 / triple_of_cell(i)) / std::log(10.0);
        partial += d.p[i];
    }
    d.p[kCells - 1] = 1.0 - partial;
    return d;
}

std::array<long double, kCells> benford_joint_extended() {
    std::array<long double, kCells> p{};
    long double partial = 0.0L;
    const long double ln10 = std::log(10.0L);
    for (int i = 0; i + 1 < kCells; ++i) {
        p[i] = std::log1p(1.0L / triple_of_cell(i)) / ln10;
        partial += p[i];
    }
    p[kCells - 1] = 1.0L - partial;
    return p;
}

CylinderTable::CylinderTable(int digits) : digits_(digits), one_(pow10(digits)) {
    std::vector<FixedReal> logs = log10_range(100, 1000, digits);
    bounds_.reserve(logs.size());
    const mpz_class two = 2 * one_;
    for (const FixedReal& v : logs)
        bounds_.push_back(v.mantissa() - two);
}

const CylinderTable& CylinderTable::get(int digits) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<CylinderTable>> cache;
    std::lock_guard lock(mu);
    auto& slot = cache[digits];
    if (!slot)
        slot = std::make_unique<CylinderTable>(digits);
    return *slot;
}

double CylinderTable::width(int delta) const {
    return std::log1p(1.0 / delta) / std::log(10.0);
}

int CylinderTable::locate(const mpz_class& theta, std::uint64_t err_ulp, const mpz_class& margin) const {
    if (theta < 0 || theta >= one_)
        throw DomainError("orbit point outside [0,1)");
    double t = scaled_to_double(theta, digits_);
    int delta = static_cast<int>(std::floor(std::pow(10.0, t + 2.0)));
    delta = std::clamp(delta, 100, 999);
    while (delta > 100 && theta < boundary(delta))
        --delta;
    while (delta < 999 && theta >= boundary(delta + 1))
        ++delta;

    mpz_class gap;
    if (err_ulp != 0 || boundary_err(delta) != 0) {
        gap = theta - boundary(delta);
        if (gap < margin)
            throw AmbiguityError("orbit point within safety margin of lower boundary of " +
                                     std::to_string(delta),
                                 delta);
    }
    if (err_ulp != 0 || boundary_err(delta + 1) != 0) {
        gap = boundary(delta + 1) - theta;
        if (gap < margin)
            throw AmbiguityError("orbit point within safety margin of upper boundary of " +
                                     std::to_string(delta),
                                 delta);
    }
    return delta;
}

int triple_of_frac(const FixedReal& theta, const CylinderTable& table, const mpz_class& margin_ulps) {
    FixedReal t = theta.digits() == table.digits() ? theta : theta.rescaled(table.digits());
    return table.locate(t.mantissa(), t.err_ulp(), margin_ulps);
}

int triple_of_frac(const FixedReal& theta, const CylinderTable& table, int margin_digits) {
    return triple_of_frac(theta, table, pow10(static_cast<unsigned long>(table.digits() - margin_digits)));
}

int leading_triple(const mpz_class& value) {
    if (value <= 0)
        throw DomainError("leading_triple needs a positive integer");
    long n = static_cast<long>(mpz_sizeinbase(value.get_mpz_t(), 10));
    if (n <= 3) {
        mpz_class v = value * pow10(static_cast<unsigned long>(3 - n));
        if (v >= 1000)
            v /= 10;
        else if (v < 100)
            v *= 10;
        return static_cast<int>(v.get_si());
    }
    mpz_class v = value / pow10(static_cast<unsigned long>(n - 3));
    if (v < 100)
        v = value / pow10(static_cast<unsigned long>(n - 4));
    return static_cast<int>(v.get_si());
}

StreamStats stream_geometric(std::uint64_t b, std::uint64_t count, const TripleSink& sink, int digits,
                             int margin_digits) {
    PrecisionBudget budget = PrecisionBudget::for_count(count, digits, margin_digits);
    FixedReal alpha = log10_int(b, budget.digits);
    if (alpha.rational())
        throw DomainError("log10(" + std::to_string(b) + ") is rational");
    const CylinderTable& table = CylinderTable::get(budget.digits);
    const mpz_class margin = budget.margin_ulps();

    StreamStats stats;
    stats.digits = budget.digits;
    OrbitStream orbit(alpha, count, budget);
    mpz_class power;
    while (orbit.next()) {
        int delta;
        try {
            delta = table.locate(orbit.mantissa(), orbit.err_ulp(), margin);
        } catch (const AmbiguityError&) {
            mpz_ui_pow_ui(power.get_mpz_t(), b, orbit.index());
            delta = leading_triple(power);
            ++stats.exact_resolutions;
        }
        sink(orbit.index(), delta, orbit.approx());
    }
    return stats;
}

TripleCounts count_triples_geometric(std::uint64_t b, std::uint64_t count, int digits) {
    TripleCounts c;
    stream_geometric(b, count, [&](std::uint64_t, int delta, double) { c.add(delta); }, digits);
    return c;
}

SignificandTracker::SignificandTracker(int guard_digits)
    : sig_(pow10(static_cast<unsigned long>(guard_digits))), guard_(guard_digits) {
    if (guard_digits < 5)
        throw PrecisionError("tracker needs at least 5 guard digits");
    lo_ = pow10(static_cast<unsigned long>(guard_digits));
    hi_ = 10 * lo_;
    unit_ = lo_ / 100;
}

SignificandTracker SignificandTracker::from_integer(unsigned long value, int guard_digits) {
    if (value == 0)
        throw DomainError("zero has no significand");
    SignificandTracker t(guard_digits);
    t.sig_ = value;
    t.sig_ *= t.lo_;
    t.normalize();
    return t;
}

void SignificandTracker::normalize() {
    if (sig_ < hi_)
        return;
    long k = static_cast<long>(mpz_sizeinbase(sig_.get_mpz_t(), 10)) - (guard_ + 1);
    if (k < 1)
        k = 1;
    mpz_class p = pow10(static_cast<unsigned long>(k));
    if (sig_ < p * lo_) {
        --k;
        p /= 10;
    }
    mpz_class q, r;
    mpz_fdiv_qr(q.get_mpz_t(), r.get_mpz_t(), sig_.get_mpz_t(), p.get_mpz_t());
    mpz_class e(static_cast<unsigned long>(err_));
    mpz_cdiv_q(e.get_mpz_t(), e.get_mpz_t(), p.get_mpz_t());
    if (r != 0)
        e += 1;
    sig_ = q;
    err_ = e.get_ui();
    exp_ += k;
    ++renorms_;
}

void SignificandTracker::multiply(unsigned long factor) {
    if (factor == 0)
        throw DomainError("multiply by zero");
    sig_ *= factor;
    mpz_class e(static_cast<unsigned long>(err_));
    e *= factor;
    if (!e.fits_ulong_p())
        throw PrecisionError("tracker error bound overflow");
    err_ = e.get_ui();
    normalize();
}

SignificandTracker SignificandTracker::add(const SignificandTracker& a, const SignificandTracker& b) {
    if (a.guard_ != b.guard_)
        throw DomainError("trackers with different guard digits");
    const SignificandTracker& big = a.exp_ >= b.exp_ ? a : b;
    const SignificandTracker& small = a.exp_ >= b.exp_ ? b : a;
    SignificandTracker out = big;
    long shift = big.exp_ - small.exp_;
    if (shift > big.guard_ + 2) {
        out.err_ += small.err_ == 0 && small.sig_ == 0 ? 0 : 2;
        return out;
    }
    mpz_class p = pow10(static_cast<unsigned long>(shift));
    mpz_class q, r;
    mpz_fdiv_qr(q.get_mpz_t(), r.get_mpz_t(), small.sig_.get_mpz_t(), p.get_mpz_t());
    mpz_class e(static_cast<unsigned long>(small.err_));
    mpz_cdiv_q(e.get_mpz_t(), e.get_mpz_t(), p.get_mpz_t());
    if (r != 0)
        e += 1;
    out.sig_ += q;
    out.err_ += e.get_ui();
    out.normalize();
    return out;
}

int SignificandTracker::triple() const {
    mpz_class t = sig_ / unit_;
    if (err_ != 0) {
        mpz_class lo = (sig_ - err_) / unit_;
        mpz_class hi = (sig_ + err_) / unit_;
        if (lo != t || hi != t)
            throw AmbiguityError("significand error interval touches a triple boundary",
                                 static_cast<int>(t.get_si()));
    }
    return static_cast<int>(t.get_si());
}

StreamStats stream_recurrence(Recurrence kind, std::uint64_t count, const TripleSink& sink,
                              int guard_digits) {
    StreamStats stats;
    std::vector<int> triples;
    for (int guard = guard_digits;; guard *= 2) {
        triples.clear();
        triples.reserve(count);
        try {
            if (kind == Recurrence::Factorial) {
                SignificandTracker t = SignificandTracker::from_integer(1, guard);
                for (std::uint64_t n = 1; n <= count; ++n) {
                    if (n > 1)
                        t.multiply(static_cast<unsigned long>(n));
                    triples.push_back(t.triple());
                }
            } else {
                SignificandTracker prev = SignificandTracker::from_integer(1, guard);
                SignificandTracker cur = prev;
                for (std::uint64_t n = 1; n <= count; ++n) {
                    if (n > 2) {
                        SignificandTracker next = SignificandTracker::add(prev, cur);
                        prev = std::move(cur);
                        cur = std::move(next);
                    }
                    triples.push_back(cur.triple());
                }
            }
        } catch (const AmbiguityError&) {
            if (guard > 1 << 16)
                throw;
            ++stats.restarts;
            continue;
        }
        stats.guard_digits = guard;
        break;
    }
    for (std::uint64_t n = 1; n <= count; ++n)
        sink(n, triples[n - 1], 0.0);
    return stats;
}

TripleCounts count_triples_recurrence(Recurrence kind, std::uint64_t count, int guard_digits) {
    TripleCounts c;
    stream_recurrence(kind, count, [&](std::uint64_t, int delta, double) { c.add(delta); }, guard_digits);
    return c;
}

} // namespace bcmi
