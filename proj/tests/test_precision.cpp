#include "doctest.h"

#include <cmath>
#include <random>

#include <mpfr.h>

#include "bcmi/errors.hpp"
#include "bcmi/precision.hpp"

using namespace bcmi;

namespace {

// RAII wrapper for an MPFR value used as an independent high-precision oracle.
struct Big {
    mpfr_t v;
    explicit Big(mpfr_prec_t bits = 2000) { mpfr_init2(v, bits); }
    ~Big() { mpfr_clear(v); }
    Big(const Big&) = delete;
    Big& operator=(const Big&) = delete;
};

void to_mpfr(Big& out, const FixedReal& x) {
    mpfr_set_z(out.v, x.mantissa().get_mpz_t(), MPFR_RNDN);
    mpfr_div_z(out.v, out.v, pow10(static_cast<unsigned long>(x.digits())).get_mpz_t(), MPFR_RNDN);
}

// log10 of |a - b| where |a - b| may underflow a double.
long log10_abs_diff(const Big& a, const Big& b) {
    Big d;
    mpfr_sub(d.v, a.v, b.v, MPFR_RNDN);
    if (mpfr_zero_p(d.v))
        return -100000;
    mpfr_abs(d.v, d.v, MPFR_RNDN);
    mpfr_log10(d.v, d.v, MPFR_RNDN);
    return static_cast<long>(std::floor(mpfr_get_d(d.v, MPFR_RNDN)));
}

} // namespace

TEST_CASE("log10 of a power of ten is exact and rational") {
    FixedReal v = log10_int(10, 100);
    CHECK(v.rational());
    CHECK(v.exact());
    CHECK(v == FixedReal::from_integer(1, 100));
    FixedReal w = log10_int(1000, 60);
    CHECK(w == FixedReal::from_integer(3, 60));
}

TEST_CASE("log10 7 leading digits") {
    FixedReal v = log10_int(7, 100);
    CHECK_FALSE(v.rational());
    CHECK(v.err_ulp() <= 2);
    CHECK(v.to_string(10) == "0.8450980400");
}

TEST_CASE("log10 round trip through exponentiation") {
    std::mt19937_64 rng(12345);
    std::uniform_int_distribution<std::uint64_t> pick(2, 1000000);
    for (int i = 0; i < 40; ++i) {
        std::uint64_t b = i == 0 ? 2 : pick(rng);
        FixedReal v = log10_int(b, 100);
        Big x, back, target;
        to_mpfr(x, v);
        mpfr_exp10(back.v, x.v, MPFR_RNDN);
        mpfr_set_ui(target.v, static_cast<unsigned long>(b), MPFR_RNDN);
        CHECK(log10_abs_diff(back, target) < -95 + static_cast<long>(std::log10(double(b))));
    }
}

TEST_CASE("log10 agrees with an MPFR oracle within the stated error") {
    for (std::uint64_t b : {2ull, 3ull, 7ull, 999ull, 1001ull, 123456789ull}) {
        for (int digits : {50, 200, 500}) {
            FixedReal v = log10_int(b, digits);
            Big x, ref;
            to_mpfr(x, v);
            mpfr_set_ui(ref.v, static_cast<unsigned long>(b), MPFR_RNDN);
            mpfr_log10(ref.v, ref.v, MPFR_RNDN);
            CHECK(log10_abs_diff(x, ref) < -digits + 1);
        }
    }
}

TEST_CASE("log10_range matches log10_int") {
    std::vector<FixedReal> r = log10_range(95, 1005, 120);
    REQUIRE(r.size() == 911);
    for (std::uint64_t k : {95ull, 100ull, 101ull, 343ull, 999ull, 1000ull, 1005ull}) {
        const FixedReal& a = r[k - 95];
        FixedReal b = log10_int(k, 120);
        mpz_class d = a.mantissa() - b.mantissa();
        CHECK(abs(d) <= 4);
    }
    CHECK(r[1000 - 95].exact());
    CHECK(r[100 - 95].exact());
}

TEST_CASE("domain and budget errors") {
    CHECK_THROWS_AS(log10_int(1, 100), DomainError);
    CHECK_THROWS_AS(log10_int(0, 100), DomainError);
    CHECK_THROWS_AS(log10_int(7, 49), PrecisionError);
    CHECK_THROWS_AS(FixedReal(mpz_class(1), 10), PrecisionError);
}

TEST_CASE("rational rotation orbit") {
    FixedReal half = FixedReal::from_decimal("0.5", 50);
    PrecisionBudget b = PrecisionBudget::for_count(4, 50);
    std::vector<FixedReal> pts = orbit_fracs(half, 4, b);
    REQUIRE(pts.size() == 4);
    CHECK(pts[0] == half);
    CHECK(pts[1].mantissa() == 0);
    CHECK(pts[2] == half);
    CHECK(pts[3].mantissa() == 0);
}

TEST_CASE("orbit of log10 2 at n = 10 is log10 1.024") {
    PrecisionBudget b = PrecisionBudget::for_count(10, 100);
    std::vector<FixedReal> pts = orbit_fracs(log10_int(2, b.digits), 10, b);
    Big got, ref;
    to_mpfr(got, pts.back());
    mpfr_set_ui(ref.v, 1024, MPFR_RNDN);
    mpfr_div_ui(ref.v, ref.v, 1000, MPFR_RNDN);
    mpfr_log10(ref.v, ref.v, MPFR_RNDN);
    CHECK(log10_abs_diff(got, ref) < -95);
    CHECK(pts.back().to_string(6) == "0.010299");
}

TEST_CASE("orbit of log10 7 nearly closes at n = 510") {
    PrecisionBudget b = PrecisionBudget::for_count(510);
    OrbitStream s(log10_int(7, b.digits), 510, b);
    while (s.next()) {
    }
    double t = s.approx();
    double dist = std::min(t, 1.0 - t);
    CHECK(dist < 8e-7);
}

TEST_CASE("orbit error certificate and determinism") {
    PrecisionBudget b = PrecisionBudget::for_count(20000);
    FixedReal alpha = log10_int(3, b.digits);
    OrbitStream s1(alpha, 20000, b), s2(alpha, 20000, b);
    while (s1.next()) {
        REQUIRE(s2.next());
        REQUIRE(s1.mantissa() == s2.mantissa());
    }
    CHECK_FALSE(s2.next());
    mpz_class accumulated(static_cast<unsigned long>(s1.err_ulp()));
    CHECK(accumulated < b.margin_ulps());
}

TEST_CASE("budget overflow is reported") {
    PrecisionBudget b = PrecisionBudget::for_count(100);
    CHECK_THROWS_AS(OrbitStream(log10_int(3, b.digits), 101, b), PrecisionError);
    PrecisionBudget tight;
    tight.digits = 50;
    tight.max_n = 1000000000000000000ull;
    CHECK_NOTHROW(tight.validate(1000000));
    CHECK_THROWS_AS(tight.validate(10000000000000ull), PrecisionError);
}

TEST_CASE("budget digits grow with N") {
    CHECK(PrecisionBudget::for_count(10000).digits == 500);
    CHECK(PrecisionBudget::for_count(1000000, 50).digits >= 20 + 6 + 10);
    PrecisionBudget big = PrecisionBudget::for_count(1000000000000ull, 50);
    CHECK_NOTHROW(big.validate(2));
}

TEST_CASE("add_mod1 error accounting") {
    FixedReal a(mpz_class("7") * pow10(49), 50, 3);
    FixedReal b(mpz_class("6") * pow10(49), 50, 4);
    FixedReal s = a.add_mod1(b);
    CHECK(s.mantissa() == mpz_class(3) * pow10(49));
    CHECK(s.err_ulp() <= 3 + 4 + 1);
    FixedReal e = FixedReal::from_decimal("0.25", 50).add_mod1(FixedReal::from_decimal("0.5", 50));
    CHECK(e.exact());
}

TEST_CASE("rescaling") {
    FixedReal v = log10_int(7, 200);
    FixedReal w = v.rescaled(100);
    FixedReal ref = log10_int(7, 100);
    CHECK(abs(w.mantissa() - ref.mantissa()) <= 3);
    CHECK(w.err_ulp() <= 2);
    CHECK(FixedReal::from_decimal("0.5", 50).rescaled(80).exact());
}
