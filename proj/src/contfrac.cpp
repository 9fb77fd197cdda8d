#include "bcmi/contfrac.hpp"

#include <cmath>
#include <string>

#include "bcmi/errors.hpp"

namespace bcmi {

std::string_view label_name(Label label) {
    switch (label) {
    case Label::Conv:
        return "CONV";
    case Label::Trans:
        return "TRANS";
    case Label::Pers:
        return "PERS";
    }
    return "?";
}

Label parse_label(std::string_view text) {
    if (text == "CONV")
        return Label::Conv;
    if (text == "TRANS")
        return Label::Trans;
    if (text == "PERS")
        return Label::Pers;
    throw DomainError("unknown label: " + std::string(text));
}

namespace {

void fill_convergents(CFExpansion& cf) {
    cf.p.clear();
    cf.q.clear();
    mpz_class p1 = 1, p2 = 0, q1 = 0, q2 = 1;
    for (const mpz_class& a : cf.quotients) {
        mpz_class p = a * p1 + p2;
        mpz_class q = a * q1 + q2;
        cf.p.push_back(p);
        cf.q.push_back(q);
        p2 = p1;
        p1 = p;
        q2 = q1;
        q1 = q;
    }
}

} // namespace

CFExpansion cf_from_quotients(std::vector<mpz_class> quotients) {
    CFExpansion cf;
    cf.quotients = std::move(quotients);
    cf.stable_prefix = cf.quotients.size();
    fill_convergents(cf);
    return cf;
}

CFExpansion cf_expand(const FixedReal& alpha, std::size_t max_terms) {
    const mpz_class one = pow10(static_cast<unsigned long>(alpha.digits()));
    const mpz_class err(static_cast<unsigned long>(alpha.err_ulp()));
    mpz_class ln = alpha.mantissa() - err, ld = one;
    mpz_class hn = alpha.mantissa() + err, hd = one;
    if (ln < 0)
        throw PrecisionError("error interval crosses zero");

    CFExpansion cf;
    mpz_class a, b, r;
    while (cf.quotients.size() < max_terms) {
        mpz_fdiv_q(a.get_mpz_t(), ln.get_mpz_t(), ld.get_mpz_t());
        mpz_fdiv_q(b.get_mpz_t(), hn.get_mpz_t(), hd.get_mpz_t());
        if (a != b)
            break;
        cf.quotients.push_back(a);
        r = ln - a * ld;
        mpz_class r2 = hn - b * hd;
        if (r == 0 || r2 == 0) {
            cf.terminated = r == 0 && r2 == 0;
            if (!cf.terminated)
                cf.quotients.pop_back();
            break;
        }
        ln = ld;
        ld = r;
        hn = hd;
        hd = r2;
        // Endpoints swap order after each reciprocal.
        std::swap(ln, hn);
        std::swap(ld, hd);
    }
    cf.stable_prefix = cf.quotients.size();
    if (cf.stable_prefix == 0)
        throw PrecisionError("no stable continued fraction quotient at " +
                             std::to_string(alpha.digits()) + " digits");
    fill_convergents(cf);
    return cf;
}

CFExpansion cf_expand_log10(std::uint64_t b, std::size_t max_terms, int digits) {
    FixedReal alpha = log10_int(b, digits);
    if (alpha.rational())
        throw DomainError("log10(" + std::to_string(b) + ") is rational");
    CFExpansion lo = cf_expand(alpha, max_terms);
    CFExpansion hi = cf_expand(log10_int(b, 2 * digits), max_terms);
    std::size_t common = 0;
    while (common < lo.size() && common < hi.size() && lo.quotients[common] == hi.quotients[common])
        ++common;
    if (common == 0)
        throw PrecisionError("precision doubling changed the first quotient");
    lo.quotients.resize(common);
    lo.stable_prefix = common;
    fill_convergents(lo);
    return lo;
}

std::vector<Convergent> convergents_upto(const CFExpansion& cf, std::uint64_t bound) {
    std::vector<Convergent> out;
    const mpz_class nb(static_cast<unsigned long>(bound));
    for (std::size_t k = 0; k < cf.size(); ++k) {
        if (cf.q[k] > nb)
            return out;
        if (k + 1 >= cf.stable_prefix) {
            if (cf.terminated && k + 1 == cf.size())
                return out;
            throw PrecisionError("quotient a_" + std::to_string(k + 1) + " beyond the stable prefix");
        }
        out.push_back({k, cf.p[k], cf.q[k], cf.quotients[k + 1]});
    }
    return out;
}

ResonanceReport resonance(const CFExpansion& cf, std::uint64_t n, LogBase base) {
    if (n < 2)
        throw DomainError("resonance needs N >= 2");
    ResonanceReport r;
    r.n = n;
    std::vector<Convergent> cs = convergents_upto(cf, n);
    if (cf.size() < 2 || cf.q[1] > mpz_class(static_cast<unsigned long>(n)) || cs.empty()) {
        r.degenerate = true;
        r.label = Label::Trans;
        return r;
    }
    for (const Convergent& c : cs) {
        mpz_class v = c.next_quotient * c.q;
        if (v > r.q_star) {
            r.q_star = v;
            r.witness_k = c.k;
        }
    }
    const Convergent& last = cs.back();
    r.k_of_n = last.k;
    r.ratio = mpq_class(last.next_quotient * last.q, mpz_class(static_cast<unsigned long>(n)));
    r.ratio.canonicalize();
    r.ratio_value = r.ratio.get_d();

    const long double nn = static_cast<long double>(n);
    const long double lg = base == LogBase::Natural ? std::log(nn) : std::log10(nn);
    const long double qs = static_cast<long double>(r.q_star.get_d());
    if (qs < nn / lg)
        r.label = Label::Conv;
    else if (qs > nn * lg)
        r.label = Label::Pers;
    else
        r.label = Label::Trans;
    return r;
}

mpz_class max_partial_quotient(const CFExpansion& cf, std::size_t count) {
    mpz_class m = 0;
    for (std::size_t k = 1; k < count && k < cf.size(); ++k)
        if (cf.quotients[k] > m)
            m = cf.quotients[k];
    return m;
}

} // namespace bcmi
