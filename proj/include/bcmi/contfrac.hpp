#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include <gmpxx.h>

#include "bcmi/precision.hpp"

namespace bcmi {

enum class Label { Conv, Trans, Pers };

std::string_view label_name(Label label);
Label parse_label(std::string_view text);

enum class LogBase { Natural, Decimal };

struct CFExpansion {
    std::vector<mpz_class> quotients; ///< a_0 .. a_K
    std::vector<mpz_class> p;         ///< p_0 .. p_K
    std::vector<mpz_class> q;         ///< q_0 .. q_K
    /// Number of leading quotients certified stable.
    std::size_t stable_prefix = 0;
    /// True when the expansion of an exact rational ran to completion.
    bool terminated = false;

    std::size_t size() const noexcept { return quotients.size(); }
};

/// Builds convergents for a given quotient list (all treated as stable).
CFExpansion cf_from_quotients(std::vector<mpz_class> quotients);

/// Expands alpha's whole error interval; a quotient is kept only when both
/// interval endpoints agree on it. Returns at most max_terms quotients.
CFExpansion cf_expand(const FixedReal& alpha, std::size_t max_terms);

/// Expansion of log10(b) computed at `digits` and at 2*digits; the stable
/// prefix is the common prefix of both certified expansions.
CFExpansion cf_expand_log10(std::uint64_t b, std::size_t max_terms, int digits = kDefaultDigits);

struct Convergent {
    std::size_t k;
    mpz_class p;
    mpz_class q;
    mpz_class next_quotient; ///< a_{k+1}
};

/// Convergents with q_k <= bound, each paired with a_{k+1}.
std::vector<Convergent> convergents_upto(const CFExpansion& cf, std::uint64_t bound);

struct ResonanceReport {
    std::uint64_t n = 0;
    std::size_t k_of_n = 0;
    mpq_class ratio;          ///< a_{k(N)+1} q_{k(N)} / N
    double ratio_value = 0.0;
    mpz_class q_star;         ///< max over q_k <= N of a_{k+1} q_k
    std::size_t witness_k = 0;
    Label label = Label::Trans;
    bool degenerate = false;  ///< q_1 > N: k(N) undefined
};

/// CONV when Q* < N/log N, PERS when Q* > N log N, TRANS otherwise (ties included).
ResonanceReport resonance(const CFExpansion& cf, std::uint64_t n, LogBase base = LogBase::Natural);

/// Largest a_k for 1 <= k < count, for the prefix of `count` quotients.
mpz_class max_partial_quotient(const CFExpansion& cf, std::size_t count);

} // namespace bcmi
