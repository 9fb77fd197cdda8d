#include "bcmi/commands.hpp"

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "bcmi/contfrac.hpp"
#include "bcmi/errors.hpp"
#include "bcmi/fitting.hpp"

namespace bcmi {

namespace {

std::string strf(const char* format, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, format);
    std::vsnprintf(buf, sizeof buf, format, ap);
    va_end(ap);
    return buf;
}

std::string grouped(std::uint64_t v) {
    std::string s = std::to_string(v);
    for (int i = static_cast<int>(s.size()) - 3; i > 0; i -= 3)
        s.insert(static_cast<std::size_t>(i), ",");
    return s;
}

std::string cf_text(const std::vector<std::uint64_t>& cf) {
    std::string s = "[";
    for (std::size_t i = 0; i < cf.size(); ++i) {
        s += std::to_string(cf[i]);
        s += i == 0 ? "; " : (i + 1 < cf.size() ? ", " : "");
    }
    return s + "]";
}

struct ExpectedRow {
    const char* name;
    double values[3];
};

constexpr std::uint64_t kVerifyN[3] = {1000, 5000, 10000};

constexpr ExpectedRow kExpectedCmi[] = {
    {"2^n", {0.369142, 0.018635, 0.005599}},
    {"3^n", {0.696186, 0.025245, 0.009748}},
    {"5^n", {0.379500, 0.018412, 0.005698}},
    {"7^n", {0.692305, 0.685589, 0.682545}},
    {"Fibonacci", {0.367187, 0.014169, 0.004167}},
    {"n!", {0.578676, 0.115195, 0.055104}},
};

struct ExpectedCf {
    std::uint64_t base;
    std::vector<std::uint64_t> prefix;
    std::uint64_t max_pq;
};

const std::vector<ExpectedCf>& expected_cf() {
    static const std::vector<ExpectedCf> rows = {
        {2, {0, 3, 3, 9, 2, 2, 4, 6}, 18},      {3, {0, 2, 10, 2, 2, 1, 13, 1}, 18},
        {4, {0, 1, 1, 1, 1, 18, 1, 4}, 18},     {5, {0, 1, 2, 3, 9, 2, 2, 4}, 18},
        {6, {0, 1, 3, 1, 1, 32, 1, 1}, 278},    {7, {0, 1, 5, 2, 5, 6, 1, 4813}, 4813},
        {8, {0, 1, 9, 3, 7, 2, 1, 19}, 19},     {9, {0, 1, 20, 1, 5, 1, 6, 2}, 20},
    };
    return rows;
}

constexpr std::uint64_t kExpectedQStar7 = 2454630;

} // namespace

int default_precision() {
    const char* env = std::getenv("BENFORD_PRECISION");
    if (!env || !*env)
        return kDefaultDigits;
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < kMinDigits || v > 100000)
        throw DomainError(std::string("BENFORD_PRECISION must be an integer >= ") + std::to_string(kMinDigits));
    return static_cast<int>(v);
}

int guarded(const std::function<int()>& body, std::ostream& err) {
    try {
        return body();
    } catch (const PrecisionError& e) {
        err << "precision error: " << e.what() << '\n';
        return kExitPrecision;
    } catch (const DomainError& e) {
        err << "domain error: " << e.what() << '\n';
        return kExitDomain;
    } catch (const CorruptOutputError& e) {
        err << "corrupt output: " << e.what() << '\n';
        return kExitDomain;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitOther;
    }
}

int cmd_analyze(const AnalyzeArgs& args, std::ostream& out) {
    SurveyRecord r = analyze_base(args.base, args.grid, args.digits, args.classify);
    FixedReal alpha = log10_int(args.base, r.digits);
    if (args.json) {
        nlohmann::json j = to_json(r);
        j["alpha"] = alpha.to_string(40);
        out << j.dump(2) << '\n';
        return kExitOk;
    }
    out << strf("base          %llu\n", static_cast<unsigned long long>(r.base));
    out << "alpha         " << alpha.to_string(40) << '\n';
    out << "cf            " << cf_text(r.cf) << '\n';
    out << "Q*            " << grouped(r.q_star) << '\n';
    out << "label         " << label_name(r.label) << "  (resonance rule: " << label_name(r.resonance_label)
        << ")\n";
    if (std::isfinite(r.beta))
        out << strf("fit           c = %.6g  beta = %.4f  R2 = %.4f  points = %d\n", r.c, r.beta, r.r2,
                    r.n_points_used);
    else
        out << "fit           unavailable (fewer than 3 points above I_inf)\n";
    out << strf("quad ratio    %.4g\nlinear ratio  %.4g\nD*_N          %.6g\n", r.quad_ratio, r.linear_ratio,
                r.dstar);
    out << strf("%10s  %14s  %14s\n", "N", "I_N (bits)", "R(b,N)");
    for (std::size_t i = 0; i < r.grid.size(); ++i)
        out << strf("%10llu  %14.6f  %14.6g\n", static_cast<unsigned long long>(r.grid[i]), r.cmi[i], r.ratio[i]);
    return kExitOk;
}

bool VerifyReport::all_pass() const {
    for (const VerifyCell& c : cells)
        if (!c.pass)
            return false;
    for (const VerifyQuotients& q : quotients)
        if (!q.pass)
            return false;
    return q_star_pass;
}

VerifyReport run_verify(const VerifyArgs& args) {
    VerifyReport rep;
    auto record = [&](const ExpectedRow& row, const std::vector<TripleCounts>& snaps) {
        for (int i = 0; i < 3; ++i) {
            TripleCounts c = snaps[static_cast<std::size_t>(i)];
            if (args.tamper)
                args.tamper(row.name, kVerifyN[i], c);
            double v = cmi(JointDist::from_counts(c));
            rep.cells.push_back({row.name, kVerifyN[i], row.values[i], v,
                                 std::fabs(v - row.values[i]) <= args.tolerance});
        }
    };
    auto snapshotter = [](std::vector<TripleCounts>& snaps, TripleCounts& acc) {
        return [&snaps, &acc](std::uint64_t n, int delta, double) {
            acc.add(delta);
            for (std::uint64_t target : kVerifyN)
                if (n == target)
                    snaps.push_back(acc);
        };
    };

    const std::uint64_t bases[4] = {2, 3, 5, 7};
    std::vector<std::vector<TripleCounts>> snaps(6);
    parallel_for(6, default_jobs(), [&](std::size_t i) {
        TripleCounts acc;
        if (i < 4)
            stream_geometric(bases[i], kVerifyN[2], snapshotter(snaps[i], acc), args.digits);
        else
            stream_recurrence(i == 4 ? Recurrence::Fibonacci : Recurrence::Factorial, kVerifyN[2],
                              snapshotter(snaps[i], acc));
    });
    for (std::size_t i = 0; i < 6; ++i)
        record(kExpectedCmi[i], snaps[i]);

    for (const ExpectedCf& e : expected_cf()) {
        CFExpansion cf = cf_expand_log10(e.base, kCfTerms, args.digits);
        VerifyQuotients q;
        q.base = e.base;
        q.expected = e.prefix;
        for (std::size_t k = 0; k < e.prefix.size() && k < cf.size(); ++k)
            q.computed.push_back(cf.quotients[k].get_ui());
        q.expected_max = e.max_pq;
        q.computed_max = max_partial_quotient(cf, kCfTerms).get_ui();
        q.pass = q.computed == q.expected && q.computed_max == q.expected_max;
        rep.quotients.push_back(q);
    }
    CFExpansion cf7 = cf_expand_log10(7, 48, args.digits);
    rep.q_star_7 = resonance(cf7, 10000).q_star.get_ui();
    rep.q_star_pass = rep.q_star_7 == kExpectedQStar7;
    return rep;
}

int cmd_verify(const VerifyArgs& args, std::ostream& out) {
    VerifyReport rep = run_verify(args);
    int failures = 0;
    for (const VerifyCell& c : rep.cells) {
        out << strf("%s  cmi %-9s N=%-6llu expected %.6f  got %.9f\n", c.pass ? "PASS" : "FAIL", c.sequence.c_str(),
                    static_cast<unsigned long long>(c.n), c.expected, c.computed);
        failures += !c.pass;
    }
    for (const VerifyQuotients& q : rep.quotients) {
        out << (q.pass ? "PASS" : "FAIL") << "  cf  b=" << q.base << " prefix " << cf_text(q.computed)
            << " max PQ " << q.computed_max << " (expected " << cf_text(q.expected) << ", " << q.expected_max
            << ")\n";
        failures += !q.pass;
    }
    out << (rep.q_star_pass ? "PASS" : "FAIL") << "  Q*(7) at N=10000 = " << grouped(rep.q_star_7)
        << " (expected " << grouped(kExpectedQStar7) << ")\n";
    failures += !rep.q_star_pass;
    out << (failures ? strf("%d check(s) failed\n", failures) : std::string("all checks passed\n"));
    return failures ? kExitVerifyFailed : kExitOk;
}

namespace {

void print_summary(const SurveySummary& s, std::ostream& out) {
    out << strf("%-6s %6s %8s %10s %8s %12s\n", "label", "count", "pct", "beta_mean", "beta_sd", "mean_Q*");
    for (Label l : {Label::Conv, Label::Trans, Label::Pers}) {
        int c = s.counts.at(l);
        auto [m, sd] = s.beta_by_label.at(l);
        out << strf("%-6s %6d %7.2f%% %10.4f %8.4f %12.1f\n", std::string(label_name(l)).c_str(), c,
                    s.total ? 100.0 * c / s.total : 0.0, m, sd, s.q_star_mean.at(l));
    }
    out << strf("total %d  CONV beta mean %.4f sd %.4f median %.4f  persistence rate %.4f  "
                "resonance-rule disagreements %d\n",
                s.total, s.beta_mean, s.beta_sd, s.beta_median, s.persistence_rate, s.disagreements);
}

} // namespace

int cmd_survey(const SurveyArgs& args, std::ostream& out) {
    SurveyOptions opts;
    opts.bases = survey_bases(args.lo, args.hi);
    opts.grid = args.extended ? kExtendedGrid : kBaselineGrid;
    opts.jobs = args.jobs;
    opts.digits = args.digits;
    opts.classify = args.classify;
    opts.out = args.out;
    opts.resume = args.resume;
    opts.force = args.force;

    if (args.extended && !args.from.empty()) {
        std::vector<SurveyRecord> baseline = load_records(args.from);
        std::erase_if(baseline, [&](const SurveyRecord& r) { return r.base < args.lo || r.base > args.hi; });
        Resolution res = resolve_transitional(baseline, opts);
        out << "flagged " << res.flagged.size() << " bases for the extended grid\n";
        int stay = 0;
        for (const Move& m : res.moves) {
            if (m.from == m.to) {
                ++stay;
                continue;
            }
            out << strf("  %4llu  %s -> %s\n", static_cast<unsigned long long>(m.base),
                        std::string(label_name(m.from)).c_str(), std::string(label_name(m.to)).c_str());
        }
        out << stay << " flagged bases kept their label\n";
        out << "before:\n";
        print_summary(res.before, out);
        out << "after:\n";
        print_summary(res.after, out);
        if (!args.out.empty())
            write_summary_csv(args.out.string() + ".summary.csv", res.after);
        return kExitOk;
    }

    SurveyResult r = run_survey(opts);
    if (r.skipped)
        out << "resumed: " << r.skipped << " bases already complete\n";
    print_summary(r.summary, out);
    return kExitOk;
}

int cmd_hessian(const HessianArgs& args, std::ostream& out) {
    const JointDist p = benford_joint();
    Gradient g = cmi_gradient(p);
    HessianSpectrum s = cmi_hessian_spectrum(p, args.eps_eig);
    MarkovProjection mk = markov_projection(p);
    MarkovProjection l2 = markov_l2_nearest(p);
    const double iinf = i_infinity();
    if (args.json) {
        nlohmann::json j;
        j["i_infinity"] = iinf;
        j["gradient"] = {{"mean", g.mean}, {"sd", g.sd}, {"projected_norm", g.projected_norm}};
        j["tangent"] = {{"op_norm", s.op_norm},   {"lambda_max", s.lambda_max}, {"lambda_min", s.lambda_min},
                        {"n_pos", s.n_pos},       {"n_neg", s.n_neg},           {"n_null", s.n_null},
                        {"eps_eig", s.eps_eig}};
        j["full_space"] = {{"op_norm", s.full_op_norm},
                           {"lambda_max", s.full_lambda_max},
                           {"lambda_min", s.full_lambda_min}};
        j["markov"] = {{"multiplicative_distance", mk.distance}, {"l2_nearest_distance", l2.distance}};
        out << j.dump(2) << '\n';
        return kExitOk;
    }
    out << strf("I_inf                     %.6e bits\n", iinf);
    out << strf("gradient mean / sd        %.4e / %.4e\n", g.mean, g.sd);
    out << strf("projected gradient norm   %.5f\n", g.projected_norm);
    out << strf("tangent op norm           %.4f\n", s.op_norm);
    out << strf("lambda_max / lambda_min   %.4f / %.5f\n", s.lambda_max, s.lambda_min);
    out << strf("C_H = op_norm / 2         %.2f\n", s.op_norm / 2);
    out << strf("n_pos / n_neg / n_null    %d / %d / %d  (|lambda| <= %.3e counts as null)\n", s.n_pos, s.n_neg,
                s.n_null, s.eps_eig);
    out << strf("full-space op norm        %.4f  (lambda_min %.5f)\n", s.full_op_norm, s.full_lambda_min);
    out << strf("Markov distance           %.5e  (L2-nearest %.5e)\n", mk.distance, l2.distance);
    return kExitOk;
}

std::vector<Sample> read_samples_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw DomainError("cannot read " + path.string());
    std::vector<Sample> out;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line[0] == '#')
            continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        Sample s{};
        if (!(ls >> s.n >> s.value)) {
            if (first) {
                first = false;
                continue;
            }
            throw DomainError("malformed row in " + path.string() + ": " + line);
        }
        first = false;
        out.push_back(s);
    }
    return out;
}

int cmd_fit(const FitArgs& args, std::ostream& out) {
    std::vector<Sample> samples = read_samples_csv(args.input);
    const double offset = args.offset ? *args.offset : i_infinity();
    PowerLawFit fit = fit_power_law(samples, offset);
    std::optional<std::uint64_t> nt = n_threshold(fit, args.target);
    if (args.json) {
        nlohmann::json j = {{"c", fit.c},
                            {"beta", fit.beta},
                            {"r2", fit.r2},
                            {"n_points_used", fit.n_points_used},
                            {"dropped", fit.dropped},
                            {"offset", offset},
                            {"n_threshold", nt ? nlohmann::json(*nt) : nlohmann::json("inf")}};
        out << j.dump(2) << '\n';
        return kExitOk;
    }
    out << strf("c       %.6g\nbeta    %.6f\nR2      %.6f\npoints  %d\n", fit.c, fit.beta, fit.r2,
                fit.n_points_used);
    if (!fit.dropped.empty()) {
        out << "dropped";
        for (double n : fit.dropped)
            out << ' ' << n;
        out << '\n';
    }
    out << strf("N(I < %g) ", args.target) << (nt ? std::to_string(*nt) : std::string("inf")) << '\n';
    return kExitOk;
}

DiscrepancyReport discrepancy_report(const DiscrepancyArgs& args) {
    if (args.n < 1)
        throw DomainError("N must be positive");
    std::vector<double> pts;
    pts.reserve(args.n);
    stream_geometric(args.base, args.n, [&](std::uint64_t, int, double t) { pts.push_back(t); }, args.digits);
    CFExpansion cf = cf_expand_log10(args.base, 64, args.digits);
    double sum = 0.0;
    for (const Convergent& c : convergents_upto(cf, args.n))
        sum += c.next_quotient.get_d();
    return {star_discrepancy(pts), 3.0 * sum / static_cast<double>(args.n)};
}

int cmd_discrepancy(const DiscrepancyArgs& args, std::ostream& out) {
    DiscrepancyReport r = discrepancy_report(args);
    out << strf("D*_N               %.6e\n(3/N) sum a_{k+1}  %.6e\n", r.dstar, r.bound);
    return kExitOk;
}

} // namespace bcmi
