#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "bcmi/commands.hpp"
#include "bcmi/errors.hpp"

using namespace bcmi;

namespace {

std::uint64_t parse_count(const std::string& item) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(item, &used);
    } catch (const std::logic_error&) {
        used = 0;
    }
    if (used == 0 || used != item.size())
        throw DomainError("not a non-negative integer: '" + item + "'");
    return v;
}

std::vector<std::uint64_t> parse_grid(const std::string& text) {
    std::vector<std::uint64_t> grid;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty())
            continue;
        grid.push_back(parse_count(item));
    }
    return grid;
}

void parse_range(const std::string& text, std::uint64_t& lo, std::uint64_t& hi) {
    auto colon = text.find(':');
    if (colon == std::string::npos)
        throw DomainError("range must look like lo:hi");
    lo = parse_count(text.substr(0, colon));
    hi = parse_count(text.substr(colon + 1));
}

LogBase parse_log_base(const std::string& s) {
    if (s == "e" || s == "ln")
        return LogBase::Natural;
    if (s == "10")
        return LogBase::Decimal;
    throw DomainError("log base must be 'e' or '10'");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Leading-digit dependence toolkit: CMI of digit triples, continued fractions, surveys"};
    app.require_subcommand(1);

    int precision = 0;
    app.add_option("--precision", precision, "decimal digits (default: BENFORD_PRECISION or 500)");

    AnalyzeArgs analyze;
    std::string grid_text, log_base = "e", classifier = "decay";
    bool table = false;
    auto* a = app.add_subcommand("analyze", "analyze one base over an N grid");
    a->add_option("--base", analyze.base, "integer base b >= 2")->required();
    a->add_option("--n-grid", grid_text, "comma-separated N values (default 500,1000,2000,5000,10000)");
    a->add_option("--precision", precision, "decimal digits");
    a->add_flag("--json", analyze.json, "emit JSON");
    a->add_flag("--table", table, "emit a table (default)");
    a->add_option("--log-base", log_base, "log base for resonance thresholds: e or 10");
    a->add_option("--classifier", classifier, "decay or resonance");

    VerifyArgs verify;
    auto* v = app.add_subcommand("verify", "recompute the benchmark CMI cells and quotient prefixes");
    v->add_option("--precision", precision, "decimal digits");

    SurveyArgs survey;
    std::string range = "2:1000", grid_kind = "baseline";
    auto* s = app.add_subcommand("survey", "classify a range of bases");
    s->add_option("--range", range, "lo:hi (default 2:1000)");
    s->add_option("--grid", grid_kind, "baseline or extended")->check(CLI::IsMember({"baseline", "extended"}));
    s->add_option("--from", survey.from, "baseline records; with --grid extended only flagged bases are rerun");
    s->add_option("--out", survey.out, "line-delimited JSON output");
    s->add_flag("--resume", survey.resume, "skip bases already in --out");
    s->add_flag("--force", survey.force, "truncate a damaged or existing output file");
    s->add_option("--jobs", survey.jobs, "worker threads (default: hardware concurrency)");
    s->add_option("--precision", precision, "decimal digits");
    s->add_option("--log-base", log_base, "log base for resonance thresholds: e or 10");
    s->add_option("--classifier", classifier, "decay or resonance");
    survey.jobs = default_jobs();

    HessianArgs hessian;
    std::string at = "benford";
    auto* h = app.add_subcommand("hessian", "gradient, Hessian spectrum and Markov distance at P");
    h->add_option("--at", at, "evaluation point (benford)")->check(CLI::IsMember({"benford"}));
    h->add_option("--eps-eig", hessian.eps_eig, "null threshold relative to the operator norm");
    h->add_flag("--json", hessian.json, "emit JSON");

    FitArgs fit;
    double offset = 0.0;
    auto* f = app.add_subcommand("fit", "power-law fit of (N, I) rows");
    f->add_option("--input", fit.input, "CSV with columns N,I")->required();
    auto* off = f->add_option("--offset", offset, "subtracted limit (default I_inf)");
    f->add_option("--target", fit.target, "threshold for N(I < target)");
    f->add_flag("--json", fit.json, "emit JSON");

    DiscrepancyArgs disc;
    auto* d = app.add_subcommand("discrepancy", "star discrepancy of {n log10 b} and the quotient bound");
    d->add_option("--base", disc.base, "integer base b >= 2")->required();
    d->add_option("--n", disc.n, "number of points")->required();
    d->add_option("--precision", precision, "decimal digits");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitDomain;
    }

    return guarded(
        [&]() -> int {
            const int digits = precision ? precision : default_precision();
            ClassifyOptions classify;
            classify.log_base = parse_log_base(log_base);
            if (classifier == "resonance")
                classify.classifier = Classifier::Resonance;
            else if (classifier != "decay")
                throw DomainError("classifier must be decay or resonance");

            if (*a) {
                analyze.digits = digits;
                analyze.classify = classify;
                if (!grid_text.empty())
                    analyze.grid = parse_grid(grid_text);
                if (table)
                    analyze.json = false;
                return cmd_analyze(analyze, std::cout);
            }
            if (*v) {
                verify.digits = digits;
                return cmd_verify(verify, std::cout);
            }
            if (*s) {
                parse_range(range, survey.lo, survey.hi);
                survey.extended = grid_kind == "extended";
                survey.digits = digits;
                survey.classify = classify;
                return cmd_survey(survey, std::cout);
            }
            if (*h)
                return cmd_hessian(hessian, std::cout);
            if (*f) {
                if (off->count())
                    fit.offset = offset;
                return cmd_fit(fit, std::cout);
            }
            disc.digits = digits;
            return cmd_discrepancy(disc, std::cout);
        },
        std::cerr);
}
