#include "bcmi/survey.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "bcmi/digits.hpp"
#include "bcmi/errors.hpp"
#include "bcmi/info.hpp"

namespace bcmi {

namespace {

std::uint64_t to_u64(const mpz_class& v, const char* what) {
    if (v < 0 || !v.fits_ulong_p())
        throw NumericError(std::string(what) + " does not fit in 64 bits");
    return v.get_ui();
}

void check_grid(const std::vector<std::uint64_t>& grid) {
    if (grid.empty())
        throw DomainError("empty N grid");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] < 2)
            throw DomainError("grid values must be at least 2");
        if (i > 0 && grid[i] <= grid[i - 1])
            throw DomainError("grid must be strictly increasing");
    }
}

bool power_of_ten(std::uint64_t b) {
    while (b >= 10 && b % 10 == 0)
        b /= 10;
    return b == 1;
}

double json_double(const nlohmann::json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

struct Stats {
    double mean = 0.0;
    double sd = 0.0;
    double median = 0.0;
};

Stats stats_of(std::vector<double> v) {
    Stats s;
    if (v.empty())
        return s;
    double sum = 0.0;
    for (double x : v)
        sum += x;
    s.mean = sum / static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v)
            ss += (x - s.mean) * (x - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    std::sort(v.begin(), v.end());
    std::size_t m = v.size() / 2;
    s.median = v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
    return s;
}

} // namespace

nlohmann::json to_json(const SurveyRecord& r) {
    nlohmann::json j;
    j["base"] = r.base;
    j["cf"] = r.cf;
    j["q_star"] = r.q_star;
    j["grid"] = r.grid;
    j["cmi"] = r.cmi;
    j["ratio"] = r.ratio;
    j["beta"] = std::isfinite(r.beta) ? nlohmann::json(r.beta) : nlohmann::json(nullptr);
    j["c"] = std::isfinite(r.c) ? nlohmann::json(r.c) : nlohmann::json(nullptr);
    j["r2"] = std::isfinite(r.r2) ? nlohmann::json(r.r2) : nlohmann::json(nullptr);
    j["n_points_used"] = r.n_points_used;
    j["dropped"] = r.dropped;
    j["label"] = label_name(r.label);
    j["resonance_label"] = label_name(r.resonance_label);
    j["disagreement"] = r.disagreement();
    j["quad_ratio"] = r.quad_ratio;
    j["linear_ratio"] = r.linear_ratio;
    j["dstar"] = r.dstar;
    j["digits"] = r.digits;
    return j;
}

SurveyRecord record_from_json(const nlohmann::json& j) {
    SurveyRecord r;
    r.base = j.at("base").get<std::uint64_t>();
    r.cf = j.at("cf").get<std::vector<std::uint64_t>>();
    r.q_star = j.at("q_star").get<std::uint64_t>();
    r.grid = j.at("grid").get<std::vector<std::uint64_t>>();
    r.cmi = j.at("cmi").get<std::vector<double>>();
    r.ratio = j.value("ratio", std::vector<double>{});
    r.beta = json_double(j.at("beta"));
    r.c = json_double(j.at("c"));
    r.r2 = json_double(j.at("r2"));
    r.n_points_used = j.value("n_points_used", 0);
    r.dropped = j.value("dropped", std::vector<double>{});
    r.label = parse_label(j.at("label").get<std::string>());
    r.resonance_label = parse_label(j.value("resonance_label", std::string(label_name(r.label))));
    r.quad_ratio = json_double(j.at("quad_ratio"));
    r.linear_ratio = json_double(j.at("linear_ratio"));
    r.dstar = json_double(j.at("dstar"));
    r.digits = j.value("digits", 0);
    if (r.grid.size() != r.cmi.size())
        throw DomainError("record grid and cmi lengths differ");
    return r;
}

Label classify(const SurveyRecord& r, const ClassifyOptions& opts) {
    if (opts.classifier == Classifier::Resonance)
        return r.resonance_label;
    if (std::isfinite(r.beta) && r.beta > opts.conv_beta)
        return Label::Conv;
    if (!r.cmi.empty() && r.cmi.back() > opts.pers_level)
        return Label::Pers;
    return Label::Trans;
}

SurveyRecord analyze_base(std::uint64_t b, const std::vector<std::uint64_t>& grid, int digits,
                          const ClassifyOptions& opts) {
    if (b < 2)
        throw DomainError("base must be at least 2");
    if (power_of_ten(b))
        throw DomainError("log10(" + std::to_string(b) + ") is rational");
    check_grid(grid);
    const std::uint64_t n_max = grid.back();

    SurveyRecord r;
    r.base = b;
    r.grid = grid;

    CFExpansion cf = cf_expand_log10(b, 48, digits);
    if (cf.stable_prefix < kCfTerms)
        throw PrecisionError("only " + std::to_string(cf.stable_prefix) + " stable quotients");
    for (std::size_t k = 0; k < kCfTerms; ++k)
        r.cf.push_back(to_u64(cf.quotients[k], "partial quotient"));

    TripleCounts counts;
    std::vector<double> points;
    points.reserve(n_max);
    const JointDist benford = benford_joint();
    const double i_inf = i_infinity();
    std::size_t gi = 0;
    StreamStats st = stream_geometric(
        b, n_max,
        [&](std::uint64_t n, int delta, double theta) {
            counts.add(delta);
            points.push_back(theta);
            if (n == grid[gi]) {
                r.cmi.push_back(cmi(JointDist::from_counts(counts)));
                ++gi;
            }
        },
        digits);
    r.digits = st.digits;

    const JointDist pn = JointDist::from_counts(counts);
    QuadraticRatios qr = quadratic_ratios(pn, benford, i_inf);
    r.quad_ratio = qr.quad_ratio;
    r.linear_ratio = qr.linear_ratio;
    r.dstar = star_discrepancy(points);

    std::vector<Sample> samples;
    for (std::size_t i = 0; i < grid.size(); ++i)
        samples.push_back({static_cast<double>(grid[i]), r.cmi[i]});
    try {
        PowerLawFit fit = fit_power_law(samples, i_inf);
        r.beta = fit.beta;
        r.c = fit.c;
        r.r2 = fit.r2;
        r.n_points_used = fit.n_points_used;
        r.dropped = fit.dropped;
    } catch (const InsufficientDataError&) {
        r.beta = r.c = r.r2 = std::numeric_limits<double>::quiet_NaN();
        for (const Sample& s : samples)
            if (s.value <= i_inf)
                r.dropped.push_back(s.n);
    }

    for (std::uint64_t n : grid)
        r.ratio.push_back(resonance(cf, n, opts.log_base).ratio_value);
    ResonanceReport rep = resonance(cf, n_max, opts.log_base);
    r.q_star = to_u64(rep.q_star, "Q*");
    r.resonance_label = rep.label;
    r.label = classify(r, opts);
    return r;
}

std::vector<std::uint64_t> survey_bases(std::uint64_t lo, std::uint64_t hi) {
    if (lo < 2 || hi < lo)
        throw DomainError("base range must satisfy 2 <= lo <= hi");
    std::vector<std::uint64_t> out;
    for (std::uint64_t b = lo; b <= hi; ++b)
        if (!power_of_ten(b))
            out.push_back(b);
    return out;
}

SurveySummary summarize(const std::vector<SurveyRecord>& records) {
    SurveySummary s;
    s.total = static_cast<int>(records.size());
    std::map<Label, std::vector<double>> betas;
    std::map<Label, double> qsum;
    for (Label l : {Label::Conv, Label::Trans, Label::Pers}) {
        s.counts[l] = 0;
        qsum[l] = 0.0;
    }
    for (const SurveyRecord& r : records) {
        ++s.counts[r.label];
        qsum[r.label] += static_cast<double>(r.q_star);
        if (std::isfinite(r.beta))
            betas[r.label].push_back(r.beta);
        if (r.disagreement())
            ++s.disagreements;
    }
    for (auto& [l, sum] : qsum) {
        s.q_star_mean[l] = s.counts[l] ? sum / s.counts[l] : 0.0;
        Stats st = stats_of(betas[l]);
        s.beta_by_label[l] = {st.mean, st.sd};
    }
    Stats conv = stats_of(betas[Label::Conv]);
    s.beta_mean = conv.mean;
    s.beta_sd = conv.sd;
    s.beta_median = conv.median;
    s.persistence_rate = s.total ? static_cast<double>(s.counts[Label::Pers]) / s.total : 0.0;

    std::map<long, int> bins;
    for (double b : betas[Label::Conv])
        ++bins[static_cast<long>(std::floor(b * 10.0))];
    for (auto [k, c] : bins)
        s.beta_histogram.emplace_back(static_cast<double>(k) / 10.0, c);
    return s;
}

void write_summary_csv(const std::filesystem::path& path, const SurveySummary& s) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw DomainError("cannot write " + path.string());
    out << "label,count,pct,beta_mean,beta_sd\n";
    out.precision(6);
    for (Label l : {Label::Conv, Label::Trans, Label::Pers}) {
        int c = s.counts.at(l);
        auto [m, sd] = s.beta_by_label.at(l);
        out << label_name(l) << ',' << c << ',' << std::fixed
            << (s.total ? 100.0 * c / s.total : 0.0) << ',' << m << ',' << sd << '\n';
        out.unsetf(std::ios::fixed);
    }
}

std::vector<SurveyRecord> load_records(const std::filesystem::path& path, bool repair) {
    std::vector<SurveyRecord> out;
    if (!std::filesystem::exists(path))
        return out;
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    in.close();

    std::set<std::uint64_t> seen;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string problem;
        if (nl == std::string::npos) {
            problem = "unterminated final line";
        } else {
            try {
                SurveyRecord r = record_from_json(nlohmann::json::parse(text.substr(pos, nl - pos)));
                if (seen.insert(r.base).second)
                    out.push_back(std::move(r));
            } catch (const std::exception& e) {
                problem = e.what();
            }
        }
        if (!problem.empty()) {
            if (!repair)
                throw CorruptOutputError(path.string() + ": damaged record at byte " + std::to_string(pos) +
                                         " (" + problem + "); rerun with --force to truncate it");
            std::filesystem::resize_file(path, pos);
            break;
        }
        pos = nl + 1;
    }
    return out;
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex mu;
    auto worker = [&] {
        for (;;) {
            if (failed)
                return;
            std::size_t i = next++;
            if (i >= count)
                return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!error)
                    error = std::current_exception();
                failed = true;
                return;
            }
        }
    };
    const int n = std::max(1, std::min<int>(jobs, static_cast<int>(count)));
    if (n == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (int t = 0; t < n; ++t)
            threads.emplace_back(worker);
        for (auto& t : threads)
            t.join();
    }
    if (error)
        std::rethrow_exception(error);
}

int default_jobs() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

namespace {

struct StopSignal {};

} // namespace

SurveyResult run_survey(const SurveyOptions& opts) {
    check_grid(opts.grid);
    SurveyResult result;
    std::vector<SurveyRecord> existing;
    const bool to_file = !opts.out.empty();
    if (to_file && std::filesystem::exists(opts.out)) {
        if (opts.resume)
            existing = load_records(opts.out, opts.force);
        else if (opts.force)
            std::filesystem::resize_file(opts.out, 0);
        else
            throw DomainError(opts.out.string() + " exists; pass --resume to continue or --force to overwrite");
    }

    std::set<std::uint64_t> done;
    for (const SurveyRecord& r : existing)
        if (r.grid != opts.grid)
            throw DomainError("existing record for base " + std::to_string(r.base) + " uses a different grid");
        else
            done.insert(r.base);
    std::vector<std::uint64_t> todo;
    for (std::uint64_t b : opts.bases) {
        if (done.count(b))
            ++result.skipped;
        else
            todo.push_back(b);
    }

    std::ofstream out;
    if (to_file) {
        out.open(opts.out, std::ios::app | std::ios::binary);
        if (!out)
            throw DomainError("cannot open " + opts.out.string());
    }
    std::mutex mu;
    std::vector<SurveyRecord> fresh;
    std::atomic<bool> stop{false};
    try {
        parallel_for(todo.size(), opts.jobs, [&](std::size_t i) {
            if (stop)
                throw StopSignal{};
            SurveyRecord r = analyze_base(todo[i], opts.grid, opts.digits, opts.classify);
            std::lock_guard lock(mu);
            if (stop)
                throw StopSignal{};
            if (to_file) {
                out << to_json(r).dump() << '\n';
                out.flush();
            }
            if (opts.on_record)
                opts.on_record(r);
            fresh.push_back(std::move(r));
            if (opts.stop_after && fresh.size() >= opts.stop_after)
                stop = true;
        });
    } catch (const StopSignal&) {
    }

    result.complete = fresh.size() == todo.size();
    result.records = std::move(existing);
    for (SurveyRecord& r : fresh)
        result.records.push_back(std::move(r));
    std::erase_if(result.records, [&](const SurveyRecord& r) {
        return std::find(opts.bases.begin(), opts.bases.end(), r.base) == opts.bases.end();
    });
    std::sort(result.records.begin(), result.records.end(),
              [](const SurveyRecord& a, const SurveyRecord& b) { return a.base < b.base; });
    result.summary = summarize(result.records);
    if (to_file && result.complete)
        write_summary_csv(opts.out.string() + ".summary.csv", result.summary);
    return result;
}

bool is_borderline(const SurveyRecord& r, const BorderlineRule& rule) {
    if (r.label == Label::Trans)
        return true;
    if (!std::isfinite(r.beta) || !std::isfinite(r.r2))
        return true;
    return std::fabs(r.beta - rule.band_hi) < rule.beta_tol || std::fabs(r.beta - rule.band_lo) < rule.beta_tol ||
           r.r2 < rule.min_r2;
}

Resolution resolve_transitional(const std::vector<SurveyRecord>& baseline, const SurveyOptions& extended,
                                const BorderlineRule& rule) {
    Resolution res;
    res.before = summarize(baseline);
    std::map<std::uint64_t, Label> old;
    for (const SurveyRecord& r : baseline) {
        if (is_borderline(r, rule)) {
            res.flagged.push_back(r.base);
            old[r.base] = r.label;
        }
    }
    SurveyOptions opts = extended;
    opts.bases = res.flagged;
    SurveyResult ext = run_survey(opts);
    if (!ext.complete)
        throw Error("extended survey stopped before finishing");

    std::map<std::uint64_t, const SurveyRecord*> updated;
    for (const SurveyRecord& r : ext.records)
        updated[r.base] = &r;
    for (const SurveyRecord& r : baseline) {
        auto it = updated.find(r.base);
        if (it == updated.end()) {
            res.records.push_back(r);
        } else {
            res.records.push_back(*it->second);
            res.moves.push_back({r.base, old[r.base], it->second->label});
        }
    }
    std::sort(res.records.begin(), res.records.end(),
              [](const SurveyRecord& a, const SurveyRecord& b) { return a.base < b.base; });
    res.after = summarize(res.records);
    return res;
}

std::vector<QuadCase> quadratic_sweep(const std::vector<std::uint64_t>& bases,
                                      const std::vector<std::uint64_t>& grid, int jobs, int digits) {
    check_grid(grid);
    const JointDist benford = benford_joint();
    const double i_inf = i_infinity();
    std::vector<std::vector<QuadCase>> per(bases.size());
    parallel_for(bases.size(), jobs, [&](std::size_t i) {
        TripleCounts counts;
        std::size_t gi = 0;
        stream_geometric(
            bases[i], grid.back(),
            [&](std::uint64_t n, int delta, double) {
                counts.add(delta);
                if (n == grid[gi]) {
                    QuadraticRatios q = quadratic_ratios(JointDist::from_counts(counts), benford, i_inf);
                    per[i].push_back({bases[i], n, q.quad_ratio, q.linear_ratio});
                    ++gi;
                }
            },
            digits);
    });
    std::vector<QuadCase> out;
    for (auto& v : per)
        out.insert(out.end(), v.begin(), v.end());
    return out;
}

} // namespace bcmi
