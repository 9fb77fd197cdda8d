#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "bcmi/contfrac.hpp"
#include "bcmi/fitting.hpp"

namespace bcmi {

inline const std::vector<std::uint64_t> kBaselineGrid{500, 1000, 2000, 5000, 10000};
inline const std::vector<std::uint64_t> kExtendedGrid{500,   1000,  2000,   5000,  10000,
                                                      20000, 40000, 100000, 200000};
inline constexpr std::size_t kCfTerms = 16; ///< a_0 and 15 partial quotients

enum class Classifier {
    Decay,     ///< fitted exponent and plateau level
    Resonance, ///< Q* thresholds at the largest grid N
};

struct ClassifyOptions {
    Classifier classifier = Classifier::Decay;
    double conv_beta = 1.3;   ///< CONV when beta exceeds this
    double pers_level = 0.1;  ///< otherwise PERS when I at the largest N exceeds this (bits)
    LogBase log_base = LogBase::Natural;
};

struct SurveyRecord {
    std::uint64_t base = 0;
    std::vector<std::uint64_t> cf;
    std::uint64_t q_star = 0;
    std::vector<std::uint64_t> grid;
    std::vector<double> cmi;
    std::vector<double> ratio; ///< resonance ratio per grid N
    double beta = 0.0;         ///< NaN when the fit failed
    double c = 0.0;
    double r2 = 0.0;
    int n_points_used = 0;
    std::vector<double> dropped;
    Label label = Label::Trans;
    Label resonance_label = Label::Trans;
    double quad_ratio = 0.0;
    double linear_ratio = 0.0;
    double dstar = 0.0;
    int digits = 0;

    bool disagreement() const { return label != resonance_label; }
};

nlohmann::json to_json(const SurveyRecord& r);
SurveyRecord record_from_json(const nlohmann::json& j);

Label classify(const SurveyRecord& r, const ClassifyOptions& opts);

/// Full per-base analysis from a single orbit pass, snapshotting counts at each grid N.
SurveyRecord analyze_base(std::uint64_t b, const std::vector<std::uint64_t>& grid, int digits = kDefaultDigits,
                          const ClassifyOptions& opts = {});

/// Bases in [lo, hi] that are not powers of ten.
std::vector<std::uint64_t> survey_bases(std::uint64_t lo, std::uint64_t hi);

struct SurveySummary {
    std::map<Label, int> counts;
    int total = 0;
    double beta_mean = 0.0; ///< over CONV bases
    double beta_sd = 0.0;
    double beta_median = 0.0;
    double persistence_rate = 0.0;
    std::map<Label, double> q_star_mean;
    std::map<Label, std::pair<double, double>> beta_by_label; ///< (mean, sd)
    int disagreements = 0;
    std::vector<std::pair<double, int>> beta_histogram; ///< (bin lower edge, count), width 0.1
};

SurveySummary summarize(const std::vector<SurveyRecord>& records);
void write_summary_csv(const std::filesystem::path& path, const SurveySummary& s);

/// Reads a line-delimited record file. A damaged line raises CorruptOutputError
/// unless `repair` is set, in which case the file is truncated before it.
std::vector<SurveyRecord> load_records(const std::filesystem::path& path, bool repair = false);

struct SurveyOptions {
    std::vector<std::uint64_t> bases;
    std::vector<std::uint64_t> grid = kBaselineGrid;
    int jobs = 1;
    int digits = kDefaultDigits;
    ClassifyOptions classify;
    std::filesystem::path out;
    bool resume = false;
    bool force = false;
    std::size_t stop_after = 0; ///< stop once this many new records were written (0 = all)
    std::function<void(const SurveyRecord&)> on_record;
};

struct SurveyResult {
    std::vector<SurveyRecord> records; ///< sorted by base
    SurveySummary summary;
    std::size_t skipped = 0;
    bool complete = true;
};

SurveyResult run_survey(const SurveyOptions& opts);

struct BorderlineRule {
    double band_lo = 0.3;
    double band_hi = 1.3;
    double beta_tol = 0.1;
    double min_r2 = 0.9;
};

bool is_borderline(const SurveyRecord& r, const BorderlineRule& rule);

struct Move {
    std::uint64_t base;
    Label from;
    Label to;
};

struct Resolution {
    std::vector<SurveyRecord> records; ///< baseline with flagged bases replaced, sorted by base
    std::vector<std::uint64_t> flagged;
    std::vector<Move> moves;
    SurveySummary before;
    SurveySummary after;
};

Resolution resolve_transitional(const std::vector<SurveyRecord>& baseline, const SurveyOptions& extended,
                                const BorderlineRule& rule = {});

struct QuadCase {
    std::uint64_t base;
    std::uint64_t n;
    double quad_ratio;
    double linear_ratio;
};

std::vector<QuadCase> quadratic_sweep(const std::vector<std::uint64_t>& bases,
                                      const std::vector<std::uint64_t>& grid, int jobs,
                                      int digits = kDefaultDigits);

/// Runs fn(i) for i in [0, count) on `jobs` threads; rethrows the first failure.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

int default_jobs();

} // namespace bcmi
