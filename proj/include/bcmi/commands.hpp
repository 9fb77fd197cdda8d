#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "bcmi/digits.hpp"
#include "bcmi/info.hpp"
#include "bcmi/survey.hpp"

namespace bcmi {

enum ExitCode : int {
    kExitOk = 0,
    kExitVerifyFailed = 1,
    kExitDomain = 2,
    kExitPrecision = 3,
    kExitOther = 4,
};

/// Digit budget from BENFORD_PRECISION, else 500.
int default_precision();

/// Runs body, printing library errors to err and mapping them to exit codes.
int guarded(const std::function<int()>& body, std::ostream& err);

struct AnalyzeArgs {
    std::uint64_t base = 0;
    std::vector<std::uint64_t> grid = kBaselineGrid;
    int digits = kDefaultDigits;
    bool json = false;
    ClassifyOptions classify;
};
int cmd_analyze(const AnalyzeArgs& args, std::ostream& out);

struct VerifyCell {
    std::string sequence;
    std::uint64_t n;
    double expected;
    double computed;
    bool pass;
};

struct VerifyQuotients {
    std::uint64_t base;
    std::vector<std::uint64_t> expected;
    std::vector<std::uint64_t> computed;
    std::uint64_t expected_max;
    std::uint64_t computed_max;
    bool pass;
};

struct VerifyReport {
    std::vector<VerifyCell> cells;
    std::vector<VerifyQuotients> quotients;
    std::uint64_t q_star_7 = 0;
    bool q_star_pass = false;
    bool all_pass() const;
};

struct VerifyArgs {
    int digits = kDefaultDigits;
    double tolerance = 1e-6;
    /// Test hook: may alter counts before each cell's CMI is taken.
    std::function<void(const std::string& sequence, std::uint64_t n, TripleCounts& counts)> tamper;
};

VerifyReport run_verify(const VerifyArgs& args);
int cmd_verify(const VerifyArgs& args, std::ostream& out);

struct SurveyArgs {
    std::uint64_t lo = 2;
    std::uint64_t hi = 1000;
    bool extended = false;
    std::filesystem::path from; ///< baseline records; with `extended`, only flagged bases are rerun
    std::filesystem::path out;
    bool resume = false;
    bool force = false;
    int jobs = 1;
    int digits = kDefaultDigits;
    ClassifyOptions classify;
};
int cmd_survey(const SurveyArgs& args, std::ostream& out);

struct HessianArgs {
    double eps_eig = kDefaultEpsEig;
    bool json = false;
};
int cmd_hessian(const HessianArgs& args, std::ostream& out);

struct FitArgs {
    std::filesystem::path input;
    std::optional<double> offset; ///< defaults to I_inf
    double target = 0.01;
    bool json = false;
};
/// Reads "N,I" rows (an optional header line is skipped).
std::vector<Sample> read_samples_csv(const std::filesystem::path& path);
int cmd_fit(const FitArgs& args, std::ostream& out);

struct DiscrepancyArgs {
    std::uint64_t base = 0;
    std::uint64_t n = 0;
    int digits = kDefaultDigits;
};

struct DiscrepancyReport {
    double dstar;
    double bound; ///< (3/N) sum of a_{k+1} over q_k <= N
};
DiscrepancyReport discrepancy_report(const DiscrepancyArgs& args);
int cmd_discrepancy(const DiscrepancyArgs& args, std::ostream& out);

} // namespace bcmi
