#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace bcmi {

struct Sample {
    double n;
    double value;
};

struct PowerLawFit {
    double c = 0.0;
    double beta = 0.0;
    double r2 = 0.0;
    int n_points_used = 0;
    std::vector<double> dropped; ///< N values whose I_N did not exceed the offset
};

/// OLS of log(I_N - i_inf) on log N: I_N - i_inf = c N^-beta.
PowerLawFit fit_power_law(const std::vector<Sample>& samples, double i_inf);

/// Smallest integer N with c N^-beta < target; nullopt (infinite) when beta <= 0.05.
std::optional<std::uint64_t> n_threshold(const PowerLawFit& fit, double target);

/// 2 - 2 ln ln N / ln N + c_sub / ln N.
double beta_eff_predicted(double n, double c_sub);

} // namespace bcmi
