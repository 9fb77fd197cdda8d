#include "bcmi/fitting.hpp"

#include <algorithm>
#include <cmath>

#include "bcmi/errors.hpp"

namespace bcmi {

PowerLawFit fit_power_law(const std::vector<Sample>& samples, double i_inf) {
    PowerLawFit fit;
    std::vector<double> xs, ys;
    for (const Sample& s : samples) {
        if (!(s.n > 0.0))
            throw DomainError("sample size must be positive");
        if (s.value > i_inf) {
            xs.push_back(std::log(s.n));
            ys.push_back(std::log(s.value - i_inf));
        } else {
            fit.dropped.push_back(s.n);
        }
    }
    fit.n_points_used = static_cast<int>(xs.size());
    if (xs.size() < 3)
        throw InsufficientDataError("power-law fit needs 3 points above the offset, got " +
                                    std::to_string(xs.size()));

    const double m = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= m;
    my /= m;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0.0)
        throw InsufficientDataError("all samples share one N");
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    fit.beta = -slope;
    fit.c = std::exp(intercept);
    if (syy == 0.0) {
        fit.r2 = 1.0;
    } else {
        double sse = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            double r = ys[i] - (intercept + slope * xs[i]);
            sse += r * r;
        }
        fit.r2 = std::clamp(1.0 - sse / syy, 0.0, 1.0);
    }
    return fit;
}

std::optional<std::uint64_t> n_threshold(const PowerLawFit& fit, double target) {
    if (!(target > 0.0))
        throw DomainError("threshold target must be positive");
    if (fit.beta <= 0.05)
        return std::nullopt;
    double x = std::pow(fit.c / target, 1.0 / fit.beta);
    if (!std::isfinite(x) || x > 1.8e19)
        return std::nullopt;
    return std::max<std::uint64_t>(static_cast<std::uint64_t>(std::ceil(x)), 1);
}

double beta_eff_predicted(double n, double c_sub) {
    if (n < 100)
        throw DomainError("effective exponent formula needs N >= 100");
    const double l = std::log(n);
    return 2.0 - 2.0 * std::log(l) / l + c_sub / l;
}

} // namespace bcmi
