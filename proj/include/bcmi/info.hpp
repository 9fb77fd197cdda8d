#pragma once

#include <array>
#include <span>
#include <vector>

#include "bcmi/digits.hpp"

namespace bcmi {

using CellVector = std::array<double, kCells>;

/// I(D1;D3|D2) in bits, summed as p log2(p p_.b. / (p_ab. p_.bc)).
double cmi(const JointDist& p);
/// Same quantity as H(D1D2) + H(D2D3) - H(D2) - H(D1D2D3).
double cmi_entropy_form(const JointDist& p);
long double cmi_extended(const std::array<long double, kCells>& p);

/// CMI of the limiting Benford distribution, computed in long double once.
double i_infinity();

double l2_distance(const JointDist& a, const JointDist& b);

/// Star discrepancy of points in [0,1) via the sorted-sample formula.
double star_discrepancy(std::span<const double> points);

/// Upward bias (K_eff - 1)/(2 N ln 2) of the plug-in estimator, K_eff = occupied cells.
double plugin_bias_bits(const TripleCounts& counts);

struct MarkovProjection {
    JointDist q;
    double distance = 0.0;
};

/// q_abc = p_ab. p_.bc / p_.b.; fibers with zero mass are copied.
MarkovProjection markov_projection(const JointDist& p);

/// L2-nearest conditionally independent distribution: each d2 fiber is the
/// best rank-one approximation of (P_b - mu), with mu set so the mass is 1.
MarkovProjection markov_l2_nearest(const JointDist& p);

struct Gradient {
    CellVector full{};
    CellVector projected{};
    double mean = 0.0;
    double sd = 0.0;
    double projected_norm = 0.0;
};

Gradient cmi_gradient(const JointDist& p);

/// Dense 900x900 Hessian of the CMI (bits), row-major.
std::vector<double> cmi_hessian(const JointDist& p);

/// H v without forming H.
CellVector hessian_apply(const JointDist& p, const CellVector& v);

inline constexpr double kDefaultEpsEig = 1e-12;

struct HessianSpectrum {
    std::vector<double> eigenvalues; ///< 899 tangent-space eigenvalues, ascending
    std::vector<double> eigenvectors; ///< column-major 900 x 899 when requested
    int n_pos = 0;
    int n_neg = 0;
    int n_null = 0;
    double lambda_max = 0.0;
    double lambda_min = 0.0;
    double op_norm = 0.0;
    double eps_eig = 0.0;         ///< absolute threshold used for counting
    double full_lambda_min = 0.0; ///< unprojected 900x900 Hessian
    double full_lambda_max = 0.0;
    double full_op_norm = 0.0;
};

/// Spectrum of the Hessian restricted to {sum = 0}. Eigenvalues with
/// |lambda| <= eps_rel * op_norm count as null.
HessianSpectrum cmi_hessian_spectrum(const JointDist& p, double eps_rel = kDefaultEpsEig,
                                     bool with_vectors = false, bool with_full_space = true);

struct QuadraticRatios {
    double quad_ratio = 0.0;
    double linear_ratio = 0.0;
    double delta_norm = 0.0;
};

/// Throws NumericError when pN == p.
QuadraticRatios quadratic_ratios(const JointDist& pn, const JointDist& p, double i_inf);

} // namespace bcmi
