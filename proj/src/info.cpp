#include "bcmi/info.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "bcmi/errors.hpp"

namespace bcmi {

namespace {

constexpr int kD1 = 9;
constexpr int kD2 = 10;
constexpr int kD3 = 10;

inline int idx(int a, int b, int c) { return a * 100 + b * 10 + c; }

template <class T>
struct Marginals {
    std::array<T, kD1 * kD2> ab{};
    std::array<T, kD2 * kD3> bc{};
    std::array<T, kD2> b{};
};

template <class T, class P>
Marginals<T> marginals(const P& p) {
    Marginals<T> m;
    for (int a = 0; a < kD1; ++a)
        for (int b = 0; b < kD2; ++b)
            for (int c = 0; c < kD3; ++c) {
                T v = p[idx(a, b, c)];
                m.ab[a * kD2 + b] += v;
                m.bc[b * kD3 + c] += v;
                m.b[b] += v;
            }
    return m;
}

template <class T, class P>
T cmi_ratio(const P& p) {
    Marginals<T> m = marginals<T>(p);
    T s = 0;
    for (int a = 0; a < kD1; ++a)
        for (int b = 0; b < kD2; ++b)
            for (int c = 0; c < kD3; ++c) {
                T v = p[idx(a, b, c)];
                if (v > 0)
                    s += v * std::log(v * m.b[b] / (m.ab[a * kD2 + b] * m.bc[b * kD3 + c]));
            }
    return s / std::log(T(2));
}

template <class T>
T entropy_term(T v) {
    return v > 0 ? -v * std::log(v) : T(0);
}

void check_dist(const JointDist& p) {
    p.validate();
}

void check_positive(const JointDist& p) {
    check_dist(p);
    for (double v : p.p)
        if (v <= 0.0)
            throw DomainError("distribution has a zero cell");
}

double report_negative(double v) {
    if (v < -1e-12)
        throw NumericError("CMI evaluated to " + std::to_string(v) + " bits");
    return v;
}

} // namespace

double cmi(const JointDist& p) {
    check_dist(p);
    return report_negative(cmi_ratio<double>(p.p));
}

double cmi_entropy_form(const JointDist& p) {
    check_dist(p);
    Marginals<double> m = marginals<double>(p.p);
    double h12 = 0, h23 = 0, h2 = 0, h123 = 0;
    for (double v : m.ab)
        h12 += entropy_term(v);
    for (double v : m.bc)
        h23 += entropy_term(v);
    for (double v : m.b)
        h2 += entropy_term(v);
    for (double v : p.p)
        h123 += entropy_term(v);
    return report_negative((h12 + h23 - h2 - h123) / std::log(2.0));
}

long double cmi_extended(const std::array<long double, kCells>& p) {
    return cmi_ratio<long double>(p);
}

double i_infinity() {
    static const double value = static_cast<double>(cmi_extended(benford_joint_extended()));
    return value;
}

double l2_distance(const JointDist& a, const JointDist& b) {
    double s = 0.0;
    for (int i = 0; i < kCells; ++i) {
        double d = a.p[i] - b.p[i];
        s += d * d;
    }
    return std::sqrt(s);
}

double star_discrepancy(std::span<const double> points) {
    if (points.empty())
        throw DomainError("star discrepancy of an empty set");
    std::vector<double> x(points.begin(), points.end());
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double up = static_cast<double>(i + 1) / n - x[i];
        double down = x[i] - static_cast<double>(i) / n;
        d = std::max({d, up, down});
    }
    return d;
}

double plugin_bias_bits(const TripleCounts& counts) {
    if (counts.total == 0)
        throw InsufficientDataError("no samples");
    auto occupied = std::count_if(counts.counts.begin(), counts.counts.end(),
                                  [](std::uint64_t c) { return c > 0; });
    return static_cast<double>(occupied - 1) / (2.0 * static_cast<double>(counts.total) * std::log(2.0));
}

MarkovProjection markov_projection(const JointDist& p) {
    check_dist(p);
    Marginals<double> m = marginals<double>(p.p);
    MarkovProjection r;
    for (int a = 0; a < kD1; ++a)
        for (int b = 0; b < kD2; ++b)
            for (int c = 0; c < kD3; ++c) {
                int i = idx(a, b, c);
                r.q.p[i] = m.b[b] > 0 ? m.ab[a * kD2 + b] * m.bc[b * kD3 + c] / m.b[b] : p.p[i];
            }
    r.distance = l2_distance(p, r.q);
    return r;
}

namespace {

// Best rank-one approximation s u v^T of a 9x10 block (row-major), by power iteration.
void rank_one(const double* block, double* out) {
    std::array<double, kD3> v;
    v.fill(1.0 / std::sqrt(double(kD3)));
    std::array<double, kD1> u{};
    double sigma = 0.0;
    for (int it = 0; it < 500; ++it) {
        for (int a = 0; a < kD1; ++a) {
            double s = 0;
            for (int c = 0; c < kD3; ++c)
                s += block[a * kD3 + c] * v[c];
            u[a] = s;
        }
        double nu = std::sqrt(std::inner_product(u.begin(), u.end(), u.begin(), 0.0));
        if (nu == 0.0)
            break;
        for (double& x : u)
            x /= nu;
        std::array<double, kD3> w{};
        for (int c = 0; c < kD3; ++c)
            for (int a = 0; a < kD1; ++a)
                w[c] += block[a * kD3 + c] * u[a];
        double nw = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
        if (nw == 0.0)
            break;
        double change = 0.0;
        for (int c = 0; c < kD3; ++c) {
            double nv = w[c] / nw;
            change = std::max(change, std::fabs(nv - v[c]));
            v[c] = nv;
        }
        sigma = nw;
        if (change < 1e-15)
            break;
    }
    for (int a = 0; a < kD1; ++a)
        for (int c = 0; c < kD3; ++c)
            out[a * kD3 + c] = sigma * u[a] * v[c];
}

double l2_fit(const JointDist& p, double mu, JointDist& q) {
    std::array<double, kD1 * kD3> block, fit;
    double mass = 0.0;
    for (int b = 0; b < kD2; ++b) {
        for (int a = 0; a < kD1; ++a)
            for (int c = 0; c < kD3; ++c)
                block[a * kD3 + c] = p.p[idx(a, b, c)] - mu;
        rank_one(block.data(), fit.data());
        for (int a = 0; a < kD1; ++a)
            for (int c = 0; c < kD3; ++c) {
                q.p[idx(a, b, c)] = fit[a * kD3 + c];
                mass += fit[a * kD3 + c];
            }
    }
    return mass;
}

} // namespace

MarkovProjection markov_l2_nearest(const JointDist& p) {
    check_dist(p);
    MarkovProjection r;
    double lo = -1.0 / kCells, hi = 1.0 / kCells;
    while (l2_fit(p, lo, r.q) < 1.0)
        lo *= 2;
    while (l2_fit(p, hi, r.q) > 1.0)
        hi *= 2;
    for (int it = 0; it < 200 && hi - lo > 1e-18; ++it) {
        double mid = 0.5 * (lo + hi);
        if (l2_fit(p, mid, r.q) > 1.0)
            lo = mid;
        else
            hi = mid;
    }
    l2_fit(p, 0.5 * (lo + hi), r.q);
    for (double& v : r.q.p)
        v = std::max(v, 0.0);
    r.distance = l2_distance(p, r.q);
    return r;
}

Gradient cmi_gradient(const JointDist& p) {
    check_positive(p);
    Marginals<double> m = marginals<double>(p.p);
    Gradient g;
    const double ln2 = std::log(2.0);
    for (int a = 0; a < kD1; ++a)
        for (int b = 0; b < kD2; ++b)
            for (int c = 0; c < kD3; ++c) {
                int i = idx(a, b, c);
                g.full[i] = std::log(p.p[i] * m.b[b] / (m.ab[a * kD2 + b] * m.bc[b * kD3 + c])) / ln2;
            }
    double s = 0.0;
    for (double v : g.full)
        s += v;
    g.mean = s / kCells;
    double ss = 0.0;
    for (int i = 0; i < kCells; ++i) {
        g.projected[i] = g.full[i] - g.mean;
        ss += g.projected[i] * g.projected[i];
    }
    g.projected_norm = std::sqrt(ss);
    g.sd = std::sqrt(ss / kCells);
    return g;
}

std::vector<double> cmi_hessian(const JointDist& p) {
    check_positive(p);
    Marginals<double> m = marginals<double>(p.p);
    const double ln2 = std::log(2.0);
    std::vector<double> h(static_cast<std::size_t>(kCells) * kCells, 0.0);
    for (int i = 0; i < kCells; ++i) {
        const int a = i / 100, b = (i / 10) % 10, c = i % 10;
        double* row = &h[static_cast<std::size_t>(i) * kCells];
        for (int j = 0; j < kCells; ++j) {
            const int d = j / 100, e = (j / 10) % 10, f = j % 10;
            if (b != e)
                continue;
            double v = 1.0 / m.b[b];
            if (a == d)
                v -= 1.0 / m.ab[a * kD2 + b];
            if (c == f)
                v -= 1.0 / m.bc[b * kD3 + c];
            if (i == j)
                v += 1.0 / p.p[i];
            row[j] = v / ln2;
        }
    }
    return h;
}

CellVector hessian_apply(const JointDist& p, const CellVector& v) {
    check_positive(p);
    Marginals<double> m = marginals<double>(p.p);
    Marginals<double> mv = marginals<double>(v);
    const double ln2 = std::log(2.0);
    CellVector out{};
    for (int a = 0; a < kD1; ++a)
        for (int b = 0; b < kD2; ++b)
            for (int c = 0; c < kD3; ++c) {
                int i = idx(a, b, c);
                out[i] = (v[i] / p.p[i] + mv.b[b] / m.b[b] - mv.ab[a * kD2 + b] / m.ab[a * kD2 + b] -
                          mv.bc[b * kD3 + c] / m.bc[b * kD3 + c]) /
                         ln2;
            }
    return out;
}

HessianSpectrum cmi_hessian_spectrum(const JointDist& p, double eps_rel, bool with_vectors,
                                     bool with_full_space) {
    using Matrix = Eigen::MatrixXd;
    std::vector<double> raw = cmi_hessian(p);
    const int n = kCells;
    Matrix h = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        raw.data(), n, n);

    // Householder reflector Q with Q e_0 = 1/sqrt(n); columns 1..n-1 span the tangent space.
    Eigen::VectorXd u = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(double(n)));
    u(0) -= 1.0;
    u.normalize();
    Eigen::VectorXd hu = h * u;
    const double uhu = u.dot(hu);
    Matrix qhq = h - 2.0 * u * hu.transpose() - 2.0 * hu * u.transpose() + 4.0 * uhu * u * u.transpose();
    Matrix t = qhq.bottomRightCorner(n - 1, n - 1);
    t = 0.5 * (t + t.transpose());

    Eigen::SelfAdjointEigenSolver<Matrix> solver(t, with_vectors ? Eigen::ComputeEigenvectors
                                                                 : Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw NumericError("tangent-space eigensolver did not converge");

    HessianSpectrum s;
    const Eigen::VectorXd& ev = solver.eigenvalues();
    s.eigenvalues.assign(ev.data(), ev.data() + ev.size());
    s.lambda_min = s.eigenvalues.front();
    s.lambda_max = s.eigenvalues.back();
    s.op_norm = std::max(std::fabs(s.lambda_min), std::fabs(s.lambda_max));
    s.eps_eig = eps_rel * s.op_norm;
    for (double v : s.eigenvalues) {
        if (v > s.eps_eig)
            ++s.n_pos;
        else if (v < -s.eps_eig)
            ++s.n_neg;
        else
            ++s.n_null;
    }

    if (with_vectors) {
        // Map back: v = Q [0; w].
        Matrix w = Matrix::Zero(n, n - 1);
        w.bottomRows(n - 1) = solver.eigenvectors();
        Matrix v = w - 2.0 * u * (u.transpose() * w);
        s.eigenvectors.assign(v.data(), v.data() + v.size());
    }

    if (with_full_space) {
        Eigen::SelfAdjointEigenSolver<Matrix> full(h, Eigen::EigenvaluesOnly);
        if (full.info() != Eigen::Success)
            throw NumericError("full-space eigensolver did not converge");
        s.full_lambda_min = full.eigenvalues()(0);
        s.full_lambda_max = full.eigenvalues()(n - 1);
        s.full_op_norm = std::max(std::fabs(s.full_lambda_min), std::fabs(s.full_lambda_max));
    }
    return s;
}

QuadraticRatios quadratic_ratios(const JointDist& pn, const JointDist& p, double i_inf) {
    QuadraticRatios r;
    r.delta_norm = l2_distance(pn, p);
    if (r.delta_norm == 0.0)
        throw NumericError("quadratic ratio undefined for zero displacement");
    const double d2 = r.delta_norm * r.delta_norm;
    r.quad_ratio = (cmi(pn) - i_inf) / d2;
    Gradient g = cmi_gradient(p);
    double lin = 0.0;
    for (int i = 0; i < kCells; ++i)
        lin += g.full[i] * (pn.p[i] - p.p[i]);
    r.linear_ratio = std::fabs(lin) / d2;
    return r;
}

} // namespace bcmi
