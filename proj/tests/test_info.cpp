#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "bcmi/errors.hpp"
#include "bcmi/info.hpp"

using namespace bcmi;

namespace {

JointDist uniform() {
    JointDist p;
    p.p.fill(1.0 / kCells);
    return p;
}

// Random strictly positive distribution.
JointDist random_dist(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.1, 1.0);
    JointDist p;
    double s = 0.0;
    for (double& v : p.p)
        s += v = u(rng);
    for (double& v : p.p)
        v /= s;
    double partial = 0.0;
    for (int i = 0; i + 1 < kCells; ++i)
        partial += p.p[i];
    p.p[kCells - 1] = 1.0 - partial;
    return p;
}

// Unnormalized evaluation so off-simplex finite differences are possible.
long double f_ext(const JointDist& p) {
    std::array<long double, kCells> q;
    for (int i = 0; i < kCells; ++i)
        q[i] = p.p[i];
    return cmi_extended(q);
}

// Per-fiber mutual information, summed with weight P(D2 = b).
double fiber_sum(const std::array<long double, kCells>& p) {
    long double total = 0.0L;
    for (int b = 0; b < 10; ++b) {
        long double pb = 0, pa[9] = {}, pc[10] = {};
        for (int a = 0; a < 9; ++a)
            for (int c = 0; c < 10; ++c) {
                long double v = p[a * 100 + b * 10 + c];
                pb += v;
                pa[a] += v;
                pc[c] += v;
            }
        long double mi = 0.0L;
        for (int a = 0; a < 9; ++a)
            for (int c = 0; c < 10; ++c) {
                long double joint = p[a * 100 + b * 10 + c] / pb;
                if (joint > 0)
                    mi += joint * std::log2(joint / ((pa[a] / pb) * (pc[c] / pb)));
            }
        total += pb * mi;
    }
    return static_cast<double>(total);
}

double brute_star(const std::vector<double>& x) {
    const double n = static_cast<double>(x.size());
    double best = 0.0;
    for (double t0 : x) {
        for (double t : {t0, std::nextafter(t0, 2.0)}) {
            double cnt = 0;
            for (double y : x)
                if (y < t)
                    ++cnt;
            best = std::max(best, std::fabs(cnt / n - t));
        }
    }
    return best;
}

// (1/6) d^3 F[d, d, d] from F ln 2 = sum h(p) + sum h(p_.b.) - sum h(p_ab.) - sum h(p_.bc), h''' = -1/x^2.
long double cubic_term(const JointDist& p, const CellVector& d) {
    long double s = 0.0L;
    long double pb[10] = {}, db[10] = {}, pab[90] = {}, dab[90] = {}, pbc[100] = {}, dbc[100] = {};
    for (int i = 0; i < kCells; ++i) {
        int a = i / 100, b = (i / 10) % 10, c = i % 10;
        long double pi = p.p[i], di = d[i];
        s -= di * di * di / (pi * pi);
        pb[b] += pi;
        db[b] += di;
        pab[a * 10 + b] += pi;
        dab[a * 10 + b] += di;
        pbc[b * 10 + c] += pi;
        dbc[b * 10 + c] += di;
    }
    for (int b = 0; b < 10; ++b)
        s -= db[b] * db[b] * db[b] / (pb[b] * pb[b]);
    for (int k = 0; k < 90; ++k)
        s += dab[k] * dab[k] * dab[k] / (pab[k] * pab[k]);
    for (int k = 0; k < 100; ++k)
        s += dbc[k] * dbc[k] * dbc[k] / (pbc[k] * pbc[k]);
    return s / (6.0L * std::log(2.0L));
}

CellVector tangent_direction(std::mt19937_64& rng, double norm) {
    std::normal_distribution<double> g;
    CellVector v;
    for (double& x : v)
        x = g(rng);
    double mean = std::accumulate(v.begin(), v.end(), 0.0) / kCells;
    double s = 0.0;
    for (double& x : v) {
        x -= mean;
        s += x * x;
    }
    for (double& x : v)
        x *= norm / std::sqrt(s);
    return v;
}

} // namespace

TEST_CASE("uniform joint has zero CMI") {
    CHECK(std::fabs(cmi(uniform())) < 1e-12);
    CHECK(std::fabs(cmi_entropy_form(uniform())) < 1e-12);
}

TEST_CASE("ratio and entropy forms agree and are non-negative") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 50; ++i) {
        JointDist p = random_dist(rng);
        double a = cmi(p), b = cmi_entropy_form(p);
        CHECK(a >= -1e-12);
        CHECK(std::fabs(a - b) < 1e-12);
    }
    TripleCounts c = count_triples_geometric(7, 5000);
    JointDist p = JointDist::from_counts(c);
    CHECK(std::fabs(cmi(p) - cmi_entropy_form(p)) < 1e-12);
}

TEST_CASE("invalid distributions are rejected") {
    JointDist p = uniform();
    p.p[0] *= 2;
    CHECK_THROWS_AS(cmi(p), DomainError);
}

TEST_CASE("limiting CMI") {
    double v = i_infinity();
    CHECK(v >= 3.370e-5);
    CHECK(v <= 3.380e-5);
    CHECK(std::fabs(cmi(benford_joint()) - v) < 1e-12);
    CHECK(std::fabs(fiber_sum(benford_joint_extended()) - v) < 1e-12);
    CHECK(i_infinity() == v);
}

TEST_CASE("l2 distance") {
    JointDist p = benford_joint();
    CHECK(l2_distance(p, p) == 0.0);
    JointDist q = p;
    q.p[10] -= 1e-4;
    q.p[20] += 1e-4;
    CHECK(l2_distance(p, q) == doctest::Approx(1e-4 * std::sqrt(2.0)).epsilon(1e-9));
    JointDist p7 = JointDist::from_counts(count_triples_geometric(7, 510));
    CHECK(l2_distance(p7, p) >= 1e-3);
}

TEST_CASE("star discrepancy") {
    std::vector<double> one{0.5};
    CHECK(star_discrepancy(one) == doctest::Approx(0.5));
    std::vector<double> grid{0.0, 0.25, 0.5, 0.75};
    CHECK(star_discrepancy(grid) == doctest::Approx(0.25));
    CHECK_THROWS_AS(star_discrepancy(std::vector<double>{}), DomainError);

    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int s = 0; s < 200; ++s) {
        std::vector<double> x(100);
        for (double& v : x)
            v = u(rng);
        CHECK(star_discrepancy(x) == doctest::Approx(brute_star(x)).epsilon(1e-12));
    }
}

TEST_CASE("plug-in bias") {
    TripleCounts c;
    c.add(100);
    c.add(200);
    c.add(200);
    c.add(300);
    CHECK(plugin_bias_bits(c) == doctest::Approx(2.0 / (8.0 * std::log(2.0))));
}

TEST_CASE("Markov projection") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 10; ++i) {
        JointDist p = random_dist(rng);
        MarkovProjection m = markov_projection(p);
        CHECK(cmi(m.q) < 1e-12);
        MarkovProjection twice = markov_projection(m.q);
        CHECK(twice.distance < 1e-12);
        CHECK(l2_distance(twice.q, m.q) < 1e-12);
    }
    MarkovProjection u = markov_projection(uniform());
    CHECK(u.distance < 1e-15);
}

TEST_CASE("Markov projection with an empty fiber copies it") {
    JointDist p = uniform();
    for (int a = 0; a < 9; ++a)
        for (int c = 0; c < 10; ++c) {
            p.p[a * 100 + 30 + c] = 0.0;
            p.p[a * 100 + 40 + c] *= 2.0;
        }
    MarkovProjection m = markov_projection(p);
    CHECK(m.q.p[130] == 0.0);
    CHECK(cmi(m.q) < 1e-12);
}

TEST_CASE("L2-nearest Markov point") {
    JointDist p = benford_joint();
    MarkovProjection mult = markov_projection(p);
    MarkovProjection near = markov_l2_nearest(p);
    CHECK(near.distance <= mult.distance * (1 + 1e-9));
    CHECK(near.distance > 0.0);
    double s = std::accumulate(near.q.p.begin(), near.q.p.end(), 0.0);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(fiber_sum([&] {
              std::array<long double, kCells> q;
              for (int i = 0; i < kCells; ++i)
                  q[i] = near.q.p[i];
              return q;
          }()) < 1e-12);
}

TEST_CASE("gradient matches central differences") {
    JointDist p = benford_joint();
    Gradient g = cmi_gradient(p);
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> pick(0, kCells - 1);
    const double h = 1e-8;
    for (int t = 0; t < 50; ++t) {
        int i = pick(rng);
        JointDist up = p, down = p;
        up.p[i] += h;
        down.p[i] -= h;
        double fd = static_cast<double>((f_ext(up) - f_ext(down)) / (2 * h));
        CHECK(std::fabs(fd - g.full[i]) <= 1e-5 * std::fabs(g.full[i]) + 1e-10);
    }
    double s = std::accumulate(g.projected.begin(), g.projected.end(), 0.0);
    CHECK(std::fabs(s) < 1e-12);
    CHECK_THROWS_AS(cmi_gradient(JointDist{}), DomainError);
}

TEST_CASE("Hessian agrees with gradient differences and with its matrix-free form") {
    JointDist p = benford_joint();
    std::vector<double> h = cmi_hessian(p);
    std::mt19937_64 rng(5);
    const double step = 1e-9;
    for (int t = 0; t < 20; ++t) {
        CellVector v = tangent_direction(rng, 1.0);
        JointDist up = p, down = p;
        for (int i = 0; i < kCells; ++i) {
            up.p[i] += step * v[i];
            down.p[i] -= step * v[i];
        }
        Gradient gu = cmi_gradient(up), gd = cmi_gradient(down);
        CellVector hv = hessian_apply(p, v);
        double num = 0, den = 0, dense = 0;
        for (int i = 0; i < kCells; ++i) {
            double fd = (gu.full[i] - gd.full[i]) / (2 * step);
            num += (fd - hv[i]) * (fd - hv[i]);
            den += hv[i] * hv[i];
            double row = 0;
            for (int j = 0; j < kCells; ++j)
                row += h[static_cast<std::size_t>(i) * kCells + j] * v[j];
            dense = std::max(dense, std::fabs(row - hv[i]));
        }
        CHECK(std::sqrt(num / den) < 1e-4);
        CHECK(dense < 1e-8 * std::sqrt(den));
    }
    double asym = 0, scale = 0;
    for (int i = 0; i < kCells; ++i)
        for (int j = 0; j < i; ++j) {
            asym = std::max(asym, std::fabs(h[i * kCells + j] - h[j * kCells + i]));
            scale = std::max(scale, std::fabs(h[i * kCells + j]));
        }
    CHECK(asym <= 1e-10 * scale);
}

TEST_CASE("second-order Taylor expansion at the Benford point") {
    JointDist p = benford_joint();
    Gradient g = cmi_gradient(p);
    std::mt19937_64 rng(17);
    for (int t = 0; t < 10; ++t) {
        CellVector d = tangent_direction(rng, 1e-5);
        CellVector hd = hessian_apply(p, d);
        JointDist q = p;
        long double lin = 0, quad = 0;
        for (int i = 0; i < kCells; ++i) {
            q.p[i] += d[i];
            lin += static_cast<long double>(g.full[i]) * d[i];
            quad += static_cast<long double>(hd[i]) * d[i];
        }
        long double rem = f_ext(q) - f_ext(p) - lin - 0.5L * quad;
        // The remainder is the cubic term up to fourth order.
        CHECK(std::fabs(static_cast<double>(rem - cubic_term(p, d))) < 1e-13);
        CHECK(std::fabs(static_cast<double>(rem)) < 1e-11);
    }
}

TEST_CASE("tangent spectrum") {
    JointDist p = benford_joint();
    HessianSpectrum s = cmi_hessian_spectrum(p, kDefaultEpsEig, true, true);
    REQUIRE(s.eigenvalues.size() == 899);
    CHECK(s.n_pos + s.n_neg + s.n_null == 899);
    CHECK(s.op_norm == std::max(std::fabs(s.lambda_min), std::fabs(s.lambda_max)));
    CHECK(std::is_sorted(s.eigenvalues.begin(), s.eigenvalues.end()));
    CHECK(s.full_op_norm >= s.op_norm * (1 - 1e-12));
    REQUIRE(s.eigenvectors.size() == 900u * 899u);
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> pick(0, 898);
    for (int t = 0; t < 25; ++t) {
        int k = t < 2 ? (t == 0 ? 0 : 898) : pick(rng);
        CellVector v;
        std::copy_n(&s.eigenvectors[static_cast<std::size_t>(k) * 900], 900, v.begin());
        double sum = std::accumulate(v.begin(), v.end(), 0.0);
        CHECK(std::fabs(sum) < 1e-10);
        CellVector hv = hessian_apply(p, v);
        // Tangent operator: drop the component of Hv along the all-ones direction.
        double hmean = std::accumulate(hv.begin(), hv.end(), 0.0) / kCells;
        for (double& x : hv)
            x -= hmean;
        double r = 0;
        for (int i = 0; i < kCells; ++i)
            r += (hv[i] - s.eigenvalues[k] * v[i]) * (hv[i] - s.eigenvalues[k] * v[i]);
        CHECK(std::sqrt(r) < 1e-6 * s.op_norm);
    }
}

TEST_CASE("quadratic ratios") {
    JointDist p = benford_joint();
    CHECK_THROWS_AS(quadratic_ratios(p, p, i_infinity()), NumericError);
    JointDist pn = JointDist::from_counts(count_triples_geometric(2, 10000));
    QuadraticRatios r = quadratic_ratios(pn, p, i_infinity());
    CHECK(r.delta_norm == doctest::Approx(l2_distance(pn, p)));
    CHECK(r.quad_ratio > 0.0);
    CHECK(r.linear_ratio >= 0.0);
}
