#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "support.hpp"
#include "vplab/transport.hpp"

using namespace vplab;

namespace {

double dist6(const Point6& a, const Point6& b) {
    double s = 0;
    for (int k = 0; k < 6; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(s);
}

struct Brute {
    double w1 = INFINITY, w2 = INFINITY, winf = INFINITY;
};

// Enumerates every permutation coupling.
Brute brute_force(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
    const std::size_t n = a.size();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Brute out;
    do {
        double s1 = 0, s2 = 0, mx = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = dist6(a.points[i], b.points[perm[i]]);
            s1 += d, s2 += d * d, mx = std::max(mx, d);
        }
        out.w1 = std::min(out.w1, s1 / double(n));
        out.w2 = std::min(out.w2, std::sqrt(s2 / double(n)));
        out.winf = std::min(out.winf, mx);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return out;
}

double exact(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p) {
    WassersteinOptions o;
    o.exact_max_n = std::max<std::size_t>(a.size(), 2048);
    return wasserstein_p(a, b, p, WassersteinMode::exact, o).value;
}

PhaseState shifted(const PhaseState& s, const Vec3& dq, const Vec3& dp) {
    PhaseState out = s;
    for (auto& q : out.q) q += dq;
    for (auto& p : out.p) p += dp;
    return out;
}

}  // namespace

TEST_CASE("exact solvers agree with brute force") {
    auto r = test::gen(41);
    for (int instance = 0; instance < 60; ++instance) {
        const std::size_t n = 1 + r.below(6);
        const auto a = test::random_cloud(r, n);
        const auto b = test::random_cloud(r, n, 1.5);
        const Brute bf = brute_force(a, b);
        CHECK(exact(a, b, 1.0) == doctest::Approx(bf.w1).epsilon(1e-12));
        CHECK(exact(a, b, 2.0) == doctest::Approx(bf.w2).epsilon(1e-12));
        CHECK(wasserstein_inf(a, b) == doctest::Approx(bf.winf).epsilon(1e-12));
    }
}

TEST_CASE("metric examples") {
    EmpiricalMeasure a, b;
    a.points = {{0, 0, 0, 0, 0, 0}, {1, 0, 0, 0, 0, 0}};
    b.points = {{1.1, 0, 0, 0, 0, 0}, {0.1, 0, 0, 0, 0, 0}};
    CHECK(wasserstein_inf(a, b) == doctest::Approx(0.1));
    CHECK(exact(a, b, 2.0) == doctest::Approx(0.1));
    CHECK(exact(a, a, 1.0) == 0.0);

    EmpiricalMeasure x, y;
    x.points = {{1, 2, 3, 4, 5, 6}};
    y.points = {{1, 2, 3, 4, 5, 8}};
    CHECK(exact(x, y, 1.0) == doctest::Approx(2.0));
    CHECK(wasserstein_inf(x, y) == doctest::Approx(2.0));

    CHECK_THROWS_AS(exact(a, x, 1.0), DomainError);
    CHECK_THROWS_AS(wasserstein_inf(a, x), DomainError);
    CHECK_THROWS_AS(wasserstein_p(a, b, 0.5, WassersteinMode::exact), DomainError);
    WassersteinOptions tight;
    tight.exact_max_n = 1;
    CHECK_THROWS_AS(wasserstein_p(a, b, 1.0, WassersteinMode::exact, tight), DomainError);
    CHECK(wasserstein_p(a, x, 1.0, WassersteinMode::sliced).approximate);
}

TEST_CASE("delta metric and deviations") {
    PhaseState psi(55);
    const PhaseState phi = shifted(psi, {0.5, 0, 0}, {0, 0, -0.25});
    CHECK(delta_metric(psi, phi, 55) == doctest::Approx(std::sqrt(std::log(55.0)) * 0.5 + 0.25).epsilon(1e-14));
    CHECK(delta_metric(psi, phi, 55) == doctest::Approx(1.2508).epsilon(1e-4));
    CHECK(position_deviation(psi, phi) == 0.5);
    CHECK(momentum_deviation(psi, phi) == 0.25);
    CHECK(matched_sup_distance(psi, phi) == doctest::Approx(std::sqrt(0.3125)));
    CHECK(delta_metric(psi, psi, 55) == 0.0);
    CHECK_THROWS_AS(delta_metric(psi, PhaseState(3), 55), DomainError);
    CHECK_THROWS_AS(delta_metric(psi, phi, 3), DomainError);
}

TEST_CASE("matched coupling bounds every W_p") {
    auto r = test::gen(42);
    for (int k = 0; k < 40; ++k) {
        const std::size_t n = 2 + r.below(60);
        const PhaseState psi = test::random_state(r, n);
        PhaseState phi = psi;
        const double eps = 0.01 + r.uniform();
        for (std::size_t i = 0; i < n; ++i) {
            // perturbation of Euclidean size at most eps in R^6
            const Vec3 a = r.in_ball(eps / std::sqrt(2.0)), b = r.in_ball(eps / std::sqrt(2.0));
            phi.q[i] += a;
            phi.p[i] += b;
        }
        for (double p : {1.0, 2.0}) {
            const auto m = matched_bound_check(psi, phi, p);
            CHECK(m.holds);
            CHECK(m.w <= eps * (1 + 1e-9));
            CHECK(m.bound == doctest::Approx(matched_sup_distance(psi, phi)));
        }
    }
    // A relabelled copy is at distance 0 although the identity coupling is not.
    PhaseState a(2), b(2);
    a.q[1] = {1, 0, 0};
    b.q[0] = {1, 0, 0};
    const auto m = matched_bound_check(a, b, 2.0);
    CHECK(m.w == 0.0);
    CHECK(m.bound == 1.0);
}

TEST_CASE("ordering, symmetry and the triangle inequality") {
    auto r = test::gen(43);
    for (int k = 0; k < 200; ++k) {
        const std::size_t n = 1 + r.below(40);
        const auto a = test::random_cloud(r, n), b = test::random_cloud(r, n, 2.0), c = test::random_cloud(r, n);
        const double w1 = exact(a, b, 1.0), w2 = exact(a, b, 2.0), wi = wasserstein_inf(a, b);
        CHECK(w1 <= w2 * (1 + 1e-12));
        CHECK(w2 <= wi * (1 + 1e-12));
        CHECK(exact(b, a, 2.0) == doctest::Approx(w2).epsilon(1e-12));
        CHECK(exact(a, c, 2.0) <= w2 + exact(b, c, 2.0) + 1e-12);
    }
}

TEST_CASE("Kantorovich duality lower bound") {
    auto r = test::gen(44);
    for (int k = 0; k < 30; ++k) {
        const std::size_t n = 2 + r.below(63);
        const auto a = test::random_cloud(r, n), b = test::random_cloud(r, n, 1.5);
        const double w1 = exact(a, b, 1.0);
        // f = min_j (c_j + |x - y_j|) is 1-Lipschitz for any offsets c_j.
        for (int trial = 0; trial < 5; ++trial) {
            std::vector<double> off(n);
            for (auto& o : off) o = r.uniform();
            auto f = [&](const Point6& x) {
                double v = INFINITY;
                for (std::size_t j = 0; j < n; ++j) v = std::min(v, off[j] + dist6(x, b.points[j]));
                return v;
            };
            double diff = 0;
            for (std::size_t i = 0; i < n; ++i) diff += f(a.points[i]) - f(b.points[i]);
            CHECK(diff / double(n) <= w1 + 1e-12);
        }
    }
}

TEST_CASE("assignment solver") {
    const std::vector<double> zero(16, 0.0);
    const auto z = solve_assignment(zero, 4);
    CHECK(z.assignment == std::vector<std::size_t>{0, 1, 2, 3});

    auto r = test::gen(45);
    for (int k = 0; k < 20; ++k) {
        const std::size_t n = 1 + r.below(50);
        std::vector<double> c(n * n);
        for (auto& v : c) v = double(r.below(5));
        const auto m = solve_assignment(c, n);
        std::vector<bool> used(n, false);
        double total = 0;
        for (std::size_t i = 0; i < n; ++i) {
            CHECK_FALSE(used[m.assignment[i]]);
            used[m.assignment[i]] = true;
            total += c[i * n + m.assignment[i]];
            CHECK(m.row_potential[i] + m.column_potential[m.assignment[i]] ==
                  doctest::Approx(c[i * n + m.assignment[i]]));
            for (std::size_t j = 0; j < n; ++j) CHECK(m.row_potential[i] + m.column_potential[j] <= c[i * n + j] + 1e-9);
        }
        CHECK(total == doctest::Approx(m.total_cost));
    }
    CHECK_THROWS_AS(solve_assignment(zero, 3), DomainError);

    // Ties: the lexicographically first optimal permutation, by enumeration.
    for (int k = 0; k < 200; ++k) {
        const std::size_t n = 1 + r.below(6);
        std::vector<double> c(n * n);
        for (auto& v : c) v = double(r.below(3));
        std::vector<std::size_t> perm(n), best;
        std::iota(perm.begin(), perm.end(), 0);
        double best_cost = INFINITY;
        do {
            double t = 0;
            for (std::size_t i = 0; i < n; ++i) t += c[i * n + perm[i]];
            if (t < best_cost) best_cost = t, best = perm;
        } while (std::next_permutation(perm.begin(), perm.end()));
        CHECK(solve_assignment(c, n).assignment == best);
    }
}

TEST_CASE("bipartite matching") {
    CHECK(hopcroft_karp(3, 3, {{0}, {0}, {1, 2}}) == 2);
    CHECK(hopcroft_karp(3, 3, {{0, 1}, {0}, {1, 2}}) == 3);
    CHECK(hopcroft_karp(2, 1, {{}, {}}) == 0);
}

TEST_CASE("sliced estimates") {
    auto r = test::gen(46);
    const auto a = test::random_cloud(r, 100), b = test::random_cloud(r, 100, 1.4);
    WassersteinOptions o;
    o.seed = 9;
    const double s1 = wasserstein_p(a, b, 2.0, WassersteinMode::sliced, o).value;
    CHECK(s1 == wasserstein_p(a, b, 2.0, WassersteinMode::sliced, o).value);
    // projections are 1-Lipschitz
    CHECK(s1 <= exact(a, b, 2.0));

    auto spread = [&](std::size_t projections) {
        double lo = INFINITY, hi = 0;
        for (std::uint64_t seed = 0; seed < 8; ++seed) {
            WassersteinOptions opt;
            opt.projections = projections;
            opt.seed = seed;
            const double v = wasserstein_p(a, b, 2.0, WassersteinMode::sliced, opt).value;
            lo = std::min(lo, v), hi = std::max(hi, v);
        }
        return hi - lo;
    };
    CHECK(spread(2048) < 0.25 * spread(16));

    EmpiricalMeasure line_a, line_b;
    line_a.points = {{0, 0, 0, 0, 0, 0}};
    line_b.points = {{0, 0, 0, 0, 0, 0}};
    CHECK(wasserstein_p(line_a, line_b, 1.0, WassersteinMode::sliced).value == 0.0);
}
