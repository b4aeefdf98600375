#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "vplab/dynamics.hpp"
#include "vplab/sampling.hpp"

using namespace vplab;

namespace {

double max_diff(const PhaseState& a, const PhaseState& b) {
    double d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max({d, max_norm(a.q[i] - b.q[i]), max_norm(a.p[i] - b.p[i])});
    return d;
}

PhaseState blob(std::size_t n, std::uint64_t seed) {
    return sample(InitialDistribution::thermal(SpatialProfile::uniform_ball(1.0), 1.0), n,
                  {seed, n, StreamPurpose::micro_initial});
}

}  // namespace

TEST_CASE("pair and triangle forces") {
    const KernelSpec two(1, 2.0, 0.0, 2);
    PhaseState s(2);
    s.q[1] = {2, 0, 0};
    auto f = micro_force(two, s);
    CHECK(f[0].x == doctest::Approx(-0.125));
    CHECK(f[1].x == doctest::Approx(0.125));
    CHECK(f[0].y == 0.0);

    s.q[1] = s.q[0];
    f = micro_force(two, s);
    CHECK(f[0] == Vec3{});
    CHECK(f[1] == Vec3{});

    const KernelSpec three(1, 2.0, 0.0, 3);
    PhaseState tri(3);
    tri.q[1] = {1, 0, 0};
    tri.q[2] = {0.5, std::sqrt(3.0) / 2, 0};
    f = micro_force(three, tri);
    for (const auto& v : f) CHECK(norm(v) == doctest::Approx(std::sqrt(3.0) / 3.0).epsilon(1e-12));
    CHECK(norm(f[0] + f[1] + f[2]) < 1e-15);

    CHECK_THROWS_AS(micro_force(three, s), DomainError);
}

TEST_CASE("force bound and thread independence") {
    auto r = test::gen(21);
    for (double delta : {0.1, 0.3}) {
        const KernelSpec spec(1, 2.0, delta, 300);
        PhaseState s = test::random_state(r, 300, 0.3);
        s.q[7] = s.q[8];
        const auto a = micro_force(spec, s, Execution{1});
        const auto b = micro_force(spec, s, Execution{3});
        for (std::size_t i = 0; i < s.size(); ++i) {
            CHECK(a[i] == b[i]);
            CHECK(max_norm(a[i]) <= std::pow(300.0, 2 * delta));
        }
    }
}

TEST_CASE("free streaming without interaction partners") {
    const KernelSpec spec(1, 2.0, 0.25, 1);
    PhaseState s(1);
    s.q[0] = {1, 2, 3};
    s.p[0] = {0.5, -1, 2};
    const auto out = evolve(spec, s, 2.0, 0.01, {});
    REQUIRE(out.size() == 1);
    CHECK(out[0].t == doctest::Approx(2.0));
    CHECK(out[0].q[0].x == doctest::Approx(2.0));
    CHECK(out[0].q[0].y == doctest::Approx(0.0));
    CHECK(out[0].q[0].z == doctest::Approx(7.0));
    CHECK(out[0].p[0] == s.p[0]);
}

TEST_CASE("zero-length evolution returns the input") {
    const KernelSpec spec(1, 2.0, 0.3, 16);
    const PhaseState s = blob(16, 1);
    const auto out = evolve(spec, s, 0.0, 1e-3, {});
    CHECK(out[0].q == s.q);
    CHECK(out[0].p == s.p);
    CHECK_THROWS_AS(evolve(spec, s, -1.0, 1e-3, {}), DomainError);
    CHECK_THROWS_AS(evolve(spec, s, 1.0, 0.0, {}), DomainError);
}

TEST_CASE("snapshots land on the step grid") {
    const double times[] = {0.0, 0.1, 0.2501, 0.5};
    const auto plan = plan_steps(0.0, 0.5, 0.01, times);
    CHECK(plan.total_steps == 50);
    CHECK(plan.snapshot_steps == std::vector<std::size_t>{0, 10, 25, 50});

    const KernelSpec spec(1, 2.0, 0.3, 16);
    const auto out = evolve(spec, blob(16, 2), 0.5, 0.01, times);
    REQUIRE(out.size() == 4);
    CHECK(out[2].t == doctest::Approx(0.25));
}

TEST_CASE("time reversibility and momentum conservation") {
    for (int sigma : {1, -1}) {
        const KernelSpec spec(sigma, 2.0, 0.3, 64);
        const PhaseState s = blob(64, 3);
        PhaseState fwd = evolve(spec, s, 0.5, 1e-3, {}).front();
        CHECK(norm(total_momentum(fwd) - total_momentum(s)) < 1e-12);
        for (auto& p : fwd.p) p = -p;
        fwd.t = 0.0;
        PhaseState back = evolve(spec, fwd, 0.5, 1e-3, {}).front();
        for (auto& p : back.p) p = -p;
        CHECK(max_diff(back, s) < 1e-9);
    }
}

TEST_CASE("energy is conserved to second order") {
    const KernelSpec spec(1, 2.0, 0.3, 64);
    const PhaseState s = blob(64, 4);
    const double e0 = total_energy(spec, s);
    double previous = 0;
    for (double dt : {4e-3, 2e-3, 1e-3}) {
        double worst = 0;
        PhaseState z = s;
        for (int k = 0; k < 5; ++k) {
            z = evolve(spec, z, z.t + 0.1, dt, {}).front();
            worst = std::max(worst, std::abs(total_energy(spec, z) - e0) / std::abs(e0));
        }
        CHECK(worst < 1e-4);
        if (previous > 0) CHECK(previous / worst > 2.5);
        previous = worst;
    }
}

TEST_CASE("global error converges at second order") {
    const KernelSpec spec(1, 2.0, 0.2, 32);
    const PhaseState s = blob(32, 5);
    std::vector<PhaseState> finals;
    std::vector<double> log_dt, log_err;
    for (double dt : {8e-3, 4e-3, 2e-3, 1e-3, 5e-4}) finals.push_back(evolve(spec, s, 0.4, dt, {}).front());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k + 1 < finals.size(); ++k) {
        const double x = std::log(8e-3 / std::pow(2.0, double(k)));
        const double y = std::log(max_diff(finals[k], finals[k + 1]));
        sx += x, sy += y, sxx += x * x, sxy += x * y;
        MESSAGE("dt " << std::exp(x) << " successive difference " << std::exp(y));
    }
    const double m = double(finals.size() - 1);
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    CHECK(slope == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("non-finite states are reported") {
    PhaseState s(3);
    s.p[2].y = NAN;
    try {
        check_finite(s, 7, "probe");
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(e.particle() == 2);
        CHECK(e.coordinate() == 4);
        CHECK(e.step() == 7);
        CHECK(std::string(e.what()).find("particle 2") != std::string::npos);
    }

    const KernelSpec spec(1, 2.0, 0.25, 2);
    PhaseState blow(2);
    blow.q[1] = {5, 0, 0};
    blow.p[1] = {1e308, 0, 0};
    CHECK_THROWS_AS(evolve(spec, blow, 10.0, 5.0, {}), NumericalError);
}
