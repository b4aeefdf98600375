#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "vplab/kernels.hpp"

using namespace vplab;

namespace {

Vec3 naive_field(const KernelSpec& spec, const std::vector<Vec3>& src, const Vec3& x, double w) {
    Vec3 s{};
    for (const auto& q : src) s += kernel_eval(spec, x - q);
    return w * s;
}

}  // namespace

TEST_CASE("kernel values") {
    const KernelSpec unit(1, 2.0, 0.0, 1);
    CHECK(kernel_eval(unit, {2, 0, 0}) == Vec3{0.25, 0, 0});
    CHECK(kernel_eval(unit, {0, 0, 0}) == Vec3{});

    const KernelSpec s16(1, 2.0, 0.25, 16);
    CHECK(s16.cutoff_radius() == doctest::Approx(0.5));
    const Vec3 k = kernel_eval(s16, {0.25, 0, 0});
    CHECK(k.x == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(k.y == 0.0);

    const KernelSpec attractive(-1, 2.0, 0.25, 16);
    CHECK(kernel_eval(attractive, {0, 3, 0}).y == doctest::Approx(-1.0 / 9.0));
}

TEST_CASE("majorant values") {
    const KernelSpec s(1, 2.0, 0.25, 16);
    CHECK(majorant_eval(s, {3, 0, 0}) == doctest::Approx(2.0));
    CHECK(majorant_eval(s, {1, 0, 0}) == doctest::Approx(8.0));
    CHECK(majorant_eval(s, {0.5, 0, 0}) == doctest::Approx(8.0));
    CHECK(majorant_eval(KernelSpec(1, 2.0, 0.25, 256), {0, 0, 0}) == doctest::Approx(64.0));
    CHECK(majorant_eval(KernelSpec(1, 2.0, 0.25, 256), {0.75, 0, 0}) == doctest::Approx(128.0));
}

TEST_CASE("spec validation") {
    CHECK_THROWS_AS(KernelSpec(2, 2.0, 0.25, 16), DomainError);
    CHECK_THROWS_AS(KernelSpec(1, 2.5, 0.25, 16), DomainError);
    CHECK_THROWS_AS(KernelSpec(1, 2.0, 1.0 / 3.0, 16), DomainError);
    CHECK_THROWS_AS(KernelSpec(1, 2.0, -0.1, 16), DomainError);
    CHECK_THROWS_AS(kernel_eval(KernelSpec(1, 2.0, 0.25, 16), {NAN, 0, 0}), DomainError);
}

TEST_CASE("lipschitz check") {
    const KernelSpec s(1, 2.0, 0.25, 16);
    auto zero = lipschitz_check(s, {3, 0, 0}, {0, 0, 0});
    CHECK(zero.lhs == 0.0);
    CHECK(zero.holds);

    auto far = lipschitz_check(s, {3, 0, 0}, {0.5, 0, 0});
    CHECK(far.lhs == doctest::Approx(1.0 / 9.0 - 1.0 / 12.25).epsilon(1e-12));
    CHECK(far.rhs == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(far.holds);

    CHECK_THROWS_AS(lipschitz_check(s, {3, 0, 0}, {1.0, 0, 0}), DomainError);

    // Just outside the cutoff the radial slope 2/|q|^3 exceeds n^{3 delta}.
    auto edge = lipschitz_check(s, {0.5, 0, 0}, {0.1, 0, 0});
    CHECK(edge.lhs == doctest::Approx(1.2222222222222223).epsilon(1e-12));
    CHECK(edge.rhs == doctest::Approx(0.8).epsilon(1e-12));
    CHECK_FALSE(edge.holds);
}

TEST_CASE("lipschitz holds away from the cutoff shell") {
    auto r = test::gen(11);
    for (double delta : {0.1, 0.25}) {
        const KernelSpec s(1, 2.0, delta, 256);
        const double rc = s.cutoff_radius();
        for (int i = 0; i < 20000; ++i) {
            const Vec3 q = r.in_ball(10.0);
            const Vec3 xi = test::cube(r, 1.999 * rc);
            const double lo = std::min(norm(q), norm(q + xi)), hi = std::max(norm(q), norm(q + xi));
            if (lo < 3.0 * rc && hi > rc) continue;
            const auto c = lipschitz_check(s, q, xi);
            REQUIRE_MESSAGE(c.holds, "q = " << q.x << "," << q.y << "," << q.z);
        }
    }
}

TEST_CASE("antisymmetry, bound and cutoff continuity") {
    auto r = test::gen(12);
    for (std::size_t n : {16u, 256u, 4096u}) {
        for (double delta : {0.0, 0.15, 0.3}) {
            const KernelSpec s(1, 2.0, delta, n);
            const double bound = std::pow(double(n), 2.0 * delta);
            for (int i = 0; i < 2000; ++i) {
                const Vec3 q = (std::exp(-6.0 * r.uniform()) * 3.0) * r.unit_vector();
                const Vec3 a = kernel_eval(s, q), b = kernel_eval(s, -q);
                CHECK(a == -b);
                CHECK(norm(a) <= bound * (1 + 1e-12));
            }
            const double rc = s.cutoff_radius();
            const Vec3 in = kernel_eval(s, {rc * (1 - 1e-12), 0, 0});
            const Vec3 out = kernel_eval(s, {rc * (1 + 1e-12), 0, 0});
            CHECK(std::abs(in.x - out.x) <= 1e-9 * bound);
        }
    }
}

TEST_CASE("potential generates the kernel") {
    const KernelSpec s(1, 2.0, 0.25, 16);
    const double rc = s.cutoff_radius();
    for (double r : {0.1, 0.3, 0.49, 0.51, 0.8, 2.0, 7.0}) {
        const double h = 1e-6 * r;
        const double slope = -(potential_eval(s, r + h) - potential_eval(s, r - h)) / (2 * h);
        CHECK(slope == doctest::Approx(kernel_eval(s, {r, 0, 0}).x).epsilon(1e-6));
    }
    CHECK(potential_eval(s, rc * (1 - 1e-13)) == doctest::Approx(potential_eval(s, rc * (1 + 1e-13))));
    CHECK(potential_eval(s, 1e6) == doctest::Approx(1e-6).epsilon(1e-9));
}

TEST_CASE("structural audit") {
    const auto report = s_alpha_delta_audit(KernelSpec(1, 2.0, 0.25, 16), 10000);
    REQUIRE(report.conditions.size() == 4);
    CHECK(report.all_passed());
    CHECK(report.estimated_c <= 1.0 + 1e-9);

    CHECK(s_alpha_delta_audit(KernelSpec(1, 2.0, 0.0, 16), 10000).all_passed());

    const KernelSpec s(1, 2.0, 0.25, 16);
    const double rc = s.cutoff_radius();
    const auto corrupted = s_alpha_delta_audit(s, 10000, 0, [&](const Vec3& q) {
        const Vec3 k = kernel_eval(s, q);
        return norm(q) < rc ? 10.0 * k : k;
    });
    CHECK_FALSE(corrupted.all_passed());
    CHECK_FALSE(corrupted.conditions[2].passed);
    CHECK(corrupted.conditions[0].passed);
}

TEST_CASE("field accumulation matches a naive sum and ignores thread count") {
    auto r = test::gen(13);
    const KernelSpec s(1, 2.0, 0.3, 100);
    std::vector<Vec3> src(103), tgt(37);
    for (auto& q : src) q = r.in_ball(1.0);
    for (auto& q : tgt) q = r.in_ball(1.2);
    tgt[0] = src[5];
    const SourceCloud cloud(src);
    std::vector<Vec3> one(tgt.size()), four(tgt.size());
    std::vector<double> maj(tgt.size());
    accumulate_field(s, cloud, tgt, 0.01, one, Execution{1});
    accumulate_field_and_majorant(s, cloud, tgt, 0.01, four, maj, Execution{4});
    for (std::size_t i = 0; i < tgt.size(); ++i) {
        CHECK(one[i] == four[i]);
        const Vec3 ref = naive_field(s, src, tgt[i], 0.01);
        CHECK(norm(one[i] - ref) <= 1e-12 * (1.0 + norm(ref)));
        double m = 0;
        for (const auto& q : src) m += majorant_eval(s, tgt[i] - q);
        CHECK(maj[i] == doctest::Approx(0.01 * m).epsilon(1e-12));
    }
}
