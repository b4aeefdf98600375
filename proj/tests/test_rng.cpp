#include <doctest.h>

#include <cmath>
#include <set>

#include "vplab/rng.hpp"

using namespace vplab;

TEST_CASE("philox known answers") {
    using A4 = std::array<std::uint32_t, 4>;
    CHECK(Philox4x32::block({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(Philox4x32::block({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(Philox4x32::block({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and keyed") {
    RandomStream a({7, 3, StreamPurpose::micro_initial});
    RandomStream b({7, 3, StreamPurpose::micro_initial});
    RandomStream c({7, 3, StreamPurpose::reference_ensemble});
    RandomStream d({7, 4, StreamPurpose::micro_initial});
    RandomStream e({8, 3, StreamPurpose::micro_initial});
    int same_c = 0, same_d = 0, same_e = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto x = a.next_u64();
        CHECK(x == b.next_u64());
        same_c += x == c.next_u64();
        same_d += x == d.next_u64();
        same_e += x == e.next_u64();
    }
    CHECK(same_c == 0);
    CHECK(same_d == 0);
    CHECK(same_e == 0);
}

TEST_CASE("uniform and normal moments") {
    RandomStream r({1, 0, StreamPurpose::property});
    const int n = 200000;
    double su = 0, su2 = 0, sn = 0, sn2 = 0, sn4 = 0;
    double umin = 1, umax = 0;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        umin = std::min(umin, u);
        umax = std::max(umax, u);
        su += u;
        su2 += u * u;
        const double z = r.normal();
        sn += z;
        sn2 += z * z;
        sn4 += z * z * z * z;
    }
    CHECK(umin >= 0.0);
    CHECK(umax < 1.0);
    CHECK(su / n == doctest::Approx(0.5).epsilon(0.005));
    CHECK(su2 / n == doctest::Approx(1.0 / 3.0).epsilon(0.005));
    CHECK(std::abs(sn / n) < 5.0 / std::sqrt(double(n)));
    CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.01));
    CHECK(sn4 / n == doctest::Approx(3.0).epsilon(0.03));
}

TEST_CASE("directions and balls") {
    RandomStream r({2, 0, StreamPurpose::property});
    const int n = 100000;
    Vec3 mean{};
    int inner = 0;
    for (int i = 0; i < n; ++i) {
        const Vec3 u = r.unit_vector();
        CHECK(std::abs(norm(u) - 1.0) < 1e-14);
        mean += u;
        const Vec3 b = r.in_ball(2.0);
        CHECK(norm(b) <= 2.0);
        inner += norm(b) < 1.0;
    }
    CHECK(norm((1.0 / n) * mean) < 0.02);
    // P(|x| < R/2) = 1/8
    CHECK(double(inner) / n == doctest::Approx(0.125).epsilon(0.03));
}

TEST_CASE("bounded integers are unbiased") {
    RandomStream r({3, 0, StreamPurpose::property});
    const std::uint64_t bound = 7;
    std::array<int, 7> hist{};
    const int n = 70000;
    for (int i = 0; i < n; ++i) {
        const auto k = r.below(bound);
        REQUIRE(k < bound);
        ++hist[k];
    }
    double chi2 = 0;
    for (int h : hist) chi2 += (h - 10000.0) * (h - 10000.0) / 10000.0;
    CHECK(chi2 < 22.5);  // 6 dof, p = 0.001
}
