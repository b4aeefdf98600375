#pragma once

#include <vector>

#include "vplab/rng.hpp"
#include "vplab/types.hpp"

namespace vplab::test {

inline RandomStream gen(std::uint64_t index) { return RandomStream({2024, index, StreamPurpose::property}); }

inline Vec3 cube(RandomStream& r, double half) {
    return {(2.0 * r.uniform() - 1.0) * half, (2.0 * r.uniform() - 1.0) * half, (2.0 * r.uniform() - 1.0) * half};
}

inline PhaseState random_state(RandomStream& r, std::size_t n, double q_half = 1.0, double p_half = 1.0) {
    PhaseState s(n);
    for (std::size_t i = 0; i < n; ++i) {
        s.q[i] = cube(r, q_half);
        s.p[i] = cube(r, p_half);
    }
    return s;
}

inline EmpiricalMeasure random_cloud(RandomStream& r, std::size_t n, double half = 1.0) {
    EmpiricalMeasure m;
    m.points.resize(n);
    for (auto& pt : m.points) {
        for (double& c : pt) c = (2.0 * r.uniform() - 1.0) * half;
    }
    return m;
}

}  // namespace vplab::test
