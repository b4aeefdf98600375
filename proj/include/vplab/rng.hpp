#pragma once

#include <array>
#include <cstdint>
#include <limits>

#include "vplab/types.hpp"

namespace vplab {

/// What a random stream is used for. Distinct tags give disjoint streams for
/// the same (master seed, trial index).
enum class StreamPurpose : std::uint32_t {
    micro_initial = 1,
    reference_ensemble = 2,
    proxy = 3,
    projections = 4,
    bootstrap = 5,
    monte_carlo = 6,
    audit = 7,
    property = 8,
};

struct StreamKey {
    std::uint64_t master_seed = 0;
    std::uint64_t index = 0;
    StreamPurpose purpose = StreamPurpose::monte_carlo;

    friend bool operator==(const StreamKey&, const StreamKey&) = default;
};

/// Philox4x32-10 counter-based generator. The 64-bit key is the master seed;
/// the upper half of the 128-bit counter encodes (index, purpose), the lower
/// half counts blocks. Satisfies UniformRandomBitGenerator.
class Philox4x32 {
  public:
    using result_type = std::uint32_t;

    explicit Philox4x32(const StreamKey& key);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    /// Raw block function, exposed for known-answer tests.
    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter,
                                              std::array<std::uint32_t, 2> key);

  private:
    void refill();

    std::array<std::uint32_t, 2> key_{};
    std::array<std::uint32_t, 4> counter_{};
    std::array<std::uint32_t, 4> buffer_{};
    unsigned next_ = 4;
};

/// Bit-reproducible variates on top of Philox. All conversions are explicit
/// so results do not depend on the standard library's distributions.
class RandomStream {
  public:
    explicit RandomStream(const StreamKey& key) : engine_(key) {}

    std::uint64_t next_u64();
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Uniform on (0, 1].
    double uniform_open_low() { return 1.0 - uniform(); }
    /// Standard normal, Box-Muller (both variates of a pair are used).
    double normal();
    Vec3 normal3() { return {normal(), normal(), normal()}; }
    /// Uniform direction on the unit sphere.
    Vec3 unit_vector();
    /// Uniform in the ball of the given radius (direction + r^(1/3) radius, no rejection).
    Vec3 in_ball(double radius);
    /// Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound);

  private:
    Philox4x32 engine_;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace vplab
