#include "vplab/rng.hpp"

#include <cmath>
#include <numbers>

namespace vplab {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(prod >> 32);
    lo = static_cast<std::uint32_t>(prod);
}

}  // namespace

std::array<std::uint32_t, 4> Philox4x32::block(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

Philox4x32::Philox4x32(const StreamKey& k) {
    key_ = {static_cast<std::uint32_t>(k.master_seed), static_cast<std::uint32_t>(k.master_seed >> 32)};
    // Stream id: 56 bits of index, 8 bits of purpose.
    const std::uint64_t stream = (k.index << 8) | (static_cast<std::uint64_t>(k.purpose) & 0xFFu);
    counter_ = {0u, 0u, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
}

void Philox4x32::refill() {
    buffer_ = block(counter_, key_);
    if (++counter_[0] == 0) ++counter_[1];
    next_ = 0;
}

Philox4x32::result_type Philox4x32::operator()() {
    if (next_ >= 4) refill();
    return buffer_[next_++];
}

std::uint64_t RandomStream::next_u64() {
    const std::uint64_t lo = engine_();
    const std::uint64_t hi = engine_();
    return (hi << 32) | lo;
}

double RandomStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_normal_;
    }
    const double u1 = uniform_open_low();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_normal_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

Vec3 RandomStream::unit_vector() {
    // z uniform on [-1, 1] and uniform azimuth: exact and rejection free.
    const double z = 2.0 * uniform() - 1.0;
    const double phi = 2.0 * std::numbers::pi * uniform();
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {s * std::cos(phi), s * std::sin(phi), z};
}

Vec3 RandomStream::in_ball(double radius) {
    const Vec3 dir = unit_vector();
    return (radius * std::cbrt(uniform())) * dir;
}

std::uint64_t RandomStream::below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    // Lemire's multiply-shift with rejection of the biased low range.
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        const std::uint64_t x = next_u64();
        const unsigned __int128 m = static_cast<unsigned __int128>(x) * bound;
        if (static_cast<std::uint64_t>(m) >= threshold) return static_cast<std::uint64_t>(m >> 64);
    }
}

}  // namespace vplab
