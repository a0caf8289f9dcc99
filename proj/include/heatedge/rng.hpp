// Counter-based random number generation (Philox 4x32-10). Every normal
// draw is addressed by (seed, replicate, mode, step), so replicate-parallel
// runs and re-runs produce identical streams regardless of scheduling.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace heatedge {

namespace detail {

inline void philox_round(std::array<std::uint32_t, 4>& ctr, std::array<std::uint32_t, 2>& key) {
    constexpr std::uint64_t mul0 = 0xD2511F53ull;
    constexpr std::uint64_t mul1 = 0xCD9E8D57ull;
    const std::uint64_t p0 = mul0 * ctr[0];
    const std::uint64_t p1 = mul1 * ctr[2];
    const std::array<std::uint32_t, 4> out{
        static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
        static_cast<std::uint32_t>(p1),
        static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
        static_cast<std::uint32_t>(p0)};
    ctr = out;
    key[0] += 0x9E3779B9u;  // Weyl increments
    key[1] += 0xBB67AE85u;
}

}  // namespace detail

inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 2> key,
                                               std::array<std::uint32_t, 4> ctr) {
    for (int round = 0; round < 10; ++round) detail::philox_round(ctr, key);
    return ctr;
}

// A pair of independent N(0,1) draws for the given address, via Box-Muller
// on the 128-bit Philox output. `mode` conventionally indexes an eigenmode
// pair when bulk-filling (see normal_fill_pairwise).
inline std::array<double, 2> normal_pair(std::uint64_t seed, std::uint32_t replicate,
                                         std::uint32_t mode, std::uint32_t step) {
    const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed),
                                           static_cast<std::uint32_t>(seed >> 32)};
    const auto r = philox4x32(key, {replicate, mode, step, 0u});
    const std::uint64_t a = (static_cast<std::uint64_t>(r[0]) << 32) | r[1];
    const std::uint64_t b = (static_cast<std::uint64_t>(r[2]) << 32) | r[3];
    // u1 in (0,1], u2 in [0,1)
    const double u1 = 1.0 - static_cast<double>(a >> 11) * 0x1p-53;
    const double u2 = static_cast<double>(b >> 11) * 0x1p-53;
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    return {rad * std::cos(ang), rad * std::sin(ang)};
}

// Scalar view of the pairwise stream: the draw for eigenmode `mode` at a
// step is one component of the Philox block addressed by the mode pair.
inline double normal_draw(std::uint64_t seed, std::uint32_t replicate,
                          std::uint32_t mode, std::uint32_t step) {
    const auto z = normal_pair(seed, replicate, mode / 2, step);
    return z[mode & 1u];
}

// Fills out[0..count) with the draws for modes 0..count-1 at a fixed step,
// consuming one Philox block per mode pair.
inline void normal_fill_pairwise(std::uint64_t seed, std::uint32_t replicate,
                                 std::uint32_t step, double* out, std::size_t count) {
    std::size_t k = 0;
    for (; k + 1 < count; k += 2) {
        const auto z = normal_pair(seed, replicate, static_cast<std::uint32_t>(k / 2), step);
        out[k] = z[0];
        out[k + 1] = z[1];
    }
    if (k < count)
        out[k] = normal_pair(seed, replicate, static_cast<std::uint32_t>(k / 2), step)[0];
}

// Uniform in [0,1) addressed the same way; used by test oracles.
inline double uniform_draw(std::uint64_t seed, std::uint32_t replicate,
                           std::uint32_t mode, std::uint32_t step) {
    const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed),
                                           static_cast<std::uint32_t>(seed >> 32)};
    const auto r = philox4x32(key, {replicate, mode, step, 1u});
    const std::uint64_t a = (static_cast<std::uint64_t>(r[0]) << 32) | r[1];
    return static_cast<double>(a >> 11) * 0x1p-53;
}

}  // namespace heatedge
