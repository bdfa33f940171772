#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace jobswitch {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * ctr[2];
        ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
               static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
        key[0] += W0;
        key[1] += W1;
    }
    return ctr;
}

/// Standard normals for one stream id, generated in pairs by Box-Muller.
/// Draw n of stream s depends only on (seed, s, n).
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t stream)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          lo_(static_cast<std::uint32_t>(stream)), hi_(static_cast<std::uint32_t>(stream >> 32)) {}

    double next() {
        if (have_) {
            have_ = false;
            return spare_;
        }
        const auto r = philox4x32({block_++, 0u, lo_, hi_}, key_);
        // 53-bit uniforms in (0, 1].
        const double u1 = (static_cast<double>(((std::uint64_t(r[0]) << 32) | r[1]) >> 11) + 1.0) *
                          0x1.0p-53;
        const double u2 = static_cast<double>(((std::uint64_t(r[2]) << 32) | r[3]) >> 11) * 0x1.0p-53;
        const double rad = std::sqrt(-2.0 * std::log(u1));
        const double ang = 2.0 * std::numbers::pi * u2;
        spare_ = rad * std::sin(ang);
        have_ = true;
        return rad * std::cos(ang);
    }

private:
    std::array<std::uint32_t, 2> key_;
    std::uint32_t lo_, hi_;
    std::uint32_t block_ = 0;
    double spare_ = 0.0;
    bool have_ = false;
};

}  // namespace jobswitch
