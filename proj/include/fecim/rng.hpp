#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace fecim {

// Counter-based random streams. Every sampled element in a simulation gets
// its own stream derived from (seed, id0, id1, ...), so parallel and serial
// runs produce bit-identical draws no matter how work is scheduled.

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

inline std::uint64_t derive_key(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
    std::uint64_t h = mix64(seed + kGolden);
    for (std::uint64_t id : ids) {
        h = mix64(h ^ mix64(id + kGolden));
    }
    return h;
}

class RngStream {
public:
    explicit RngStream(std::uint64_t key) : state_(key) {}

    std::uint64_t next_u64() {
        state_ += kGolden;
        return mix64(state_);
    }

    // Uniform in (0, 1].
    double next_unit() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1p-53;
    }

    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_unit();
        const double u2 = next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * M_PI * u2;
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return r * std::cos(t);
    }

private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

inline RngStream substream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
    return RngStream(derive_key(seed, ids));
}

} // namespace fecim
