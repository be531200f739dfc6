#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace kcm::rng {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

namespace detail {
constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

constexpr void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}
}  // namespace detail

// Philox4x32 with 10 rounds.
constexpr Counter philox4x32(Counter c, Key k) {
    for (int r = 0; r < 10; ++r) {
        std::uint32_t hi0 = 0, lo0 = 0, hi1 = 0, lo1 = 0;
        detail::mulhilo(detail::kMul0, c[0], hi0, lo0);
        detail::mulhilo(detail::kMul1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += detail::kWeyl0;
        k[1] += detail::kWeyl1;
    }
    return c;
}

constexpr Key seed_key(std::uint64_t seed) {
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

// 52-bit double strictly inside (0,1); m + 0.5 stays exact, so the top value is 1 - 2^-53.
constexpr double open_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t m = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 12;
    return (static_cast<double>(m) + 0.5) * 0x1.0p-52;
}

struct Pair {
    double u0;
    double u1;
};

// Two uniforms for (seed, site, stream, index); site is taken modulo 2^32.
constexpr Pair uniform_pair(std::uint64_t seed, std::uint32_t site, std::uint32_t stream, std::uint64_t index) {
    const Counter out = philox4x32({site, stream, static_cast<std::uint32_t>(index),
                                    static_cast<std::uint32_t>(index >> 32)},
                                   seed_key(seed));
    return {open_unit(out[0], out[1]), open_unit(out[2], out[3])};
}

constexpr double uniform(std::uint64_t seed, std::uint32_t site, std::uint32_t stream, std::uint64_t index) {
    return uniform_pair(seed, site, stream, index).u0;
}

// Sequential counter-mode engine; usable with <random> distributions.
class Stream {
public:
    using result_type = std::uint64_t;

    constexpr Stream(std::uint64_t seed, std::uint64_t stream_id = 0)
        : key_(seed_key(seed)), id_(stream_id) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() {
        if (have_ == 0) {
            buf_ = philox4x32({static_cast<std::uint32_t>(ctr_), static_cast<std::uint32_t>(ctr_ >> 32),
                               static_cast<std::uint32_t>(id_), static_cast<std::uint32_t>(id_ >> 32) ^ 0x5EEDu},
                              key_);
            ++ctr_;
            have_ = 2;
        }
        const int i = 2 - have_--;
        return (static_cast<std::uint64_t>(buf_[2 * i]) << 32) | buf_[2 * i + 1];
    }

    // Uniform on (0,1).
    constexpr double unit() {
        const std::uint64_t v = (*this)();
        return open_unit(static_cast<std::uint32_t>(v >> 32), static_cast<std::uint32_t>(v));
    }

private:
    Key key_;
    std::uint64_t id_;
    std::uint64_t ctr_ = 0;
    Counter buf_{};
    int have_ = 0;
};

}  // namespace kcm::rng
