#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace mess {

namespace detail {

// SplitMix64 finalizer; used for seeding and stream derivation.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace detail

/// Deterministic 64-bit random stream (xoshiro256++), seeded via SplitMix64.
/// The same seed and call sequence produce the same variates on every
/// platform; all distribution transforms are implemented in this library
/// rather than delegated to implementation-defined std:: facilities.
class RngStream {
  public:
    using result_type = std::uint64_t;

    explicit RngStream(std::uint64_t seed = 0) : seed_(seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = detail::splitmix64(sm);
    }

    std::uint64_t seed() const { return seed_; }

    /// Raw 64-bit output.
    std::uint64_t next() {
        const std::uint64_t result = detail::rotl64(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl64(state_[3], 45);
        return result;
    }

    static constexpr std::uint64_t min() { return 0; }
    static constexpr std::uint64_t max() { return ~std::uint64_t(0); }
    std::uint64_t operator()() { return next(); }

    /// Advance 2^128 steps; partitions the period into non-overlapping blocks.
    void jump() {
        static constexpr std::uint64_t kJump[] = {0x180ec6d33cfd0abaULL, 0xd5a61266f0c9392cULL,
                                                  0xa9582618e03fc9aaULL, 0x39abdc4529b1661cULL};
        std::uint64_t s0 = 0, s1 = 0, s2 = 0, s3 = 0;
        for (std::uint64_t word : kJump) {
            for (int b = 0; b < 64; ++b) {
                if (word & (std::uint64_t(1) << b)) {
                    s0 ^= state_[0];
                    s1 ^= state_[1];
                    s2 ^= state_[2];
                    s3 ^= state_[3];
                }
                next();
            }
        }
        state_ = {s0, s1, s2, s3};
    }

    /// Independent stream addressed by up to three indices, derived from the
    /// base seed by SplitMix64 chaining. Each chain or replication owns one.
    RngStream substream(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) const {
        return RngStream(derive_seed(seed_, a, b, c));
    }

    static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                                     std::uint64_t c = 0) {
        std::uint64_t s = seed;
        std::uint64_t h = detail::splitmix64(s);
        s ^= a + 0x9e3779b97f4a7c15ULL;
        h ^= detail::splitmix64(s);
        s ^= b + 0xbf58476d1ce4e5b9ULL;
        h ^= detail::splitmix64(s);
        s ^= c + 0x94d049bb133111ebULL;
        h ^= detail::splitmix64(s);
        return h;
    }

    /// Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1]; safe as a log() argument.
    double uniform_pos() { return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53; }

    /// Standard normal via Box-Muller.
    double normal() {
        const double u1 = uniform_pos();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

  private:
    std::array<std::uint64_t, 4> state_{};
    std::uint64_t seed_ = 0;
};

}  // namespace mess
