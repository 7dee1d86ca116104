#pragma once

#include <array>
#include <cstdint>

namespace zq {

// splitmix64 finalizer, used both as a seed expander and as the mixing
// function for deriving independent per-trial streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t mix64(std::uint64_t x) {
    std::uint64_t s = x;
    return splitmix64(s);
}

/// xoshiro256++ generator. Small, fast, and reproducible; every trial owns
/// a private instance so streams never interact.
class Xoshiro256pp {
  public:
    Xoshiro256pp() : Xoshiro256pp(0x853c49e6748fea9bull) {}

    explicit Xoshiro256pp(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1), 53 random bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    std::array<std::uint64_t, 4> state() const { return s_; }
    void set_state(const std::array<std::uint64_t, 4>& s) { s_ = s; }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::array<std::uint64_t, 4> s_{};
};

/// Key for an independent, replayable substream. Trials are keyed by
/// (master seed, N, replicate); episode-style estimators key by episode
/// index. Derivation is order-free so sweeps can run rows in any order.
inline std::uint64_t derive_stream_key(std::uint64_t master, std::uint64_t a,
                                       std::uint64_t b = 0) {
    std::uint64_t k = mix64(master ^ 0x6a09e667f3bcc908ull);
    k = mix64(k ^ a * 0x9e3779b97f4a7c15ull);
    k = mix64(k ^ b * 0xc2b2ae3d27d4eb4full);
    return k;
}

inline Xoshiro256pp make_stream(std::uint64_t master, std::uint64_t a,
                                std::uint64_t b = 0) {
    return Xoshiro256pp(derive_stream_key(master, a, b));
}

} // namespace zq
