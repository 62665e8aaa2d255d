#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace pairlink {

// Self-contained xoshiro256** generator. The standard <random> distributions
// are implementation-defined, so everything here is hand-rolled to keep
// seeded runs bit-identical across platforms and standard libraries.
class Rng {
public:
    explicit Rng(uint64_t seed)
    {
        // splitmix64 expansion of the seed into the four state words.
        uint64_t x = seed;
        for (auto& word : state_)
            word = splitmix64(x);
    }

    uint64_t next_u64()
    {
        const uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform()
    {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p)
    {
        return uniform() < p;
    }

    // Exponential with the given rate; rate must be > 0.
    double exponential(double rate)
    {
        return -std::log1p(-uniform()) / rate;
    }

    // Standard normal via the Marsaglia polar method; the spare value is
    // cached, so draws cost one log/sqrt per two samples.
    double normal01()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    double normal(double mean, double sigma)
    {
        return mean + sigma * normal01();
    }

    static uint64_t splitmix64(uint64_t& x)
    {
        uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    static uint64_t rotl(uint64_t x, int k)
    {
        return (x << k) | (x >> (64 - k));
    }

    std::array<uint64_t, 4> state_ {};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Deterministic, order-independent substream derivation: the stream for a
// given (seed, tag) pair depends only on those two values, never on how many
// draws any other stage consumed. Tags name pipeline stages and channels,
// e.g. "pairgen/p0" or "dark.ch1/p12".
inline uint64_t substream_seed(uint64_t master_seed, std::string_view tag)
{
    // FNV-1a over the tag, folded into the master seed, then finalized with
    // two splitmix rounds.
    uint64_t h = 0xCBF29CE484222325ULL ^ master_seed;
    for (const char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    uint64_t x = h;
    Rng::splitmix64(x);
    return Rng::splitmix64(x);
}

inline Rng substream(uint64_t master_seed, std::string_view tag)
{
    return Rng(substream_seed(master_seed, tag));
}

} // namespace pairlink
