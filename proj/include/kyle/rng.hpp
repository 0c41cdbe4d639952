#ifndef KYLE_RNG_HPP
#define KYLE_RNG_HPP

#include <cmath>
#include <cstdint>

namespace kyle {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
}  // namespace detail

/**
 * xoshiro256** seeded through splitmix64. Each (master_seed, path_index,
 * channel) triple derives its own state, so substreams are reproducible
 * bit-for-bit and statistically independent of each other.
 */
class NormalStream {
public:
    NormalStream(std::uint64_t master_seed, std::uint64_t path_index, std::uint64_t channel) {
        std::uint64_t mix = master_seed;
        (void)detail::splitmix64(mix);
        mix ^= 0x632be59bd9b4e019ULL * (path_index + 1);
        (void)detail::splitmix64(mix);
        mix ^= 0x9e6c63d0876a9a47ULL * (channel + 1);
        for (auto& word : state_) word = detail::splitmix64(mix);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform on (0, 1), never exactly 0.
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via the Marsaglia polar method (one spare cached).
    double next_normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * next_uniform() - 1.0;
            v = 2.0 * next_uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4] = {};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Seed contract: hands out deterministic independent substreams keyed by
/// path index. Channel 0 drives the signal noise, channel 1 the order-flow
/// noise, so deviation strategies see common random numbers.
struct RngContract {
    std::uint64_t master_seed = 0;

    NormalStream stream(std::uint64_t path_index, std::uint64_t channel = 0) const {
        return NormalStream(master_seed, path_index, channel);
    }
};

}  // namespace kyle

#endif
