// Seeded counter-based random streams for reproducible replicate-parallel
// Monte Carlo. Stream k of a master seed always produces the same sequence,
// independent of how many workers are running.

#ifndef FRAGWAVE_RNG_HPP
#define FRAGWAVE_RNG_HPP

#include <cmath>
#include <cstdint>

namespace fragwave {

// splitmix64 (Vigna): counter-based mixer, used both to derive stream keys
// and to seed the xoshiro state.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// xoshiro256++ (Blackman & Vigna, public domain reference implementation).
class Rng {
public:
    Rng(std::uint64_t master_seed, std::uint64_t stream) {
        std::uint64_t s = master_seed;
        // decorrelate streams: fold the stream index through the mixer twice
        std::uint64_t k = splitmix64(s) ^ (0xD1342543DE82EF95ull * (stream + 1));
        state_[0] = splitmix64(k);
        state_[1] = splitmix64(k);
        state_[2] = splitmix64(k);
        state_[3] = splitmix64(k);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // uniform on [0,1), 53-bit resolution
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform on (0,1]; safe argument for log()
    double uniform01_open() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    double exponential(double rate) { return -std::log(uniform01_open()) / rate; }

    // uniform on (a,b)
    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t state_[4];
};

} // namespace fragwave

#endif
