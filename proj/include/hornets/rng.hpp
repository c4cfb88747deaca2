#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

namespace hornets {

// Deterministic PRNG: xoshiro256** seeded through splitmix64. The generator is
// fixed by hand (not std::mt19937 + distributions) so that equal seeds give
// bit-identical streams on every platform and standard library.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform double in [0, 1) with 53 random bits.
    double next_double();

    // Uniform double in [lo, hi).
    double uniform(double lo, double hi);

    // Uniform integer in [0, n), n > 0. Rejection sampling, unbiased.
    std::uint64_t uniform_int(std::uint64_t n);

    // Single Bernoulli(p) draw.
    bool bernoulli(double p);

    // Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        if (v.empty()) return;
        for (std::size_t i = v.size() - 1; i > 0; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(i + 1));
            std::swap(v[i], v[j]);
        }
    }

    // Independent child stream keyed by id; used to give folds/seeds/cells
    // their own reproducible streams.
    RngStream derive(std::uint64_t stream_id) const;

private:
    std::uint64_t state_[4];
    std::uint64_t seed_;
};

// splitmix64 step, exposed for seed mixing elsewhere.
std::uint64_t splitmix64(std::uint64_t& state);

// Stateless mix of two 64-bit values into one; used to derive per-cell seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace hornets
