#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace mnlb {

// Splittable counter-free PRNG with platform-independent streams.
// Stream derivation hashes (base seed, label, index) so that replications
// and sub-streams are independent and reproducible bit-for-bit.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    static Rng derive(std::uint64_t base_seed, std::string_view label,
                      std::uint64_t index = 0);

    std::uint64_t next_u64();

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01();

    // Uniform in [a, b).
    double uniform(double a, double b);

    // Standard normal via Box-Muller.
    double normal();

    // Unbiased integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    // First k entries of a seeded shuffle of {0, ..., n-1}.
    std::vector<int> sample_without_replacement(int n, int k);

private:
    std::uint64_t s_[4];
};

// SplitMix64 step; used for seeding and stream derivation.
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace mnlb
