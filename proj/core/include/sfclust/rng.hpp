#pragma once

#include <cstdint>
#include <random>

namespace sfclust {

/// Deterministic random source. mt19937_64 is fully specified by the C++
/// standard; the variate transforms below are written out explicitly (instead
/// of std::*_distribution) so streams are identical across standard library
/// implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t raw() { return gen_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller; variates come in deterministic pairs.
    double normal();

    /// Uniform integer in [0, n), n >= 1.
    int uniform_int(int n);

    /// In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
            std::swap(v[static_cast<std::size_t>(i)],
                      v[static_cast<std::size_t>(uniform_int(i + 1))]);
        }
    }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Decorrelated child seed for stream `stream` of a base seed (splitmix64 mix).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace sfclust
