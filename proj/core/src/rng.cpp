#include "sfclust/rng.hpp"

#include <cmath>
#include <numbers>

namespace sfclust {

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    // u1 in (0, 1] so the log is finite
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
}

int Rng::uniform_int(int n) {
    // multiply-shift map of a 64-bit draw onto [0, n)
    const auto wide = static_cast<unsigned __int128>(gen_()) * static_cast<unsigned __int128>(n);
    return static_cast<int>(wide >> 64);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace sfclust
