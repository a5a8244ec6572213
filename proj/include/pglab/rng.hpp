#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace pglab {

// Named-stream RNG. One master seed fans out into independent streams
// ("init", "data", ...) so adding draws to one stream never perturbs another.
// mt19937_64 has a standardized output sequence and all variate transforms
// below are hand-rolled, so runs are reproducible across compilers.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Unbiased integer in [lo, hi] via rejection.
    std::uint64_t uniform_u64(std::uint64_t lo, std::uint64_t hi) {
        const std::uint64_t span = hi - lo + 1;
        if (span == 0) return eng_();  // full range
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t x = eng_();
        while (x >= limit) x = eng_();
        return lo + x % span;
    }

    std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform_u64(0, n - 1)); }

    // Box-Muller, no spare caching: the draw count per call is fixed.
    double normal(double mean = 0.0, double stddev = 1.0) {
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(6.283185307179586476925286766559 * u2);
    }

    template <typename It>
    void shuffle(It first, It last) {
        const auto n = static_cast<std::size_t>(last - first);
        for (std::size_t i = n; i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_u64(0, i - 1));
            std::swap(first[i - 1], first[j]);
        }
    }

private:
    std::mt19937_64 eng_;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

class Rng {
public:
    explicit Rng(std::uint64_t master_seed) : master_(master_seed) {}

    RngStream stream(std::string_view name) const {
        return RngStream(detail::splitmix64(master_ ^ detail::fnv1a64(name)));
    }

    // Sub-stream for per-item work, e.g. stream("data", example_index).
    RngStream stream(std::string_view name, std::uint64_t index) const {
        return RngStream(detail::splitmix64(detail::splitmix64(master_ ^ detail::fnv1a64(name)) + index));
    }

    std::uint64_t master_seed() const { return master_; }

private:
    std::uint64_t master_;
};

}  // namespace pglab
