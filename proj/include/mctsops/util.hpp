#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

namespace mctsops {

// Deterministic 64-bit generator; reproducible across platforms, unlike the
// standard distributions.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30u)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27u)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31u);
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11u) * 0x1.0p-53; }

    std::size_t index(std::size_t n) {
        const auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
        return i < n ? i : n - 1;
    }

private:
    std::uint64_t state_;
};

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0);

std::uint64_t fnv1a64(std::string_view text);
std::string hex64(std::uint64_t value);

// Shortest decimal that round-trips ("1", "0.70795", "-1.5").
std::string format_shortest(double x);

std::string trim(std::string_view text);
std::vector<std::string> split_lines(std::string_view text);
bool contains_icase(std::string_view haystack, std::string_view needle);

inline double sum(const std::vector<double>& xs) {
    return std::accumulate(xs.begin(), xs.end(), 0.0);
}

}  // namespace mctsops
