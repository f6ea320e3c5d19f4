#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <vector>

namespace sshmc {

// Deterministic splitmix64 generator. Every random choice in the library goes
// through this class so that results are reproducible across platforms and
// independent of execution order. Named sub-streams are derived with
// `derive`, which hashes (seed, stream, a, b) into a fresh seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). n must be > 0.
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(next() % n); }

    // Standard normal via Box-Muller; pairs are cached.
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

    static std::uint64_t derive(std::uint64_t seed, std::string_view stream,
                                std::uint64_t a = 0, std::uint64_t b = 0) {
        std::uint64_t h = 1469598103934665603ULL ^ seed;
        for (unsigned char c : stream) {
            h = (h ^ c) * 1099511628211ULL;
        }
        h = mix(h ^ mix(a));
        h = mix(h ^ mix(b + 0x9e3779b97f4a7c15ULL));
        return h;
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_ = 0;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace sshmc
