#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace svc::nn {

// Deterministic random stream for weight init, batch shuffling and latent
// noise. The raw engine is mt19937_64 (portable bit stream); gaussian and
// shuffle are implemented here rather than with std distributions, whose
// algorithms vary between standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller (cosine branch only, so one draw
    // consumes exactly two engine outputs).
    double gaussian() {
        double u1 = uniform();
        const double u2 = uniform();
        if (u1 <= 0.0)
            u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j =
                static_cast<std::size_t>(engine_() % static_cast<std::uint64_t>(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

} // namespace svc::nn
