#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "copsl/matrix.hpp"

namespace copsl {

// Seeded random stream. The engine is std::mt19937_64, whose output sequence
// is fixed by the C++ standard; every conversion to floating point is done
// here rather than through <random> distributions, which are not portable.
class RngStream {
public:
    static constexpr std::string_view kAlgorithmId = "mt19937_64";

    explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t next_u64() { return engine_(); }

    // [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    // (0, 1), never exactly 0 or 1.
    double uniform_open() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Standard normal via the Marsaglia polar method.
    double normal();

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Gamma(shape, 1). Marsaglia-Tsang squeeze for shape >= 1, boosted with
// U^(1/shape) for shape < 1.
double sample_gamma(RngStream& rng, double shape);

// Smallest coordinate a sampled preference may carry. MTCH divides by p_j.
inline constexpr double kMinPreference = 1e-6;

// Row b of the result is one draw from Dir(alpha), clamped below at
// kMinPreference and renormalized.
Matrix sample_preferences(RngStream& rng, std::span<const double> alpha, std::size_t batch);

// Deterministic evaluation preferences. m=2: `count` evenly spaced points.
// m=3: the simplex lattice with the largest H such that C(H+2,2) <= count.
Matrix uniform_preference_grid(std::size_t m, std::size_t count);

// Throws InputError unless p is nonnegative, finite and sums to 1 within 1e-9.
void check_preference(std::span<const double> p);

} // namespace copsl
