#include "copsl/sampling.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "copsl/errors.hpp"

namespace copsl {

double RngStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double scale = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * scale;
    has_spare_ = true;
    return u * scale;
}

double sample_gamma(RngStream& rng, double shape) {
    if (!(shape > 0.0) || !std::isfinite(shape))
        throw InputError("gamma shape must be positive, got " + std::to_string(shape));
    if (shape < 1.0) {
        const double boosted = sample_gamma(rng, shape + 1.0);
        return boosted * std::pow(rng.uniform_open(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = rng.normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform_open();
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) return d * v;  // squeeze
        if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
}

namespace {

// Clamped coordinates are pinned at kMinPreference; the rest are rescaled so
// the row sums to one. Repeats until no free coordinate drops below the floor.
void clamp_and_normalize(std::span<double> p) {
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    for (double& v : p) v /= total;
    std::vector<bool> pinned(p.size(), false);
    for (std::size_t pass = 0; pass <= p.size(); ++pass) {
        bool changed = false;
        for (std::size_t j = 0; j < p.size(); ++j) {
            if (!pinned[j] && p[j] < kMinPreference) {
                pinned[j] = true;
                p[j] = kMinPreference;
                changed = true;
            }
        }
        if (!changed) return;
        double free_sum = 0.0;
        std::size_t n_pinned = 0;
        for (std::size_t j = 0; j < p.size(); ++j) {
            if (pinned[j]) ++n_pinned;
            else free_sum += p[j];
        }
        const double target = 1.0 - static_cast<double>(n_pinned) * kMinPreference;
        for (std::size_t j = 0; j < p.size(); ++j)
            if (!pinned[j]) p[j] *= target / free_sum;
    }
}

} // namespace

Matrix sample_preferences(RngStream& rng, std::span<const double> alpha, std::size_t batch) {
    if (alpha.size() < 2) throw InputError("Dirichlet alpha needs at least 2 entries");
    for (double a : alpha)
        if (!(a > 0.0) || !std::isfinite(a)) throw InputError("Dirichlet alpha entries must be positive");
    if (batch == 0) throw InputError("preference batch size must be >= 1");

    Matrix prefs(batch, alpha.size());
    for (std::size_t b = 0; b < batch; ++b) {
        auto row = prefs.row(b);
        for (std::size_t j = 0; j < alpha.size(); ++j) row[j] = sample_gamma(rng, alpha[j]);
        clamp_and_normalize(row);
    }
    return prefs;
}

Matrix uniform_preference_grid(std::size_t m, std::size_t count) {
    if (count < 2) throw ConfigError("preference grid needs count >= 2");
    if (m == 2) {
        Matrix grid(count, 2);
        const double denom = static_cast<double>(count - 1);
        for (std::size_t k = 0; k < count; ++k) {
            grid(k, 0) = static_cast<double>(k) / denom;
            grid(k, 1) = static_cast<double>(count - 1 - k) / denom;
        }
        return grid;
    }
    if (m == 3) {
        if (count < 3) throw ConfigError("3-objective preference grid needs count >= 3");
        std::size_t h = 1;
        while ((h + 2) * (h + 3) / 2 <= count) ++h;
        const std::size_t n_points = (h + 1) * (h + 2) / 2;
        Matrix grid(n_points, 3);
        const double denom = static_cast<double>(h);
        std::size_t r = 0;
        for (std::size_t i = 0; i <= h; ++i) {
            for (std::size_t j = 0; j + i <= h; ++j, ++r) {
                grid(r, 0) = static_cast<double>(i) / denom;
                grid(r, 1) = static_cast<double>(j) / denom;
                grid(r, 2) = static_cast<double>(h - i - j) / denom;
            }
        }
        return grid;
    }
    throw ConfigError("preference grid supports m in {2,3}, got m=" + std::to_string(m));
}

void check_preference(std::span<const double> p) {
    double total = 0.0;
    for (double v : p) {
        if (!std::isfinite(v) || v < 0.0) throw InputError("preference entries must be finite and >= 0");
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw InputError("preference does not sum to 1 (sum=" + std::to_string(total) + ")");
}

} // namespace copsl
