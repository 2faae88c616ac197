#include "fsqkd/random.hpp"

#include <cmath>
#include <numbers>

namespace fsqkd {

namespace {
inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}
}

RandomSource::RandomSource(std::uint64_t seed) : seed_(seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
}

std::uint64_t RandomSource::next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double RandomSource::next_double() {
    return u64_to_unit_double(next_u64());
}

double RandomSource::next_unit_open() {
    return 1.0 - next_double();
}

bool RandomSource::bernoulli(double p) {
    return next_double() < p;
}

double RandomSource::gaussian() {
    const double u1 = next_unit_open();
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double RandomSource::exponential(double rate) {
    return -std::log(next_unit_open()) / rate;
}

std::uint64_t RandomSource::poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean < 30.0) {
        // inversion by sequential search
        const double l = std::exp(-mean);
        double p = 1.0;
        std::uint64_t k = 0;
        do {
            ++k;
            p *= next_double();
        } while (p > l);
        return k - 1;
    }
    // PTRS transformed rejection (Hormann 1993)
    const double b = 0.931 + 2.53 * std::sqrt(mean);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double log_mean = std::log(mean);
    for (;;) {
        const double u = next_double() - 0.5;
        const double v = next_double();
        const double us = 0.5 - std::abs(u);
        const double kd = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= v_r) return static_cast<std::uint64_t>(kd);
        if (kd < 0.0 || (us < 0.013 && v > us)) continue;
        const double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
        const double rhs = kd * log_mean - mean - std::lgamma(kd + 1.0);
        if (lhs <= rhs) return static_cast<std::uint64_t>(kd);
    }
}

RandomSource RandomSource::derive(std::uint64_t tag) const {
    return RandomSource(mix64(seed_, tag));
}

} // namespace fsqkd
