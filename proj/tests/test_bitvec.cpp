#include <doctest.h>

#include "fsqkd/bitvec.hpp"
#include "fsqkd/random.hpp"

using namespace fsqkd;

namespace {
BitVec random_bits(std::size_t n, RandomSource& rng) {
    BitVec v(n);
    for (auto& w : v.words()) w = rng.next_u64();
    if (n & 63) v.words().back() &= (1ULL << (n & 63)) - 1;
    return v;
}

// quadratic schoolbook multiply straight from the definition
BitVec mul_naive(const BitVec& a, const BitVec& b) {
    if (a.empty() || b.empty()) return BitVec(0);
    BitVec out(a.size() + b.size() - 1);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a.get(i)) continue;
        for (std::size_t j = 0; j < b.size(); ++j)
            if (b.get(j)) out.flip(i + j);
    }
    return out;
}
}

TEST_CASE("range parity matches bit loop") {
    RandomSource rng(17);
    const BitVec v = random_bits(517, rng);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t lo = static_cast<std::size_t>(rng.next_double() * 517);
        std::size_t hi = lo + static_cast<std::size_t>(rng.next_double() * (517 - lo));
        bool ref = false;
        for (std::size_t i = lo; i < hi; ++i) ref ^= v.get(i);
        CHECK(v.range_parity(lo, hi) == ref);
    }
}

TEST_CASE("gf2 multiply agrees with the quadratic definition") {
    RandomSource rng(4242);
    for (std::size_t na : {1u, 63u, 64u, 65u, 500u, 2048u, 5000u}) {
        const BitVec a = random_bits(na, rng);
        const BitVec b = random_bits((na * 7) % 4096 + 1, rng);
        CHECK(gf2_poly_mul(a, b) == mul_naive(a, b));
    }
}

TEST_CASE("gf2 multiply crosses the karatsuba threshold consistently") {
    RandomSource rng(5);
    const BitVec a = random_bits(64 * 40, rng);   // above the schoolbook base
    const BitVec b = random_bits(64 * 40, rng);
    CHECK(gf2_poly_mul(a, b) == mul_naive(a, b));
}

TEST_CASE("slice and count_diff") {
    RandomSource rng(9);
    BitVec v = random_bits(300, rng);
    const BitVec s = v.slice(37, 130);
    for (std::size_t i = 0; i < 130; ++i) CHECK(s.get(i) == v.get(37 + i));
    BitVec w = v;
    w.flip(5);
    w.flip(299);
    CHECK(v.count_diff(w) == 2);
}
