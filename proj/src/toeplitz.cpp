#include "fsqkd/postproc.hpp"

#include <stdexcept>

namespace fsqkd {

BitVec toeplitz_seed(std::size_t key_len, std::size_t out_len, RandomSource& rng) {
    const std::size_t bits = key_len + out_len == 0 ? 0 : key_len + out_len - 1;
    BitVec seed(bits);
    for (auto& w : seed.words()) w = rng.next_u64();
    if (bits & 63) seed.words().back() &= (1ULL << (bits & 63)) - 1;
    return seed;
}

BitVec toeplitz_pa(const BitVec& key, std::size_t out_len, const BitVec& seed) {
    const std::size_t n = key.size();
    if (out_len > n)
        throw std::invalid_argument("toeplitz_pa: output longer than input");
    if (out_len == 0) return BitVec(0);
    if (seed.size() != n + out_len - 1)
        throw std::invalid_argument("toeplitz_pa: seed must hold n + l - 1 bits");

    // out[j] = XOR_i seed[j - i + n - 1] key[i] = (key * seed)[n - 1 + j]
    const BitVec prod = gf2_poly_mul(key, seed);
    BitVec out(out_len);
    for (std::size_t j = 0; j < out_len; ++j)
        if (prod.get(n - 1 + j)) out.set(j, true);
    return out;
}

bool verify_correctness(const BitVec& alice, const BitVec& bob, std::uint64_t hash_seed) {
    if (alice.size() != bob.size())
        throw std::invalid_argument("verify_correctness: length mismatch");
    if (alice.empty()) return true;

    // XOR of per-chunk Toeplitz tags with independent seeds; still a
    // 2-universal family on the whole string, and keeps the convolution
    // cost linear in the key length.
    constexpr std::size_t kChunk = 1u << 16;
    RandomSource rng = RandomSource(hash_seed).derive(rng_tag::kVerify);
    std::uint64_t tag_a = 0, tag_b = 0;
    for (std::size_t lo = 0; lo < alice.size(); lo += kChunk) {
        const std::size_t len = std::min(kChunk, alice.size() - lo);
        const std::size_t tag_bits = std::min<std::size_t>(kVerifyTagBits, len);
        BitVec seed = toeplitz_seed(len, tag_bits, rng);
        const BitVec ta = toeplitz_pa(alice.slice(lo, len), tag_bits, seed);
        const BitVec tb = toeplitz_pa(bob.slice(lo, len), tag_bits, seed);
        tag_a ^= ta.words().empty() ? 0 : ta.words()[0];
        tag_b ^= tb.words().empty() ? 0 : tb.words()[0];
    }
    return tag_a == tag_b;
}

} // namespace fsqkd
