#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

namespace fsqkd {

// Packed bitstream, LSB-first within each 64-bit word (bit i lives at
// words()[i/64] >> (i%64)). Keys, Toeplitz seeds and GF(2) polynomials
// all use this layout.
class BitVec {
public:
    BitVec() = default;
    explicit BitVec(std::size_t nbits) : n_(nbits), w_((nbits + 63) / 64, 0) {}

    std::size_t size() const { return n_; }
    bool empty() const { return n_ == 0; }

    bool get(std::size_t i) const {
        return (w_[i >> 6] >> (i & 63)) & 1u;
    }
    void set(std::size_t i, bool v) {
        const std::uint64_t m = 1ULL << (i & 63);
        if (v) w_[i >> 6] |= m; else w_[i >> 6] &= ~m;
    }
    void flip(std::size_t i) { w_[i >> 6] ^= 1ULL << (i & 63); }
    void push_back(bool v) {
        if ((n_ & 63) == 0) w_.push_back(0);
        if (v) w_[n_ >> 6] |= 1ULL << (n_ & 63);
        ++n_;
    }

    const std::vector<std::uint64_t>& words() const { return w_; }
    std::vector<std::uint64_t>& words() { return w_; }

    std::uint64_t popcount() const;
    // parity of bits [lo, hi)
    bool range_parity(std::size_t lo, std::size_t hi) const;
    BitVec slice(std::size_t lo, std::size_t len) const;

    void xor_with(const BitVec& other);     // sizes must match
    bool operator==(const BitVec& o) const;

    std::uint64_t count_diff(const BitVec& other) const;

private:
    std::size_t n_ = 0;
    std::vector<std::uint64_t> w_;
};

// Carry-less polynomial multiply over GF(2), coefficient i = bit i.
// out must hold na + nb words; uses Karatsuba above a small base.
void gf2_poly_mul(const std::uint64_t* a, std::size_t na,
                  const std::uint64_t* b, std::size_t nb,
                  std::uint64_t* out);

BitVec gf2_poly_mul(const BitVec& a, const BitVec& b);

} // namespace fsqkd
