#include "fsqkd/bitvec.hpp"

#include <bit>
#include <cstring>
#include <stdexcept>

#ifdef FSQKD_USE_PCLMUL
#include <wmmintrin.h>
#endif

namespace fsqkd {

std::uint64_t BitVec::popcount() const {
    std::uint64_t c = 0;
    for (auto w : w_) c += std::popcount(w);
    return c;
}

bool BitVec::range_parity(std::size_t lo, std::size_t hi) const {
    if (lo >= hi) return false;
    const std::size_t wlo = lo >> 6, whi = (hi - 1) >> 6;
    std::uint64_t acc;
    if (wlo == whi) {
        std::uint64_t m = ~0ULL << (lo & 63);
        const std::size_t top = hi & 63;
        if (top) m &= (1ULL << top) - 1;
        acc = w_[wlo] & m;
    } else {
        acc = w_[wlo] & (~0ULL << (lo & 63));
        for (std::size_t w = wlo + 1; w < whi; ++w) acc ^= w_[w];
        const std::size_t top = hi & 63;
        acc ^= top ? (w_[whi] & ((1ULL << top) - 1)) : w_[whi];
    }
    return std::popcount(acc) & 1;
}

BitVec BitVec::slice(std::size_t lo, std::size_t len) const {
    BitVec out(len);
    for (std::size_t i = 0; i < len; ++i)
        if (get(lo + i)) out.set(i, true);
    return out;
}

void BitVec::xor_with(const BitVec& other) {
    if (other.n_ != n_) throw std::invalid_argument("BitVec::xor_with: size mismatch");
    for (std::size_t i = 0; i < w_.size(); ++i) w_[i] ^= other.w_[i];
}

bool BitVec::operator==(const BitVec& o) const {
    if (n_ != o.n_) return false;
    if (n_ == 0) return true;
    const std::size_t full = n_ >> 6;
    for (std::size_t i = 0; i < full; ++i)
        if (w_[i] != o.w_[i]) return false;
    const std::size_t rem = n_ & 63;
    if (rem) {
        const std::uint64_t m = (1ULL << rem) - 1;
        if ((w_[full] & m) != (o.w_[full] & m)) return false;
    }
    return true;
}

std::uint64_t BitVec::count_diff(const BitVec& other) const {
    if (other.n_ != n_) throw std::invalid_argument("BitVec::count_diff: size mismatch");
    std::uint64_t c = 0;
    const std::size_t full = n_ >> 6;
    for (std::size_t i = 0; i < full; ++i) c += std::popcount(w_[i] ^ other.w_[i]);
    const std::size_t rem = n_ & 63;
    if (rem) c += std::popcount((w_[full] ^ other.w_[full]) & ((1ULL << rem) - 1));
    return c;
}

namespace {

#ifdef FSQKD_USE_PCLMUL
inline void clmul64(std::uint64_t a, std::uint64_t b, std::uint64_t& lo, std::uint64_t& hi) {
    const __m128i r = _mm_clmulepi64_si128(_mm_set_epi64x(0, static_cast<long long>(a)),
                                           _mm_set_epi64x(0, static_cast<long long>(b)), 0);
    alignas(16) std::uint64_t out[2];
    _mm_storeu_si128(reinterpret_cast<__m128i*>(out), r);
    lo = out[0];
    hi = out[1];
}
#else
// 4-bit windowed shift-and-xor carry-less multiply.
inline void clmul64(std::uint64_t a, std::uint64_t b, std::uint64_t& lo, std::uint64_t& hi) {
    std::uint64_t tlo[16], thi[16];
    tlo[0] = 0; thi[0] = 0;
    tlo[1] = b; thi[1] = 0;
    for (int i = 2; i < 16; i += 2) {
        tlo[i] = tlo[i / 2] << 1;
        thi[i] = (thi[i / 2] << 1) | (tlo[i / 2] >> 63);
        tlo[i + 1] = tlo[i] ^ b;
        thi[i + 1] = thi[i];
    }
    lo = 0; hi = 0;
    for (int s = 60; s >= 0; s -= 4) {
        hi = (hi << 4) | (lo >> 60);
        lo <<= 4;
        const unsigned nib = (a >> s) & 0xF;
        lo ^= tlo[nib];
        hi ^= thi[nib];
    }
}
#endif

constexpr std::size_t kSchoolbookWords = 16;

void mul_schoolbook(const std::uint64_t* a, std::size_t na,
                    const std::uint64_t* b, std::size_t nb,
                    std::uint64_t* out) {
    std::memset(out, 0, (na + nb) * sizeof(std::uint64_t));
    for (std::size_t i = 0; i < na; ++i) {
        if (!a[i]) continue;
        for (std::size_t j = 0; j < nb; ++j) {
            if (!b[j]) continue;
            std::uint64_t lo, hi;
            clmul64(a[i], b[j], lo, hi);
            out[i + j] ^= lo;
            out[i + j + 1] ^= hi;
        }
    }
}

// Karatsuba on word halves; scratch sized 4*n per level is plenty.
void mul_rec(const std::uint64_t* a, const std::uint64_t* b, std::size_t n,
             std::uint64_t* out, std::uint64_t* scratch) {
    if (n <= kSchoolbookWords) {
        mul_schoolbook(a, n, b, n, out);
        return;
    }
    const std::size_t h = n / 2, r = n - h;
    std::uint64_t* asum = scratch;              // r words
    std::uint64_t* bsum = scratch + r;          // r words
    std::uint64_t* mid = scratch + 2 * r;       // 2r words
    std::uint64_t* next = scratch + 4 * r;

    for (std::size_t i = 0; i < r; ++i) {
        asum[i] = a[h + i] ^ (i < h ? a[i] : 0);
        bsum[i] = b[h + i] ^ (i < h ? b[i] : 0);
    }
    mul_rec(a, b, h, out, next);                       // low: 2h words at out
    mul_rec(a + h, b + h, r, out + 2 * h, next);       // high: 2r words
    mul_rec(asum, bsum, r, mid, next);
    for (std::size_t i = 0; i < 2 * h; ++i) mid[i] ^= out[i];
    for (std::size_t i = 0; i < 2 * r; ++i) mid[i] ^= out[2 * h + i];
    for (std::size_t i = 0; i < 2 * r; ++i) out[h + i] ^= mid[i];
}

} // namespace

void gf2_poly_mul(const std::uint64_t* a, std::size_t na,
                  const std::uint64_t* b, std::size_t nb,
                  std::uint64_t* out) {
    if (na == 0 || nb == 0) {
        std::memset(out, 0, (na + nb) * sizeof(std::uint64_t));
        return;
    }
    if (na <= kSchoolbookWords || nb <= kSchoolbookWords) {
        mul_schoolbook(a, na, b, nb, out);
        return;
    }
    // pad to a common size for the balanced recursion
    const std::size_t n = std::max(na, nb);
    std::vector<std::uint64_t> ap(n, 0), bp(n, 0), full(2 * n, 0), scratch(8 * n + 64, 0);
    std::memcpy(ap.data(), a, na * sizeof(std::uint64_t));
    std::memcpy(bp.data(), b, nb * sizeof(std::uint64_t));
    mul_rec(ap.data(), bp.data(), n, full.data(), scratch.data());
    std::memcpy(out, full.data(), (na + nb) * sizeof(std::uint64_t));
}

BitVec gf2_poly_mul(const BitVec& a, const BitVec& b) {
    BitVec out(a.size() + b.size() == 0 ? 0 : a.size() + b.size() - 1);
    if (a.size() == 0 || b.size() == 0) return out;
    std::vector<std::uint64_t> prod(a.words().size() + b.words().size(), 0);
    gf2_poly_mul(a.words().data(), a.words().size(),
                 b.words().data(), b.words().size(), prod.data());
    for (std::size_t i = 0; i < out.words().size(); ++i) out.words()[i] = prod[i];
    // mask tail
    const std::size_t rem = out.size() & 63;
    if (rem) out.words().back() &= (1ULL << rem) - 1;
    return out;
}

} // namespace fsqkd
