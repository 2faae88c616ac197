#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "fsqkd/bitvec.hpp"
#include "fsqkd/random.hpp"

namespace fsqkd {

// h(q) = -q log2 q - (1-q) log2 (1-q), h(0) = h(1) = 0.
double binary_entropy(double q);

struct ReconciliationReport {
    std::uint64_t leaked_bits = 0;      // parity bits disclosed by the reference side
    std::uint64_t passes = 0;
    std::uint64_t corrected_errors = 0;
    double f_ec_measured = 0;           // leaked / (n h(q_true)); 0 when q_true = 0
    bool reconciled = true;             // full-key parity check at the end
};

struct CascadeConfig {
    std::uint64_t session_seed = 1;
    int extra_passes = 2;          // passes beyond the block-size ladder, at the cap size
    std::size_t block_cap = 1u << 16;
    double qber_floor = 1e-4;      // guards the first block size for tiny estimates
};

// Messages of the reconciliation protocol. Only Alice's replies carry
// parity information; Bob sends block indices and ranges.
struct CascadeMessages {
    virtual ~CascadeMessages() = default;
    virtual std::vector<std::uint8_t> block_parities(int pass) = 0;   // one bit per block
    virtual int range_parity(int pass, std::uint64_t lo, std::uint64_t hi) = 0;
    virtual int total_parity() = 0;
    virtual std::uint64_t parity_bits_sent() const = 0;
};

// Pass permutations and block geometry. Derived deterministically from
// the shared session seed, so it is public randomness; both parties may
// hold the same immutable instance.
class CascadePermutations {
public:
    CascadePermutations(std::size_t n, double qber_estimate, const CascadeConfig& cfg);
    ~CascadePermutations();
    struct Impl;
    const Impl& impl() const { return *impl_; }

private:
    std::shared_ptr<const Impl> impl_;
};

// Reference-side party. Owns the true key; answers parity queries over
// its pass-permuted key. Shares no mutable state with Bob; only the
// message interface and the public session geometry.
class CascadeAlice : public CascadeMessages {
public:
    CascadeAlice(const BitVec& key, const CascadeConfig& cfg, double qber_estimate);
    CascadeAlice(const BitVec& key, const CascadePermutations& perms);
    std::vector<std::uint8_t> block_parities(int pass) override;
    int range_parity(int pass, std::uint64_t lo, std::uint64_t hi) override;
    int total_parity() override;
    std::uint64_t parity_bits_sent() const override { return sent_; }

private:
    struct Impl;
    std::shared_ptr<Impl> impl_;
    std::uint64_t sent_ = 0;
};

// Interactive error correction. Bob drives; the corrected key and the
// leakage accounting come back in the report.
std::pair<BitVec, ReconciliationReport>
cascade_correct(const BitVec& alice, const BitVec& bob, double qber_estimate,
                const CascadeConfig& cfg = {});

// Same protocol against an externally supplied reference party (lets the
// message channel be instrumented or remoted).
std::pair<BitVec, ReconciliationReport>
cascade_correct_with(CascadeMessages& alice, const BitVec& bob, double qber_estimate,
                     const CascadeConfig& cfg);

// Pass/block geometry shared by both parties.
std::vector<std::size_t> cascade_block_sizes(std::size_t n, double qber_estimate,
                                             const CascadeConfig& cfg);

// 64-bit Toeplitz-tag comparison; collision probability 2^-64 < eps_cor.
bool verify_correctness(const BitVec& alice, const BitVec& bob, std::uint64_t hash_seed);
inline constexpr std::uint64_t kVerifyTagBits = 64;

// Toeplitz privacy amplification: out[j] = XOR_i seed[j - i + n - 1] key[i].
// seed must hold key.size() + out_len - 1 bits. Carry-less convolution
// under the hood; bit-for-bit equal to the naive matrix product.
BitVec toeplitz_pa(const BitVec& key, std::size_t out_len, const BitVec& seed);

// Draw a Toeplitz seed of the right length from a seeded stream.
BitVec toeplitz_seed(std::size_t key_len, std::size_t out_len, RandomSource& rng);

} // namespace fsqkd
