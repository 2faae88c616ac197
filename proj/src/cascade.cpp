#include "fsqkd/postproc.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace fsqkd {

std::vector<std::size_t> cascade_block_sizes(std::size_t n, double qber_estimate,
                                             const CascadeConfig& cfg) {
    const double q = std::max(qber_estimate, cfg.qber_floor);
    std::size_t k1 = 8;
    while (k1 < cfg.block_cap && static_cast<double>(k1) < 1.0 / q) k1 <<= 1;
    k1 = std::min(k1, cfg.block_cap);
    std::vector<std::size_t> sizes;
    for (std::size_t k = k1; k < cfg.block_cap && k < n; k *= 4) sizes.push_back(k);
    const std::size_t cap = std::min(cfg.block_cap, std::max<std::size_t>(n / 2, 1));
    for (int i = 0; i < 1 + cfg.extra_passes; ++i) sizes.push_back(cap);
    return sizes;
}

// permuted position -> original index, plus the inverse, per pass
struct CascadePermutations::Impl {
    std::vector<std::size_t> sizes;
    std::vector<std::vector<std::uint32_t>> perm;
    std::vector<std::vector<std::uint32_t>> pos_of;
};

CascadePermutations::CascadePermutations(std::size_t n, double qber_estimate,
                                         const CascadeConfig& cfg) {
    auto impl = std::make_shared<Impl>();
    impl->sizes = cascade_block_sizes(n, qber_estimate, cfg);
    const std::size_t passes = impl->sizes.size();
    impl->perm.resize(passes);
    impl->pos_of.resize(passes);
    for (std::size_t p = 0; p < passes; ++p) {
        auto& perm = impl->perm[p];
        perm.resize(n);
        for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<std::uint32_t>(i);
        if (p > 0) {
            RandomSource rng = RandomSource(cfg.session_seed).derive(rng_tag::kCascade).derive(p);
            for (std::size_t i = n - 1; i > 0; --i) {
                const std::size_t j =
                    static_cast<std::size_t>(rng.next_double() * static_cast<double>(i + 1));
                std::swap(perm[i], perm[std::min(j, i)]);
            }
        }
        auto& pos = impl->pos_of[p];
        pos.resize(n);
        for (std::size_t i = 0; i < n; ++i) pos[perm[i]] = static_cast<std::uint32_t>(i);
    }
    impl_ = std::move(impl);
}

CascadePermutations::~CascadePermutations() = default;

namespace {

bool permuted_range_parity(const BitVec& key, const std::vector<std::uint32_t>& perm,
                           std::uint64_t lo, std::uint64_t hi) {
    bool par = false;
    for (std::uint64_t i = lo; i < hi; ++i) par ^= key.get(perm[i]);
    return par;
}

} // namespace

struct CascadeAlice::Impl {
    BitVec key;
    CascadePermutations perms;
};

CascadeAlice::CascadeAlice(const BitVec& key, const CascadeConfig& cfg, double qber_estimate)
    : CascadeAlice(key, CascadePermutations(key.size(), qber_estimate, cfg)) {}

CascadeAlice::CascadeAlice(const BitVec& key, const CascadePermutations& perms) {
    impl_ = std::make_shared<Impl>(Impl{key, perms});
}

std::vector<std::uint8_t> CascadeAlice::block_parities(int pass) {
    const auto& geo = impl_->perms.impl();
    const auto& perm = geo.perm[pass];
    const std::size_t k = geo.sizes[pass];
    const std::size_t n = impl_->key.size();
    const std::size_t nblocks = (n + k - 1) / k;
    std::vector<std::uint8_t> out(nblocks);
    for (std::size_t b = 0; b < nblocks; ++b)
        out[b] = permuted_range_parity(impl_->key, perm, b * k, std::min(n, (b + 1) * k));
    sent_ += nblocks;
    return out;
}

int CascadeAlice::range_parity(int pass, std::uint64_t lo, std::uint64_t hi) {
    sent_ += 1;
    return permuted_range_parity(impl_->key, impl_->perms.impl().perm[pass], lo, hi);
}

int CascadeAlice::total_parity() {
    sent_ += 1;
    return impl_->key.popcount() & 1;
}

namespace {

std::pair<BitVec, ReconciliationReport>
run_bob(CascadeMessages& alice, const BitVec& bob, const CascadePermutations::Impl& geo) {
    const std::size_t n = bob.size();
    const auto& sizes = geo.sizes;

    BitVec key = bob;
    ReconciliationReport rep;
    rep.passes = sizes.size();

    // diff[p][b] = alice parity XOR bob parity, maintained under flips
    std::vector<std::vector<std::uint8_t>> diff(sizes.size());
    std::set<std::pair<int, std::uint64_t>> queue;   // (pass, block), smallest blocks first

    auto flip_bit = [&](std::uint32_t orig, int upto_pass) {
        key.flip(orig);
        ++rep.corrected_errors;
        for (int p = 0; p <= upto_pass; ++p) {
            const std::uint64_t b = geo.pos_of[p][orig] / sizes[p];
            diff[p][b] ^= 1;
            if (diff[p][b]) queue.insert({p, b});
            else queue.erase({p, b});
        }
    };

    auto binary_search_block = [&](int p, std::uint64_t block, int upto_pass) {
        const std::size_t k = sizes[p];
        std::uint64_t lo = block * k;
        std::uint64_t hi = std::min<std::uint64_t>(n, (block + 1) * k);
        while (hi - lo > 1) {
            const std::uint64_t mid = lo + (hi - lo) / 2;
            const bool a = alice.range_parity(p, lo, mid);
            const bool b = permuted_range_parity(key, geo.perm[p], lo, mid);
            if (a != b) hi = mid; else lo = mid;
        }
        flip_bit(geo.perm[p][lo], upto_pass);
    };

    for (std::size_t pass = 0; pass < sizes.size(); ++pass) {
        const std::size_t k = sizes[pass];
        const std::size_t nblocks = (n + k - 1) / k;
        const std::vector<std::uint8_t> alice_par = alice.block_parities(static_cast<int>(pass));
        rep.leaked_bits += nblocks;
        diff[pass].assign(nblocks, 0);
        for (std::size_t b = 0; b < nblocks; ++b) {
            const bool mine =
                permuted_range_parity(key, geo.perm[pass], b * k, std::min(n, (b + 1) * k));
            diff[pass][b] = alice_par[b] ^ static_cast<std::uint8_t>(mine);
            if (diff[pass][b]) queue.insert({static_cast<int>(pass), b});
        }
        while (!queue.empty()) {
            const auto [p, b] = *queue.begin();
            const std::uint64_t leaked_before = alice.parity_bits_sent();
            binary_search_block(p, b, static_cast<int>(pass));
            rep.leaked_bits += alice.parity_bits_sent() - leaked_before;
        }
    }

    const bool alice_total = alice.total_parity();
    rep.leaked_bits += 1;
    rep.reconciled = (alice_total == static_cast<bool>(key.popcount() & 1)) && queue.empty();

    const double q_true = n ? static_cast<double>(rep.corrected_errors) / static_cast<double>(n) : 0.0;
    rep.f_ec_measured =
        q_true > 0 ? static_cast<double>(rep.leaked_bits) /
                         (static_cast<double>(n) * binary_entropy(q_true))
                   : 0.0;
    return {key, rep};
}

void check_qber_estimate(double qber_estimate) {
    if (!(qber_estimate > 0.0 && qber_estimate <= 0.11))
        throw std::invalid_argument("cascade_correct: QBER estimate must lie in (0, 0.11]");
}

} // namespace

std::pair<BitVec, ReconciliationReport>
cascade_correct_with(CascadeMessages& alice, const BitVec& bob, double qber_estimate,
                     const CascadeConfig& cfg) {
    check_qber_estimate(qber_estimate);
    if (bob.size() == 0) return {bob, {}};
    const CascadePermutations perms(bob.size(), qber_estimate, cfg);
    return run_bob(alice, bob, perms.impl());
}

std::pair<BitVec, ReconciliationReport>
cascade_correct(const BitVec& alice, const BitVec& bob, double qber_estimate,
                const CascadeConfig& cfg) {
    if (alice.size() != bob.size())
        throw std::invalid_argument("cascade_correct: length mismatch");
    check_qber_estimate(qber_estimate);
    if (bob.size() == 0) return {bob, {}};
    const CascadePermutations perms(bob.size(), qber_estimate, cfg);
    CascadeAlice party(alice, perms);
    return run_bob(party, bob, perms.impl());
}

} // namespace fsqkd
