#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "fsqkd/bitvec.hpp"
#include "fsqkd/channel.hpp"
#include "fsqkd/protocol.hpp"

namespace fsqkd {

struct NoLockError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SyncState {
    double offset_ps = 0;       // phase of the slot centers, in [0, slot_period)
    double drift = 0;           // seconds per second
    double slot_period_ps = 0;
    double pps_anchor_ps = 0;   // timestamp of the first PPS marker
    double contrast = 0;        // folded-histogram peak / mean
};

// PPS-anchored clock recovery: coarse drift from the PPS spacing, fine
// phase from the folded histogram (bin = tdc resolution), then a linear
// drift refit over per-second segments. Throws NoLockError when the
// folded histogram contrast is below 3.
SyncState recover_clock(std::span<const TimeTag> tags, double nominal_period_ps,
                        double tdc_resolution_ps = 81.0);

struct SlotClick {
    std::uint64_t slot = 0;
    std::uint8_t channel = 0;
};

// Keeps tags whose folded phase lies within +-window/2 of the recovered
// slot center (closed interval) and annotates them with the slot index.
// PPS markers are dropped.
std::vector<SlotClick> window_filter(std::span<const TimeTag> tags, const SyncState& sync,
                                     double window_s);

// Random discard equalizing detector efficiencies within each basis;
// keep probability = eta_min(basis) / eta_channel.
std::vector<SlotClick> balance_efficiency(std::span<const SlotClick> clicks,
                                          const std::array<double, 4>& efficiency,
                                          RandomSource& rng);

// At most one detection per slot: same-basis multiples pick uniformly,
// cross-basis multiples pick a basis uniformly first. Input must be
// slot-sorted.
std::vector<SlotClick> resolve_double_clicks(std::span<const SlotClick> clicks,
                                             RandomSource& rng);

struct DecoyCounts {
    std::uint64_t n_z_mu1 = 0, n_z_mu2 = 0;
    std::uint64_t m_z_mu1 = 0, m_z_mu2 = 0;
    std::uint64_t n_x_mu1 = 0, n_x_mu2 = 0;
    std::uint64_t m_x_mu1 = 0, m_x_mu2 = 0;
    double duration_s = 0;

    std::uint64_t n_z() const { return n_z_mu1 + n_z_mu2; }
    std::uint64_t m_z() const { return m_z_mu1 + m_z_mu2; }
    std::uint64_t n_x() const { return n_x_mu1 + n_x_mu2; }
    std::uint64_t m_x() const { return m_x_mu1 + m_x_mu2; }
    double qber_z() const { return n_z() ? double(m_z()) / double(n_z()) : 0.0; }
    double qber_x() const { return n_x() ? double(m_x()) / double(n_x()) : 0.0; }
    void validate() const;
};

struct SiftResult {
    BitVec alice_bits;
    BitVec bob_bits;
    DecoyCounts counts;
};

// Streaming sifter: feed resolved detections in slot order; basis
// matches become key bits (Z) or error tallies (X).
class Sifter {
public:
    explicit Sifter(std::function<PulseRecord(std::uint64_t)> alice)
        : alice_(std::move(alice)) {}

    void feed(std::span<const SlotClick> detections);
    SiftResult take() { return std::move(result_); }
    const DecoyCounts& counts() const { return result_.counts; }
    const SiftResult& peek() const { return result_; }

private:
    std::function<PulseRecord(std::uint64_t)> alice_;
    SiftResult result_;
    std::uint64_t last_slot_ = 0;
    bool any_ = false;
};

SiftResult sift(const PulseTrain& alice, std::span<const SlotClick> detections);
SiftResult sift(const SlotTape& alice, std::span<const SlotClick> detections);

} // namespace fsqkd
