#pragma once

#include <cstdint>
#include <vector>

#include "fsqkd/jones.hpp"
#include "fsqkd/random.hpp"

namespace fsqkd {

enum class Intensity : std::uint8_t { mu1 = 0, mu2 = 1 };

struct ProtocolParams {
    double p_z_alice = 0.9;
    double p_mu1 = 0.7;
    double mu1_z = 0.56;
    double mu2_z = 0.27;
    double mu1_x = 0.69;
    double mu2_x = 0.33;
    double p_z_bob = 0.9;
    double clock_rate_hz = 50e6;

    void validate() const;
    double slot_period_ps() const { return 1e12 / clock_rate_hz; }
    double intensity(Basis b, Intensity k) const {
        if (b == Basis::Z) return k == Intensity::mu1 ? mu1_z : mu2_z;
        return k == Intensity::mu1 ? mu1_x : mu2_x;
    }
};

struct PulseRecord {
    std::uint64_t slot = 0;
    Basis basis = Basis::Z;
    std::uint8_t bit = 0;
    Intensity intensity = Intensity::mu1;
};

// Columnar pulse train: one byte per slot, bit0 = basis (1 = X),
// bit1 = key bit, bit2 = intensity (1 = mu2). Slots are implicit 0..n-1.
class PulseTrain {
public:
    PulseTrain() = default;
    explicit PulseTrain(std::uint64_t n_slots) : codes_(n_slots, 0) {}

    std::uint64_t size() const { return codes_.size(); }
    PulseRecord record(std::uint64_t slot) const;
    void set(std::uint64_t slot, Basis b, std::uint8_t bit, Intensity k);

    const std::vector<std::uint8_t>& codes() const { return codes_; }
    std::vector<std::uint8_t>& codes() { return codes_; }

private:
    std::vector<std::uint8_t> codes_;
};

// Alice's random tape as a pure function of (seed, slot). Each slot
// derives a private SplitMix64 stream and consumes basis, bit, intensity
// in that order, so explicit sampling, block-parallel sampling and
// random access all agree bit for bit.
class SlotTape {
public:
    SlotTape(ProtocolParams params, std::uint64_t seed)
        : params_(params), seed_(seed) { params_.validate(); }

    PulseRecord at(std::uint64_t slot) const;
    std::uint64_t seed() const { return seed_; }
    const ProtocolParams& params() const { return params_; }

private:
    ProtocolParams params_;
    std::uint64_t seed_;
};

// Materialize the tape for n_slots slots. rng supplies only the tape
// seed (rng.seed() derived with rng_tag::kTape); the draw order per slot
// is fixed by SlotTape.
PulseTrain sample_pulse_train(std::uint64_t n_slots, const ProtocolParams& params,
                              const RandomSource& rng);

// Ensemble-average photon number per pulse.
double mean_photon_number(const ProtocolParams& params);

} // namespace fsqkd
