#include "fsqkd/protocol.hpp"

#include <stdexcept>

namespace fsqkd {

void ProtocolParams::validate() const {
    auto prob = [](double p) { return p > 0.0 && p < 1.0; };
    if (!prob(p_z_alice) || !prob(p_mu1) || !prob(p_z_bob))
        throw std::invalid_argument("ProtocolParams: probabilities must lie in (0,1)");
    if (!(mu1_z > mu2_z && mu2_z > 0.0))
        throw std::invalid_argument("ProtocolParams: need mu1_z > mu2_z > 0");
    if (!(mu1_x > mu2_x && mu2_x > 0.0))
        throw std::invalid_argument("ProtocolParams: need mu1_x > mu2_x > 0");
    if (!(clock_rate_hz > 0.0))
        throw std::invalid_argument("ProtocolParams: clock_rate must be positive");
}

PulseRecord PulseTrain::record(std::uint64_t slot) const {
    const std::uint8_t c = codes_[slot];
    return PulseRecord{slot,
                       (c & 1) ? Basis::X : Basis::Z,
                       static_cast<std::uint8_t>((c >> 1) & 1),
                       (c & 4) ? Intensity::mu2 : Intensity::mu1};
}

void PulseTrain::set(std::uint64_t slot, Basis b, std::uint8_t bit, Intensity k) {
    codes_[slot] = static_cast<std::uint8_t>((b == Basis::X ? 1 : 0) |
                                             ((bit & 1) << 1) |
                                             (k == Intensity::mu2 ? 4 : 0));
}

PulseRecord SlotTape::at(std::uint64_t slot) const {
    std::uint64_t s = mix64(seed_, slot + 1);
    const double u_basis = u64_to_unit_double(splitmix64(s));
    const double u_bit = u64_to_unit_double(splitmix64(s));
    const double u_int = u64_to_unit_double(splitmix64(s));

    PulseRecord r;
    r.slot = slot;
    r.basis = u_basis < params_.p_z_alice ? Basis::Z : Basis::X;
    r.bit = (r.basis == Basis::Z && u_bit < 0.5) ? 1 : 0;
    r.intensity = u_int < params_.p_mu1 ? Intensity::mu1 : Intensity::mu2;
    return r;
}

PulseTrain sample_pulse_train(std::uint64_t n_slots, const ProtocolParams& params,
                              const RandomSource& rng) {
    if (n_slots == 0) throw std::invalid_argument("sample_pulse_train: n_slots must be > 0");
    const SlotTape tape(params, rng.derive(rng_tag::kTape).seed());
    PulseTrain train(n_slots);
    for (std::uint64_t i = 0; i < n_slots; ++i) {
        const PulseRecord r = tape.at(i);
        train.set(i, r.basis, r.bit, r.intensity);
    }
    return train;
}

double mean_photon_number(const ProtocolParams& p) {
    p.validate();
    const double mz = p.p_mu1 * p.mu1_z + (1.0 - p.p_mu1) * p.mu2_z;
    const double mx = p.p_mu1 * p.mu1_x + (1.0 - p.p_mu1) * p.mu2_x;
    return p.p_z_alice * mz + (1.0 - p.p_z_alice) * mx;
}

} // namespace fsqkd
