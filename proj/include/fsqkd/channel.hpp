#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "fsqkd/jones.hpp"
#include "fsqkd/protocol.hpp"
#include "fsqkd/random.hpp"

namespace fsqkd {

// Detector channel ids, also the on-disk encoding.
inline constexpr std::uint8_t kChannelZ0 = 0;      // |L>
inline constexpr std::uint8_t kChannelZ1 = 1;      // |R>
inline constexpr std::uint8_t kChannelXPlus = 2;   // |+>
inline constexpr std::uint8_t kChannelXMinus = 3;  // |->
inline constexpr std::uint8_t kChannelPps = 255;

struct TimeTag {
    std::uint64_t timestamp_ps = 0;
    std::uint8_t channel = 0;
};

// Turbulence-driven SMF coupling efficiency: stationary log-normal with
// exponential autocorrelation. mean_efficiency is the arithmetic mean of
// the sampled efficiency.
struct CouplingModel {
    double mean_efficiency = 0.04;
    double lognormal_sigma = 0.32;     // sigma of log efficiency; peak/mean ~ 2.5
    double correlation_time_s = 0.01;
    bool tip_tilt_corrected = true;

    static CouplingModel corrected() { return {}; }
    static CouplingModel uncorrected() { return {0.01, 0.32, 0.01, false}; }
};

struct LinkModel {
    double fixed_loss_optics_db = 5.0;
    double fixed_loss_analyzer_db = 5.0;
    double extra_loss_db = 0.0;
    // Total in-window noise rate at the reference window, summed over
    // detectors, as the receiver would report it (background convention:
    // the configured value is the already-windowed rate).
    double background_rate_hz = 240.0;
    CouplingModel coupling;

    void validate() const;
    double fixed_transmittance() const;   // excludes coupling
    double mean_transmittance() const;    // includes mean coupling
};

struct DetectorBank {
    std::array<double, 4> efficiency{0.85, 0.85, 0.90, 0.30};
    std::array<double, 4> dark_rate_hz{200.0, 200.0, 200.0, 10.0};
    double window_s = 1e-9;
    double reference_window_s = 1e-9;
    double tdc_resolution_s = 81e-12;
    double jitter_sigma_s = 30e-12;      // detector+TDC jitter, quadrature with pulse width
    double pulse_fwhm_s = 500e-12;

    void validate() const;
    double signal_sigma_ps() const;      // pulse sigma (+) detector jitter, in ps
};

struct ChannelConfig {
    ProtocolParams protocol;
    EncoderImperfection encoder{0.0663, 0.0938, 1.0};
    LinkModel link;
    DetectorBank detectors;
    double link_delay_ps = 0.0;          // signal path only, |delay| < slot period / 2
    double bob_clock_offset_ps = 0.0;    // shared by signal and PPS
    double bob_clock_drift = 0.0;        // seconds per second, |drift| < 1e-6

    void validate() const;
};

// Fraction of a Gaussian pulse of the given sigma captured by a centered
// window of the given width.
double gaussian_capture(double window_s, double sigma_s);

struct WindowTradeoff {
    double signal_fraction;   // erf(w / (2 sqrt2 sigma)), sigma = fwhm/2.3548
    double noise_fraction;    // w / w_reference
};
WindowTradeoff window_signal_noise_tradeoff(double window_s, double pulse_fwhm_s,
                                            double reference_window_s = 1e-9);

// Log-normal AR(1) coupling process, stepped at fixed dt.
class CouplingProcess {
public:
    CouplingProcess(const CouplingModel& model, double dt_s, RandomSource rng);
    double next(double mean_override = -1.0);   // efficiency in (0, 1]
private:
    CouplingModel model_;
    double rho_, innovation_;
    double dev_;          // AR(1) deviation of log efficiency around its mean
    RandomSource rng_;
};

std::vector<double> sample_coupling_series(double duration_s, double dt_s,
                                           const CouplingModel& model, RandomSource& rng);

// Closed-form expectations at a given acceptance window. Rate columns
// follow the receiver's reporting convention: detector efficiencies are
// divided out and the signal is quoted relative to the reference-window
// capture. Raw per-detector fields are the physical in-window rates the
// Monte Carlo converges to.
struct ExpectedRates {
    double tdr_hz = 0;
    double snr = 0;
    double qber_z = 0;
    double qber_x = 0;
    double sifted_z_bps = 0;   // renormalized, TDR * P(sent Z | detected) * p_z_bob
    double sifted_x_bps = 0;

    std::array<double, 4> signal_hz{};   // raw windowed clicks per detector
    std::array<double, 4> noise_hz{};    // raw in-window noise per detector
    // post-balance sifted rates and per-intensity splits (raw, actual bits)
    double n_z_hz = 0, m_z_hz = 0, n_x_hz = 0, m_x_hz = 0;
    double n_z_mu1_hz = 0, n_z_mu2_hz = 0, m_z_mu1_hz = 0, m_z_mu2_hz = 0;
    double n_x_mu1_hz = 0, n_x_mu2_hz = 0, m_x_mu1_hz = 0, m_x_mu2_hz = 0;
    double capture_abs = 1.0, capture_ref = 1.0;
};

ExpectedRates expected_rates(const ChannelConfig& cfg, double window_s);
inline ExpectedRates expected_rates(const ChannelConfig& cfg) {
    return expected_rates(cfg, cfg.detectors.window_s);
}

// Transparent per-slot, per-detector reference implementation operating
// on an explicit pulse train. Constant coupling at the model mean. Kept
// as the statistical oracle for the production kernels.
std::vector<TimeTag> transmit_and_detect(const PulseTrain& pulses,
                                         const std::vector<JonesVector>& states,
                                         const ProtocolParams& params,
                                         const LinkModel& link,
                                         const DetectorBank& detectors,
                                         RandomSource& rng);

// Production simulator. Time is partitioned into coupling steps
// (correlation_time/10); each step is simulated from a seed derived from
// (master_seed, step index), so output is independent of both thread
// count and chunking. Kernels:
//   serial   - step loop in order
//   openmp   - same step kernel under '#pragma omp parallel for'
//   fast     - geometric slot-skipping sampler (exact; for long runs)
// serial and openmp produce identical tag streams.
class TagStreamSimulator {
public:
    enum class Kernel { serial, openmp, fast };

    TagStreamSimulator(const ChannelConfig& cfg, std::uint64_t master_seed,
                       Kernel kernel = Kernel::openmp);

    // Advance by whole coupling steps covering at least chunk_s seconds;
    // returns time-sorted tags including PPS markers.
    std::vector<TimeTag> next_chunk(double chunk_s);

    // Time-varying scenario knobs, applied from the next chunk onward.
    void set_coupling_mean(double mean_efficiency);
    void set_background_rate(double hz);

    double time_s() const;
    std::uint64_t next_slot() const { return step_ * step_slots_; }
    const SlotTape& tape() const { return tape_; }
    double step_dt_s() const { return step_dt_s_; }

private:
    ChannelConfig cfg_;
    std::uint64_t master_seed_;
    Kernel kernel_;
    SlotTape tape_;
    std::uint64_t step_ = 0;
    std::uint64_t step_slots_;
    double step_dt_s_;
    double coupling_mean_override_ = -1.0;
    double background_override_ = -1.0;
    CouplingProcess coupling_;
    std::uint64_t emitted_pps_ = 0;
};

} // namespace fsqkd
