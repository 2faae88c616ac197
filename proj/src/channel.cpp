#include "fsqkd/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fsqkd {

namespace {
constexpr double kFwhmToSigma = 2.3548200450309493;   // 2 sqrt(2 ln 2)
constexpr double kPsPerSecond = 1e12;

inline bool tag_less(const TimeTag& a, const TimeTag& b) {
    return a.timestamp_ps != b.timestamp_ps ? a.timestamp_ps < b.timestamp_ps
                                            : a.channel < b.channel;
}
}

void LinkModel::validate() const {
    if (fixed_loss_optics_db < 0 || fixed_loss_analyzer_db < 0 || extra_loss_db < 0)
        throw std::invalid_argument("LinkModel: losses must be >= 0");
    if (background_rate_hz < 0)
        throw std::invalid_argument("LinkModel: background_rate must be >= 0");
    if (!(coupling.mean_efficiency > 0.0 && coupling.mean_efficiency <= 1.0))
        throw std::invalid_argument("LinkModel: coupling mean efficiency must be in (0,1]");
    if (coupling.lognormal_sigma < 0 || coupling.correlation_time_s <= 0)
        throw std::invalid_argument("LinkModel: bad coupling fluctuation parameters");
}

double LinkModel::fixed_transmittance() const {
    return std::pow(10.0, -(fixed_loss_optics_db + fixed_loss_analyzer_db + extra_loss_db) / 10.0);
}

double LinkModel::mean_transmittance() const {
    return fixed_transmittance() * coupling.mean_efficiency;
}

void DetectorBank::validate() const {
    for (double e : efficiency)
        if (!(e > 0.0 && e <= 1.0))
            throw std::invalid_argument("DetectorBank: efficiencies must be in (0,1]");
    for (double d : dark_rate_hz)
        if (d < 0) throw std::invalid_argument("DetectorBank: dark rates must be >= 0");
    if (!(window_s > 0) || !(reference_window_s > 0) || !(tdc_resolution_s > 0))
        throw std::invalid_argument("DetectorBank: window and resolution must be positive");
    if (jitter_sigma_s < 0 || pulse_fwhm_s <= 0)
        throw std::invalid_argument("DetectorBank: bad timing parameters");
}

double DetectorBank::signal_sigma_ps() const {
    const double sp = pulse_fwhm_s / kFwhmToSigma;
    return std::sqrt(sp * sp + jitter_sigma_s * jitter_sigma_s) * kPsPerSecond;
}

void ChannelConfig::validate() const {
    protocol.validate();
    link.validate();
    detectors.validate();
    if (std::abs(bob_clock_drift) >= 1e-6)
        throw std::invalid_argument("ChannelConfig: |clock drift| must be < 1e-6");
    if (std::abs(link_delay_ps) >= protocol.slot_period_ps() / 2)
        throw std::invalid_argument("ChannelConfig: |link delay| must be < slot period / 2");
    if (!(encoder.intensity_imbalance > 0))
        throw std::invalid_argument("ChannelConfig: intensity imbalance must be > 0");
}

double gaussian_capture(double window_s, double sigma_s) {
    if (window_s <= 0) return 0.0;
    if (sigma_s <= 0) return 1.0;
    return std::erf(window_s / (2.0 * std::sqrt(2.0) * sigma_s));
}

WindowTradeoff window_signal_noise_tradeoff(double window_s, double pulse_fwhm_s,
                                            double reference_window_s) {
    if (!(window_s > 0)) throw std::invalid_argument("window must be positive");
    const double sigma = pulse_fwhm_s / kFwhmToSigma;
    return {gaussian_capture(window_s, sigma), window_s / reference_window_s};
}

CouplingProcess::CouplingProcess(const CouplingModel& model, double dt_s, RandomSource rng)
    : model_(model), rng_(rng) {
    rho_ = std::exp(-dt_s / model.correlation_time_s);
    innovation_ = model.lognormal_sigma * std::sqrt(1.0 - rho_ * rho_);
    dev_ = model.lognormal_sigma * rng_.gaussian();   // stationary start
}

double CouplingProcess::next(double mean_override) {
    const double mean = mean_override > 0 ? mean_override : model_.mean_efficiency;
    const double s = model_.lognormal_sigma;
    const double log_mean = std::log(mean) - 0.5 * s * s;   // E[exp(N(log_mean, s))] = mean
    const double eta = std::exp(log_mean + dev_);
    dev_ = rho_ * dev_ + innovation_ * rng_.gaussian();
    return std::min(eta, 1.0);
}

std::vector<double> sample_coupling_series(double duration_s, double dt_s,
                                           const CouplingModel& model, RandomSource& rng) {
    if (!(duration_s > 0)) throw std::invalid_argument("sample_coupling_series: duration must be > 0");
    if (!(dt_s > 0) || dt_s > model.correlation_time_s / 10.0)
        throw std::invalid_argument("sample_coupling_series: need dt <= correlation_time/10");
    const std::size_t n = static_cast<std::size_t>(std::ceil(duration_s / dt_s));
    CouplingProcess proc(model, dt_s, rng.derive(rng_tag::kCoupling));
    std::vector<double> out(n);
    for (auto& v : out) v = proc.next();
    return out;
}

// ---------------------------------------------------------------------------
// Shared per-configuration tables.
//
// Pulse classes c = 3 states x 2 intensities:
//   c = 2*s + (intensity==mu2), s: 0 = (Z,bit0)->|L>, 1 = (Z,bit1)->|R>, 2 = (X,0)->|+>
// ---------------------------------------------------------------------------

namespace {

struct Precomp {
    double clock = 0, period_ps = 0;
    double prior[6] = {};
    double mu[6] = {};
    double coef[6][4] = {};              // p_basis(d) * |<d|psi_c>|^2 * eta_d
    std::array<double, 4> bg_share{};    // fraction of the in-window background per detector
    std::array<double, 4> dark_raw{};
    double duty_ref = 0;                 // reference_window * clock
    double sigma_jit_ps = 0;
    double res_ps = 0;
    double drift1 = 1.0;                 // 1 + drift
    double offset_ps = 0, delay_ps = 0;
    double fixed_trans = 0;
    double p_z_alice = 0, p_z_bob = 0, p_mu1 = 0;

    static int class_of(const PulseRecord& r) {
        const int s = r.basis == Basis::Z ? r.bit : 2;
        return 2 * s + (r.intensity == Intensity::mu2 ? 1 : 0);
    }
};

Precomp make_precomp(const ChannelConfig& cfg) {
    cfg.validate();
    Precomp pc;
    const auto& p = cfg.protocol;
    pc.clock = p.clock_rate_hz;
    pc.period_ps = p.slot_period_ps();
    pc.p_z_alice = p.p_z_alice;
    pc.p_z_bob = p.p_z_bob;
    pc.p_mu1 = p.p_mu1;

    const JonesVector det_state[4] = {states::L(), states::R(), states::plus(), states::minus()};
    const double p_basis[4] = {p.p_z_bob, p.p_z_bob, 1 - p.p_z_bob, 1 - p.p_z_bob};

    const JonesVector psi[3] = {
        command_to_state(Basis::Z, 0, cfg.encoder),
        command_to_state(Basis::Z, 1, cfg.encoder),
        command_to_state(Basis::X, 0, cfg.encoder),
    };
    const double p_state[3] = {p.p_z_alice * 0.5, p.p_z_alice * 0.5, 1 - p.p_z_alice};

    for (int s = 0; s < 3; ++s) {
        for (int k = 0; k < 2; ++k) {
            const int c = 2 * s + k;
            const Basis b = s < 2 ? Basis::Z : Basis::X;
            const Intensity in = k == 0 ? Intensity::mu1 : Intensity::mu2;
            pc.prior[c] = p_state[s] * (k == 0 ? p.p_mu1 : 1 - p.p_mu1);
            pc.mu[c] = p.intensity(b, in) * (b == Basis::X ? cfg.encoder.intensity_imbalance : 1.0);
            for (int d = 0; d < 4; ++d)
                pc.coef[c][d] = p_basis[d] * overlap2(det_state[d], psi[s]) * cfg.detectors.efficiency[d];
        }
    }

    double share_sum = 0;
    for (int d = 0; d < 4; ++d) {
        pc.bg_share[d] = p_basis[d] * 0.5 * cfg.detectors.efficiency[d];
        share_sum += pc.bg_share[d];
    }
    for (auto& s : pc.bg_share) s /= share_sum;
    pc.dark_raw = cfg.detectors.dark_rate_hz;
    pc.duty_ref = cfg.detectors.reference_window_s * pc.clock;
    pc.sigma_jit_ps = cfg.detectors.signal_sigma_ps();
    pc.res_ps = cfg.detectors.tdc_resolution_s * kPsPerSecond;
    pc.drift1 = 1.0 + cfg.bob_clock_drift;
    pc.offset_ps = cfg.bob_clock_offset_ps;
    pc.delay_ps = cfg.link_delay_ps;
    pc.fixed_trans = cfg.link.fixed_transmittance();
    return pc;
}

struct StepTables {
    double q[6] = {};             // P(>=1 click | c)
    double accept[6] = {};        // q[c] / q_max
    double q_max = 0;
    double p[6][4] = {};          // per-detector click probability given c
    double s_suffix[6][4] = {};   // P(>=1 click among d..3 | c)
    std::array<double, 4> noise_rate{};   // raw Hz per detector
    double noise_total = 0;
    std::array<double, 4> noise_cum{};
};

StepTables make_step_tables(const Precomp& pc, double eta_link, double bg_rate_hz) {
    StepTables st;
    for (int c = 0; c < 6; ++c) {
        double tail = 1.0;
        for (int d = 3; d >= 0; --d) {
            st.p[c][d] = -std::expm1(-pc.mu[c] * eta_link * pc.coef[c][d]);
            tail *= 1.0 - st.p[c][d];
            st.s_suffix[c][d] = 1.0 - tail;
        }
        st.q[c] = st.s_suffix[c][0];
        st.q_max = std::max(st.q_max, st.q[c]);
    }
    for (int c = 0; c < 6; ++c)
        st.accept[c] = st.q_max > 0 ? st.q[c] / st.q_max : 0.0;

    double cum = 0;
    for (int d = 0; d < 4; ++d) {
        st.noise_rate[d] = bg_rate_hz * pc.bg_share[d] / pc.duty_ref + pc.dark_raw[d];
        cum += st.noise_rate[d];
        st.noise_cum[d] = cum;
    }
    st.noise_total = cum;
    return st;
}

inline std::uint64_t quantize_bob_ps(double t_true_ps, const Precomp& pc) {
    const double tb = t_true_ps * pc.drift1 + pc.offset_ps;
    const double q = std::nearbyint(tb / pc.res_ps) * pc.res_ps;
    return q <= 0 ? 0 : static_cast<std::uint64_t>(q);
}

// Conditional click pattern given at least one click for class c.
template <typename Emit>
inline void emit_conditional_clicks(const StepTables& st, int c, RandomSource& rng, Emit&& emit) {
    bool any = false;
    for (int d = 0; d < 4; ++d) {
        const double pd = st.p[c][d];
        double ptake;
        if (any) {
            ptake = pd;
        } else {
            const double s = st.s_suffix[c][d];
            ptake = s > 0 ? pd / s : 0.0;
        }
        if (rng.next_double() < ptake) {
            any = true;
            emit(d);
        }
    }
}

void simulate_step_signal(const Precomp& pc, const StepTables& st, const SlotTape& tape,
                          std::uint64_t slot_begin, std::uint64_t slot_count,
                          std::uint64_t seed, std::vector<TimeTag>& out) {
    RandomSource rng(seed);
    for (std::uint64_t i = 0; i < slot_count; ++i) {
        const std::uint64_t slot = slot_begin + i;
        const int c = Precomp::class_of(tape.at(slot));
        if (rng.next_double() >= st.q[c]) continue;
        emit_conditional_clicks(st, c, rng, [&](int d) {
            const double t = (static_cast<double>(slot) + 0.5) * pc.period_ps +
                             pc.delay_ps + rng.gaussian() * pc.sigma_jit_ps;
            out.push_back({quantize_bob_ps(t, pc), static_cast<std::uint8_t>(d)});
        });
    }
}

void simulate_step_signal_fast(const Precomp& pc, const StepTables& st, const SlotTape& tape,
                               std::uint64_t slot_begin, std::uint64_t slot_count,
                               std::uint64_t seed, std::vector<TimeTag>& out) {
    if (st.q_max <= 0) return;
    RandomSource rng(seed);
    const double log1mq = std::log1p(-st.q_max);
    std::uint64_t pos = 0;
    for (;;) {
        const double gap = std::floor(std::log(rng.next_unit_open()) / log1mq);
        if (gap >= static_cast<double>(slot_count - pos)) break;
        pos += static_cast<std::uint64_t>(gap);
        const std::uint64_t slot = slot_begin + pos;
        const int c = Precomp::class_of(tape.at(slot));
        if (rng.next_double() < st.accept[c]) {
            emit_conditional_clicks(st, c, rng, [&](int d) {
                const double t = (static_cast<double>(slot) + 0.5) * pc.period_ps +
                                 pc.delay_ps + rng.gaussian() * pc.sigma_jit_ps;
                out.push_back({quantize_bob_ps(t, pc), static_cast<std::uint8_t>(d)});
            });
        }
        ++pos;
        if (pos >= slot_count) break;
    }
}

void simulate_step_noise(const Precomp& pc, const StepTables& st,
                         double step_start_ps, double step_dt_s,
                         std::uint64_t seed, std::vector<TimeTag>& out) {
    if (st.noise_total <= 0) return;
    RandomSource rng(seed);
    double t = 0;
    for (;;) {
        t += rng.exponential(st.noise_total);
        if (t >= step_dt_s) break;
        const double u = rng.next_double() * st.noise_total;
        int d = 0;
        while (d < 3 && u >= st.noise_cum[d]) ++d;
        out.push_back({quantize_bob_ps(step_start_ps + t * kPsPerSecond, pc),
                       static_cast<std::uint8_t>(d)});
    }
}

} // namespace

// ---------------------------------------------------------------------------
// Transparent reference: explicit per-slot, per-detector Bernoulli draws,
// constant coupling at the model mean.
// ---------------------------------------------------------------------------

std::vector<TimeTag> transmit_and_detect(const PulseTrain& pulses,
                                         const std::vector<JonesVector>& psi,
                                         const ProtocolParams& params,
                                         const LinkModel& link,
                                         const DetectorBank& detectors,
                                         RandomSource& rng) {
    if (psi.size() != pulses.size())
        throw std::invalid_argument("transmit_and_detect: pulses and states must align");
    params.validate();
    link.validate();
    detectors.validate();

    const double eta_link = link.mean_transmittance();
    const JonesVector det_state[4] = {states::L(), states::R(), states::plus(), states::minus()};
    const double p_basis[4] = {params.p_z_bob, params.p_z_bob,
                               1 - params.p_z_bob, 1 - params.p_z_bob};
    const double slot_ps = params.slot_period_ps();
    const double sigma_ps = detectors.signal_sigma_ps();
    const double res_ps = detectors.tdc_resolution_s * kPsPerSecond;
    const double duty_ref = detectors.reference_window_s * params.clock_rate_hz;

    double share[4], share_sum = 0;
    for (int d = 0; d < 4; ++d) {
        share[d] = p_basis[d] * 0.5 * detectors.efficiency[d];
        share_sum += share[d];
    }

    auto quant = [&](double t) {
        const double q = std::nearbyint(t / res_ps) * res_ps;
        return q <= 0 ? std::uint64_t{0} : static_cast<std::uint64_t>(q);
    };

    std::vector<TimeTag> out;
    for (std::uint64_t slot = 0; slot < pulses.size(); ++slot) {
        const PulseRecord r = pulses.record(slot);
        const double mu = params.intensity(r.basis, r.intensity);
        for (int d = 0; d < 4; ++d) {
            const double lam = mu * eta_link * p_basis[d] *
                               overlap2(det_state[d], psi[slot]) * detectors.efficiency[d];
            if (rng.bernoulli(-std::expm1(-lam))) {
                const double t = (static_cast<double>(slot) + 0.5) * slot_ps +
                                 rng.gaussian() * sigma_ps;
                out.push_back({quant(t), static_cast<std::uint8_t>(d)});
            }
        }
        for (int d = 0; d < 4; ++d) {
            const double rate = link.background_rate_hz * (share[d] / share_sum) / duty_ref +
                                detectors.dark_rate_hz[d];
            const std::uint64_t k = rng.poisson(rate * slot_ps / kPsPerSecond);
            for (std::uint64_t j = 0; j < k; ++j) {
                const double t = (static_cast<double>(slot) + rng.next_double()) * slot_ps;
                out.push_back({quant(t), static_cast<std::uint8_t>(d)});
            }
        }
    }
    std::sort(out.begin(), out.end(), tag_less);
    return out;
}

// ---------------------------------------------------------------------------
// Production simulator.
// ---------------------------------------------------------------------------

namespace {
std::uint64_t steps_slots_for(const ChannelConfig& cfg) {
    const double dt = cfg.link.coupling.correlation_time_s / 10.0;
    const auto slots = static_cast<std::uint64_t>(std::llround(dt * cfg.protocol.clock_rate_hz));
    return std::max<std::uint64_t>(1, slots);
}
}

TagStreamSimulator::TagStreamSimulator(const ChannelConfig& cfg, std::uint64_t master_seed,
                                       Kernel kernel)
    : cfg_(cfg),
      master_seed_(master_seed),
      kernel_(kernel),
      tape_(cfg.protocol, RandomSource(master_seed).derive(rng_tag::kTape).seed()),
      step_slots_(steps_slots_for(cfg)),
      step_dt_s_(static_cast<double>(steps_slots_for(cfg)) / cfg.protocol.clock_rate_hz),
      coupling_(cfg.link.coupling, static_cast<double>(steps_slots_for(cfg)) / cfg.protocol.clock_rate_hz,
                RandomSource(master_seed).derive(rng_tag::kCoupling)) {
    cfg_.validate();
}

void TagStreamSimulator::set_coupling_mean(double mean_efficiency) {
    coupling_mean_override_ = mean_efficiency;
}

void TagStreamSimulator::set_background_rate(double hz) {
    background_override_ = hz;
}

double TagStreamSimulator::time_s() const {
    return static_cast<double>(step_) * step_dt_s_;
}

std::vector<TimeTag> TagStreamSimulator::next_chunk(double chunk_s) {
    if (!(chunk_s > 0)) throw std::invalid_argument("next_chunk: duration must be > 0");
    const std::uint64_t n_steps =
        std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(chunk_s / step_dt_s_)));

    const Precomp pc = make_precomp(cfg_);
    const double bg = background_override_ >= 0 ? background_override_
                                                : cfg_.link.background_rate_hz;

    // coupling is inherently sequential; draw the step efficiencies first
    std::vector<double> eta(n_steps);
    for (auto& e : eta)
        e = pc.fixed_trans * coupling_.next(coupling_mean_override_);

    std::vector<std::vector<TimeTag>> per_step(n_steps);
    const std::uint64_t first_step = step_;

    auto run_step = [&](std::uint64_t i) {
        const std::uint64_t step = first_step + i;
        const StepTables st = make_step_tables(pc, eta[i], bg);
        const std::uint64_t slot_begin = step * step_slots_;
        auto& out = per_step[i];
        const std::uint64_t sig_seed = mix64(mix64(master_seed_, rng_tag::kSignal), step);
        const std::uint64_t noise_seed = mix64(mix64(master_seed_, rng_tag::kNoise), step);
        if (kernel_ == Kernel::fast)
            simulate_step_signal_fast(pc, st, tape_, slot_begin, step_slots_, sig_seed, out);
        else
            simulate_step_signal(pc, st, tape_, slot_begin, step_slots_, sig_seed, out);
        simulate_step_noise(pc, st, static_cast<double>(slot_begin) * pc.period_ps,
                            step_dt_s_, noise_seed, out);
    };

    if (kernel_ == Kernel::openmp) {
#ifdef _OPENMP
        #pragma omp parallel for schedule(dynamic, 16)
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(n_steps); ++i)
            run_step(static_cast<std::uint64_t>(i));
#else
        for (std::uint64_t i = 0; i < n_steps; ++i) run_step(i);
#endif
    } else {
        for (std::uint64_t i = 0; i < n_steps; ++i) run_step(i);
    }

    std::size_t total = 0;
    for (const auto& v : per_step) total += v.size();
    std::vector<TimeTag> tags;
    tags.reserve(total + 4);
    for (const auto& v : per_step) tags.insert(tags.end(), v.begin(), v.end());

    // PPS markers for every second boundary inside this chunk
    step_ += n_steps;
    const double end_s = time_s();
    while (static_cast<double>(emitted_pps_) < end_s) {
        const double t_true_ps = static_cast<double>(emitted_pps_) * kPsPerSecond;
        tags.push_back({quantize_bob_ps(t_true_ps, pc), kChannelPps});
        ++emitted_pps_;
    }

    std::sort(tags.begin(), tags.end(), tag_less);
    return tags;
}

// ---------------------------------------------------------------------------
// Analytic rate model.
// ---------------------------------------------------------------------------

ExpectedRates expected_rates(const ChannelConfig& cfg, double window_s) {
    const Precomp pc = make_precomp(cfg);
    const auto& det = cfg.detectors;
    const double eta_link = cfg.link.mean_transmittance();
    const StepTables st = make_step_tables(pc, eta_link, cfg.link.background_rate_hz);

    ExpectedRates r;
    const double sigma_s = pc.sigma_jit_ps / kPsPerSecond;
    r.capture_abs = gaussian_capture(window_s, sigma_s);
    r.capture_ref = gaussian_capture(det.reference_window_s, sigma_s);

    for (int d = 0; d < 4; ++d) {
        double sig = 0;
        for (int c = 0; c < 6; ++c) sig += pc.prior[c] * st.p[c][d];
        r.signal_hz[d] = pc.clock * sig * r.capture_abs;
        r.noise_hz[d] = cfg.link.background_rate_hz * pc.bg_share[d] *
                            (window_s / det.reference_window_s) +
                        pc.dark_raw[d] * window_s * pc.clock;
    }

    double sig_renorm = 0, noise_renorm = 0, noise_raw = 0;
    for (int d = 0; d < 4; ++d) {
        sig_renorm += r.signal_hz[d] / det.efficiency[d];
        noise_renorm += r.noise_hz[d] / det.efficiency[d];
        noise_raw += r.noise_hz[d];
    }
    sig_renorm /= r.capture_ref;

    r.tdr_hz = sig_renorm + noise_renorm / r.capture_ref;
    r.snr = noise_raw > 0 ? sig_renorm / noise_raw
                          : std::numeric_limits<double>::infinity();

    // balancing keeps eta_min(basis)/eta_d of each channel's clicks
    const double keep[4] = {
        std::min(det.efficiency[0], det.efficiency[1]) / det.efficiency[0],
        std::min(det.efficiency[0], det.efficiency[1]) / det.efficiency[1],
        std::min(det.efficiency[2], det.efficiency[3]) / det.efficiency[2],
        std::min(det.efficiency[2], det.efficiency[3]) / det.efficiency[3],
    };

    const double noise_z_sift =
        (r.noise_hz[0] * keep[0] + r.noise_hz[1] * keep[1]) * pc.p_z_alice;
    const double noise_x_sift =
        (r.noise_hz[2] * keep[2] + r.noise_hz[3] * keep[3]) * (1 - pc.p_z_alice);
    const double noise_x_err = r.noise_hz[3] * keep[3] * (1 - pc.p_z_alice);

    double nz[2] = {0, 0}, mz[2] = {0, 0}, nx[2] = {0, 0}, mx[2] = {0, 0};
    double sift_z_renorm = 0, sift_x_renorm = 0;
    for (int c = 0; c < 6; ++c) {
        const int k = c & 1;   // 0 = mu1, 1 = mu2
        const double w = pc.clock * pc.prior[c] * r.capture_abs;
        if (c < 4) {
            const int wrong = (c < 2) ? 1 : 0;
            nz[k] += w * (st.p[c][0] * keep[0] + st.p[c][1] * keep[1]);
            mz[k] += w * st.p[c][wrong] * keep[wrong];
            sift_z_renorm += w * (st.p[c][0] / det.efficiency[0] + st.p[c][1] / det.efficiency[1]);
        } else {
            nx[k] += w * (st.p[c][2] * keep[2] + st.p[c][3] * keep[3]);
            mx[k] += w * st.p[c][3] * keep[3];
            sift_x_renorm += w * (st.p[c][2] / det.efficiency[2] + st.p[c][3] / det.efficiency[3]);
        }
    }
    const double pk[2] = {pc.p_mu1, 1 - pc.p_mu1};
    r.n_z_mu1_hz = nz[0] + noise_z_sift * pk[0];
    r.n_z_mu2_hz = nz[1] + noise_z_sift * pk[1];
    r.m_z_mu1_hz = mz[0] + 0.5 * noise_z_sift * pk[0];
    r.m_z_mu2_hz = mz[1] + 0.5 * noise_z_sift * pk[1];
    r.n_x_mu1_hz = nx[0] + noise_x_sift * pk[0];
    r.n_x_mu2_hz = nx[1] + noise_x_sift * pk[1];
    r.m_x_mu1_hz = mx[0] + noise_x_err * pk[0];
    r.m_x_mu2_hz = mx[1] + noise_x_err * pk[1];
    r.n_z_hz = r.n_z_mu1_hz + r.n_z_mu2_hz;
    r.m_z_hz = r.m_z_mu1_hz + r.m_z_mu2_hz;
    r.n_x_hz = r.n_x_mu1_hz + r.n_x_mu2_hz;
    r.m_x_hz = r.m_x_mu1_hz + r.m_x_mu2_hz;

    r.qber_z = r.n_z_hz > 0 ? r.m_z_hz / r.n_z_hz : 0.0;
    r.qber_x = r.n_x_hz > 0 ? r.m_x_hz / r.n_x_hz : 0.0;
    r.sifted_z_bps = sift_z_renorm / r.capture_ref +
                     (r.noise_hz[0] / det.efficiency[0] + r.noise_hz[1] / det.efficiency[1]) *
                         pc.p_z_alice;
    r.sifted_x_bps = sift_x_renorm / r.capture_ref +
                     (r.noise_hz[2] / det.efficiency[2] + r.noise_hz[3] / det.efficiency[3]) *
                         (1 - pc.p_z_alice);
    return r;
}

} // namespace fsqkd
