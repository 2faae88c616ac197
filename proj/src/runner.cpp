#include "fsqkd/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>

#include "fsqkd/io.hpp"

namespace fsqkd {

void ExperimentConfig::validate() const {
    channel.validate();
    epsilons.validate();
    if (duration_s <= 0 && target_n_z == 0)
        throw std::invalid_argument("ExperimentConfig: need duration_s > 0 or target_n_z > 0");
    if (!(aggregation_s > 0) || !(chunk_s > 0))
        throw std::invalid_argument("ExperimentConfig: intervals must be positive");
    if (!(f_ec_analytic >= 1.0))
        throw std::invalid_argument("ExperimentConfig: f_ec must be >= 1");
    for (std::size_t i = 1; i < schedule.size(); ++i)
        if (!(schedule[i].t_s > schedule[i - 1].t_s))
            throw std::invalid_argument("ExperimentConfig: schedule times must be strictly increasing");
}

namespace {

double interp_coupling(const std::vector<SchedulePoint>& sched, double t, double fallback) {
    if (sched.empty()) return fallback;
    if (t <= sched.front().t_s) return sched.front().coupling_mean;
    if (t >= sched.back().t_s) return sched.back().coupling_mean;
    for (std::size_t i = 1; i < sched.size(); ++i) {
        if (t <= sched[i].t_s) {
            const double f = (t - sched[i - 1].t_s) / (sched[i].t_s - sched[i - 1].t_s);
            return sched[i - 1].coupling_mean +
                   f * (sched[i].coupling_mean - sched[i - 1].coupling_mean);
        }
    }
    return sched.back().coupling_mean;
}

double interp_background(const std::vector<SchedulePoint>& sched, double t, double fallback) {
    if (sched.empty()) return fallback;
    if (t <= sched.front().t_s) return sched.front().background_rate_hz;
    if (t >= sched.back().t_s) return sched.back().background_rate_hz;
    for (std::size_t i = 1; i < sched.size(); ++i) {
        if (t <= sched[i].t_s) {
            const double f = (t - sched[i - 1].t_s) / (sched[i].t_s - sched[i - 1].t_s);
            return sched[i - 1].background_rate_hz +
                   f * (sched[i].background_rate_hz - sched[i - 1].background_rate_hz);
        }
    }
    return sched.back().background_rate_hz;
}

struct IntervalTally {
    std::array<std::uint64_t, 4> in_window{};
    std::array<std::uint64_t, 4> out_window{};
    DecoyCounts counts_at_start;
    double elapsed_s = 0;
};

// Receiver half of the pipeline, identical for live simulation chunks
// and recorded tag files: lock once from the head of the stream, then
// process fixed slot-range chunks with per-chunk derived randomness.
// The folded pulse peak is re-tracked every chunk; the PPS-quantization
// drift residual would otherwise walk the acceptance window off the
// pulse within minutes.
class StreamedReceiver {
public:
    StreamedReceiver(const ExperimentConfig& cfg, std::function<PulseRecord(std::uint64_t)> alice)
        : cfg_(cfg),
          sifter_(std::move(alice)),
          slots_per_chunk_(static_cast<std::uint64_t>(
              std::llround(cfg.chunk_s * cfg.channel.protocol.clock_rate_hz))),
          period_ps_(cfg.channel.protocol.slot_period_ps()),
          window_ps_(cfg.channel.detectors.window_s * 1e12) {
        capture_ref_ = gaussian_capture(cfg.channel.detectors.reference_window_s,
                                        cfg.channel.detectors.signal_sigma_ps() / 1e12);
        excl_half_ps_ = std::min(std::max(2500.0, window_ps_), period_ps_ / 2.0);
        row_.counts_at_start = sifter_.counts();
    }

    void feed(std::span<const TimeTag> tags) {
        for (const auto& t : tags) push(t);
    }

    void finish() {
        if (!sync_) {
            if (!try_lock(true))
                throw NoLockError("receiver: stream ended before clock lock");
        }
        flush_chunk();
        if (row_.elapsed_s > 0) emit_row();
    }

    const SyncState& sync() const {
        if (!sync_) throw std::runtime_error("receiver: not locked");
        return *sync_;
    }
    const DecoyCounts& counts() const { return sifter_.counts(); }
    SiftResult take_sift() { return sifter_.take(); }
    const std::vector<SummaryRow>& rows() const { return rows_; }
    double elapsed_s() const { return elapsed_s_; }

private:
    void push(const TimeTag& t) {
        if (!sync_) {
            prelock_.push_back(t);
            if (t.channel == kChannelPps) ++pps_seen_;
            else ++signal_seen_;
            // enough PPS span for the drift refit, or enough of a sparse
            // stream to at least attempt a coarse lock
            if ((pps_seen_ >= 4 && signal_seen_ >= 20000) ||
                (pps_seen_ >= 11 && signal_seen_ >= 1000))
                try_lock(false);
            return;
        }
        ingest(t);
    }

    bool try_lock(bool relaxed) {
        if (pps_seen_ < (relaxed ? 2u : 4u) || signal_seen_ < 1000) return false;
        sync_ = recover_clock(prelock_, period_ps_, cfg_.channel.detectors.tdc_resolution_s * 1e12);
        for (const auto& t : prelock_) ingest(t);
        prelock_.clear();
        return true;
    }

    double phase_of(const TimeTag& t, double& slot_d) const {
        const double tt = (static_cast<double>(t.timestamp_ps) - sync_->pps_anchor_ps) /
                              (1.0 + sync_->drift) - sync_->offset_ps;
        slot_d = std::nearbyint(tt / period_ps_);
        return tt - slot_d * period_ps_;
    }

    void ingest(const TimeTag& t) {
        if (t.channel == kChannelPps) return;
        double slot_d;
        (void)phase_of(t, slot_d);
        const std::uint64_t slot = slot_d < 0 ? 0 : static_cast<std::uint64_t>(slot_d);
        const std::uint64_t cidx = slot / slots_per_chunk_;
        while (cidx > chunk_idx_) flush_chunk();
        chunk_tags_.push_back(t);
    }

    // first-order tracking loop: re-center the folded peak and absorb the
    // residual drift, keeping the slot mapping continuous at t_now
    void update_tracking() {
        double sum = 0;
        std::size_t n = 0;
        for (const auto& t : chunk_tags_) {
            double slot_d;
            const double ph = phase_of(t, slot_d);
            if (std::abs(ph) <= excl_half_ps_) {
                sum += ph;
                ++n;
            }
        }
        if (n < 500) return;
        const double delta = std::clamp(sum / static_cast<double>(n), -2000.0, 2000.0);

        const double chunk_ps =
            static_cast<double>(slots_per_chunk_) * period_ps_;
        double dd = delta / chunk_ps;
        dd = std::clamp(dd, -1e-8, 1e-8);
        const double t_mid = sync_->pps_anchor_ps +
                             (static_cast<double>(chunk_idx_) + 0.5) * chunk_ps *
                                 (1.0 + sync_->drift);
        const double inv_old = 1.0 / (1.0 + sync_->drift);
        sync_->drift += dd;
        const double inv_new = 1.0 / (1.0 + sync_->drift);
        sync_->offset_ps += delta + (t_mid - sync_->pps_anchor_ps) * (inv_new - inv_old);
    }

    void flush_chunk() {
        update_tracking();
        for (const auto& t : chunk_tags_) {
            double slot_d;
            const double phase = phase_of(t, slot_d);
            if (slot_d < 0) continue;
            const auto slot = static_cast<std::uint64_t>(slot_d);
            // a tracking step can push a fold-boundary tag back across the
            // previous chunk's last slot; such orphans are dropped
            if (have_flushed_ && slot <= last_flushed_slot_) continue;
            if (std::abs(phase) <= window_ps_ / 2.0) {
                chunk_clicks_.push_back({slot, t.channel});
                ++row_.in_window[t.channel];
            } else if (std::abs(phase) > excl_half_ps_) {
                ++row_.out_window[t.channel];
            }
        }
        chunk_tags_.clear();

        RandomSource rng =
            RandomSource(cfg_.master_seed).derive(rng_tag::kReceiver).derive(chunk_idx_);
        const auto balanced =
            balance_efficiency(chunk_clicks_, cfg_.channel.detectors.efficiency, rng);
        const auto resolved = resolve_double_clicks(balanced, rng);
        sifter_.feed(resolved);
        if (!resolved.empty()) {
            last_flushed_slot_ = resolved.back().slot;
            have_flushed_ = true;
        }
        chunk_clicks_.clear();
        ++chunk_idx_;
        elapsed_s_ = static_cast<double>(chunk_idx_) * static_cast<double>(slots_per_chunk_) /
                     cfg_.channel.protocol.clock_rate_hz;
        row_.elapsed_s += static_cast<double>(slots_per_chunk_) / cfg_.channel.protocol.clock_rate_hz;
        if (row_.elapsed_s + 1e-9 >= cfg_.aggregation_s) emit_row();
    }

    void emit_row() {
        const auto& det = cfg_.channel.detectors;
        const double dt = row_.elapsed_s;
        SummaryRow r;
        r.t_s = elapsed_s_ - dt;

        const double noise_span_ps = period_ps_ - 2.0 * excl_half_ps_;
        double total_renorm = 0, sig_renorm = 0, noise_raw = 0;
        for (int d = 0; d < 4; ++d) {
            const double in_rate = static_cast<double>(row_.in_window[d]) / dt;
            const double noise_in = noise_span_ps > 0
                ? static_cast<double>(row_.out_window[d]) / dt * (window_ps_ / noise_span_ps)
                : 0.0;
            total_renorm += in_rate / det.efficiency[d];
            sig_renorm += std::max(0.0, in_rate - noise_in) / det.efficiency[d];
            noise_raw += noise_in;
        }
        r.tdr_hz = total_renorm / capture_ref_;
        r.snr = noise_raw > 0 ? (sig_renorm / capture_ref_) / noise_raw
                              : std::numeric_limits<double>::infinity();

        const DecoyCounts now = sifter_.counts();
        DecoyCounts d{};
        d.n_z_mu1 = now.n_z_mu1 - row_.counts_at_start.n_z_mu1;
        d.n_z_mu2 = now.n_z_mu2 - row_.counts_at_start.n_z_mu2;
        d.m_z_mu1 = now.m_z_mu1 - row_.counts_at_start.m_z_mu1;
        d.m_z_mu2 = now.m_z_mu2 - row_.counts_at_start.m_z_mu2;
        d.n_x_mu1 = now.n_x_mu1 - row_.counts_at_start.n_x_mu1;
        d.n_x_mu2 = now.n_x_mu2 - row_.counts_at_start.n_x_mu2;
        d.m_x_mu1 = now.m_x_mu1 - row_.counts_at_start.m_x_mu1;
        d.m_x_mu2 = now.m_x_mu2 - row_.counts_at_start.m_x_mu2;
        d.duration_s = dt;
        r.qber_z = d.qber_z();
        r.qber_x = d.qber_x();
        r.sifted_bps = static_cast<double>(d.n_z()) / dt;

        KeyBudget binf = decoy_bounds(d, cfg_.channel.protocol, cfg_.epsilons, SkrMode::asymptotic);
        const std::uint64_t linf = key_length(binf, d, d.qber_z(), cfg_.f_ec_analytic,
                                              cfg_.epsilons, SkrMode::asymptotic);
        r.skr_inf_bps = static_cast<double>(linf) / dt;

        DecoyCounts cum = now;
        cum.duration_s = elapsed_s_;
        KeyBudget bf = decoy_bounds(cum, cfg_.channel.protocol, cfg_.epsilons, SkrMode::finite);
        const std::uint64_t lf = key_length(bf, cum, cum.qber_z(), cfg_.f_ec_analytic,
                                            cfg_.epsilons, SkrMode::finite);
        r.skr_f_bps = static_cast<double>(lf) / elapsed_s_;

        rows_.push_back(r);
        row_ = IntervalTally{};
        row_.counts_at_start = now;
    }

    ExperimentConfig cfg_;
    Sifter sifter_;
    std::uint64_t slots_per_chunk_;
    double period_ps_, window_ps_, excl_half_ps_, capture_ref_;
    std::optional<SyncState> sync_;
    std::vector<TimeTag> prelock_;
    std::size_t pps_seen_ = 0, signal_seen_ = 0;
    std::vector<TimeTag> chunk_tags_;
    std::vector<SlotClick> chunk_clicks_;
    std::uint64_t chunk_idx_ = 0;
    std::uint64_t last_flushed_slot_ = 0;
    bool have_flushed_ = false;
    double elapsed_s_ = 0;
    IntervalTally row_;
    std::vector<SummaryRow> rows_;
};

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.8g", v);
    return buf;
}

struct PipelineArtifacts {
    std::filesystem::path outdir;
    bool enabled = true;

    void marker(const std::string& stage, const std::string& what) const {
        if (!enabled) return;
        std::ofstream os(outdir / "FAILED");
        os << stage << ": " << what << "\n";
    }
};

} // namespace

PostprocOutcome run_postprocessing(const ExperimentConfig& cfg, const SiftResult& sift,
                                   KeyBudget& budget) {
    PostprocOutcome out;
    const std::uint64_t n = sift.alice_bits.size();
    const double q_est = std::clamp(sift.counts.qber_z(), 1e-4, 0.11);
    if (sift.counts.qber_z() > 0.11 || n == 0) {
        budget.lambda_ec = 0;
        budget.l = 0;
        return out;   // reconciliation infeasible; no key
    }

    constexpr std::uint64_t kFrameBits = 1u << 20;
    double denom = 0;
    for (std::uint64_t lo = 0, frame = 0; lo < n; lo += kFrameBits, ++frame) {
        const std::uint64_t len = std::min<std::uint64_t>(kFrameBits, n - lo);
        CascadeConfig cc;
        cc.session_seed = mix64(mix64(cfg.master_seed, rng_tag::kCascade), frame);
        const BitVec a = sift.alice_bits.slice(lo, len);
        const BitVec b = sift.bob_bits.slice(lo, len);
        auto [corr, rep] = cascade_correct(a, b, q_est, cc);
        out.leaked_bits += rep.leaked_bits;
        out.corrected_errors += rep.corrected_errors;
        if (rep.corrected_errors > 0)
            denom += static_cast<double>(len) *
                     binary_entropy(static_cast<double>(rep.corrected_errors) /
                                    static_cast<double>(len));
        for (std::uint64_t i = 0; i < len; ++i) out.corrected.push_back(corr.get(i));
    }
    out.f_ec_measured = denom > 0 ? static_cast<double>(out.leaked_bits) / denom : 0.0;

    const std::uint64_t verify_seed = mix64(cfg.master_seed, rng_tag::kVerify);
    out.verified = verify_correctness(sift.alice_bits, out.corrected, verify_seed);

    budget.lambda_ec = static_cast<double>(out.leaked_bits + kVerifyTagBits);
    budget.l = out.verified
        ? key_length_given_leak(budget, budget.lambda_ec, cfg.epsilons)
        : 0;

    if (budget.l > 0) {
        constexpr std::uint64_t kPaBlockBits = 1u << 20;
        const double ratio = static_cast<double>(budget.l) / static_cast<double>(n);
        for (std::uint64_t lo = 0, block = 0; lo < n; lo += kPaBlockBits, ++block) {
            const std::uint64_t len = std::min<std::uint64_t>(kPaBlockBits, n - lo);
            const auto l_b = static_cast<std::uint64_t>(
                std::floor(ratio * static_cast<double>(len)));
            if (l_b == 0) continue;
            RandomSource rng =
                RandomSource(cfg.master_seed).derive(rng_tag::kPrivAmp).derive(block);
            const BitVec seed = toeplitz_seed(len, l_b, rng);
            const BitVec part = toeplitz_pa(out.corrected.slice(lo, len), l_b, seed);
            for (std::uint64_t i = 0; i < l_b; ++i) out.final_key.push_back(part.get(i));
        }
    }
    return out;
}

namespace {

RunSummary finalize_pipeline(const ExperimentConfig& cfg, StreamedReceiver& rx,
                             const PipelineArtifacts& art) {
    RunSummary summary;
    SiftResult sift;

    try {
        rx.finish();
        sift = rx.take_sift();
        sift.counts.duration_s = rx.elapsed_s();
    } catch (const std::exception& e) {
        art.marker("sift", e.what());
        throw std::runtime_error(std::string("sift: ") + e.what());
    }

    summary.rows = rx.rows();
    summary.counts = sift.counts;

    try {
        summary.budget = decoy_bounds(summary.counts, cfg.channel.protocol, cfg.epsilons);
    } catch (const std::exception& e) {
        art.marker("decoy", e.what());
        throw std::runtime_error(std::string("decoy: ") + e.what());
    }

    BitVec final_key, corrected;
    try {
        if (cfg.run_error_correction) {
            PostprocOutcome pp = run_postprocessing(cfg, sift, summary.budget);
            summary.f_ec_measured = pp.f_ec_measured;
            summary.verified = pp.verified;
            summary.error_correction_ran = true;
            final_key = std::move(pp.final_key);
            corrected = std::move(pp.corrected);
        } else {
            summary.budget.lambda_ec = cfg.f_ec_analytic *
                                       static_cast<double>(summary.counts.n_z()) *
                                       binary_entropy(summary.counts.qber_z());
            summary.budget.l =
                key_length_given_leak(summary.budget, summary.budget.lambda_ec, cfg.epsilons);
        }
    } catch (const std::exception& e) {
        art.marker("postprocess", e.what());
        throw std::runtime_error(std::string("postprocess: ") + e.what());
    }

    summary.totals = {summary.counts.n_z(), summary.budget.l, rx.elapsed_s()};

    if (art.enabled) {
        try {
            write_json(art.outdir / "decoy_counts.json", to_json(summary.counts));
            write_json(art.outdir / "key_budget.json", to_json(summary.budget));
            write_json(art.outdir / "run_summary.json", summary_json(summary));
            std::ofstream csv(art.outdir / "summary.csv");
            csv << summary_csv(summary);
            if (cfg.artifacts.write_keys) {
                write_key(art.outdir / "sifted_alice.bin", sift.alice_bits);
                write_key(art.outdir / "sifted_bob.bin", sift.bob_bits);
                if (cfg.run_error_correction) {
                    write_key(art.outdir / "key_corrected.bin", corrected);
                    write_key(art.outdir / "key_final.bin", final_key);
                }
            }
        } catch (const std::exception& e) {
            art.marker("artifacts", e.what());
            throw std::runtime_error(std::string("artifacts: ") + e.what());
        }
    }
    return summary;
}

} // namespace

RunSummary run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& outdir) {
    cfg.validate();
    std::filesystem::create_directories(outdir);
    PipelineArtifacts art{outdir, true};

    write_json(outdir / "config.json", config_to_json(cfg));

    TagStreamSimulator sim(cfg.channel, cfg.master_seed, cfg.kernel);
    StreamedReceiver rx(cfg, [tape = sim.tape()](std::uint64_t slot) { return tape.at(slot); });

    if (cfg.artifacts.write_pulses)
        write_pulse_tape(outdir / "pulses.bin", sim.tape(), std::uint64_t(-1));
    const auto tag_path = outdir / "tags.bin";
    if (cfg.artifacts.write_tags) {
        const std::vector<TimeTag> empty;
        write_tags(tag_path, empty, false);
    }

    try {
        bool done = false;
        while (!done) {
            const double t = sim.time_s();
            sim.set_coupling_mean(
                interp_coupling(cfg.schedule, t, cfg.channel.link.coupling.mean_efficiency));
            sim.set_background_rate(
                interp_background(cfg.schedule, t, cfg.channel.link.background_rate_hz));
            const auto tags = sim.next_chunk(cfg.chunk_s);
            if (cfg.artifacts.write_tags) write_tags(tag_path, tags, true);
            rx.feed(tags);
            if (cfg.target_n_z > 0) {
                if (rx.counts().n_z() >= cfg.target_n_z) done = true;
            }
            if (cfg.duration_s > 0 && sim.time_s() + 1e-9 >= cfg.duration_s) done = true;
            if (sim.time_s() > 864000.0)
                throw std::runtime_error("run did not accumulate the requested key in 10 days");
        }
    } catch (const std::exception& e) {
        art.marker("simulate", e.what());
        throw std::runtime_error(std::string("simulate: ") + e.what());
    }

    return finalize_pipeline(cfg, rx, art);
}

RunSummary analyze_tags(const std::filesystem::path& tag_file,
                        const std::filesystem::path& pulse_file,
                        const ExperimentConfig& cfg,
                        const std::filesystem::path& outdir) {
    cfg.validate();
    std::filesystem::create_directories(outdir);
    PipelineArtifacts art{outdir, true};

    std::vector<TimeTag> tags;
    PulseFile pulses;
    try {
        tags = read_tags(tag_file);
        pulses = read_pulse_file(pulse_file);
        std::sort(tags.begin(), tags.end(), [](const TimeTag& a, const TimeTag& b) {
            return a.timestamp_ps != b.timestamp_ps ? a.timestamp_ps < b.timestamp_ps
                                                    : a.channel < b.channel;
        });
    } catch (const std::exception& e) {
        art.marker("ingest", e.what());
        throw std::runtime_error(std::string("ingest: ") + e.what());
    }

    StreamedReceiver rx(cfg, [pulses](std::uint64_t slot) { return pulses.at(slot); });
    try {
        rx.feed(tags);
    } catch (const std::exception& e) {
        art.marker("receive", e.what());
        throw std::runtime_error(std::string("receive: ") + e.what());
    }
    return finalize_pipeline(cfg, rx, art);
}

RunSummary predict_summary(const ExperimentConfig& cfg) {
    cfg.validate();
    RunSummary s;

    ChannelConfig base = cfg.channel;
    const ExpectedRates base_rates = expected_rates(base);
    double duration = cfg.duration_s;
    if (cfg.target_n_z > 0) {
        if (!(base_rates.n_z_hz > 0))
            throw std::runtime_error("predict_summary: no sifted rate at this configuration");
        duration = std::ceil(static_cast<double>(cfg.target_n_z) / base_rates.n_z_hz /
                             cfg.chunk_s) * cfg.chunk_s;
    }

    DecoyCounts cum{};
    double t = 0;
    while (t < duration - 1e-9) {
        const double dt = std::min(cfg.aggregation_s, duration - t);
        const double mid = t + dt / 2;
        ChannelConfig cc = cfg.channel;
        cc.link.coupling.mean_efficiency =
            interp_coupling(cfg.schedule, mid, cc.link.coupling.mean_efficiency);
        cc.link.background_rate_hz =
            interp_background(cfg.schedule, mid, cc.link.background_rate_hz);
        const ExpectedRates r = expected_rates(cc);

        SummaryRow row;
        row.t_s = t;
        row.tdr_hz = r.tdr_hz;
        row.snr = r.snr;
        row.qber_z = r.qber_z;
        row.qber_x = r.qber_x;
        row.sifted_bps = r.n_z_hz;

        const DecoyCounts d = expected_decoy_counts(cc, cc.detectors.window_s, dt);
        KeyBudget binf = decoy_bounds(d, cc.protocol, cfg.epsilons, SkrMode::asymptotic);
        row.skr_inf_bps = static_cast<double>(
            key_length(binf, d, d.qber_z(), cfg.f_ec_analytic, cfg.epsilons,
                       SkrMode::asymptotic)) / dt;

        cum.n_z_mu1 += d.n_z_mu1; cum.n_z_mu2 += d.n_z_mu2;
        cum.m_z_mu1 += d.m_z_mu1; cum.m_z_mu2 += d.m_z_mu2;
        cum.n_x_mu1 += d.n_x_mu1; cum.n_x_mu2 += d.n_x_mu2;
        cum.m_x_mu1 += d.m_x_mu1; cum.m_x_mu2 += d.m_x_mu2;
        cum.duration_s = t + dt;
        KeyBudget bf = decoy_bounds(cum, cc.protocol, cfg.epsilons, SkrMode::finite);
        row.skr_f_bps = static_cast<double>(
            key_length(bf, cum, cum.qber_z(), cfg.f_ec_analytic, cfg.epsilons)) /
            (t + dt);

        s.rows.push_back(row);
        t += dt;
    }

    s.counts = cum;
    s.budget = decoy_bounds(cum, cfg.channel.protocol, cfg.epsilons);
    s.budget.lambda_ec = cfg.f_ec_analytic * static_cast<double>(cum.n_z()) *
                         binary_entropy(cum.qber_z());
    s.budget.l = key_length_given_leak(s.budget, s.budget.lambda_ec, cfg.epsilons);
    s.totals = {cum.n_z(), s.budget.l, duration};
    return s;
}

std::vector<SweepPoint> sweep(const ExperimentConfig& cfg, SweepAxis axis,
                              double from, double to, int points) {
    if (points <= 0 || to < from)
        throw std::invalid_argument("sweep: empty range");
    std::vector<SweepPoint> out;
    out.reserve(points);
    const double target = cfg.target_n_z > 0 ? static_cast<double>(cfg.target_n_z) : 1e8;
    for (int i = 0; i < points; ++i) {
        const double x = points == 1 ? from : from + (to - from) * i / (points - 1);
        ChannelConfig cc = cfg.channel;
        double tgt = target;
        switch (axis) {
        case SweepAxis::loss_db: {
            const double base_db = cc.link.fixed_loss_optics_db + cc.link.fixed_loss_analyzer_db -
                                   10.0 * std::log10(cc.link.coupling.mean_efficiency);
            if (x < base_db - 1e-3)
                throw std::invalid_argument("sweep: loss below the fixed part of the budget");
            cc.link.extra_loss_db = std::max(0.0, x - base_db);
            break;
        }
        case SweepAxis::qber: {
            if (!(x >= 0 && x < 0.5)) throw std::invalid_argument("sweep: qber out of range");
            cc.encoder.theta_error = std::acos(1.0 - 2.0 * x);
            cc.encoder.phi_error = 0.0;
            break;
        }
        case SweepAxis::block_size:
            tgt = x;
            break;
        }
        SweepPoint p;
        p.value = x;
        const PipelineResult fin = evaluate_model(cc, cc.detectors.window_s, cfg.f_ec_analytic,
                                                  cfg.epsilons, tgt, 0, SkrMode::finite);
        const PipelineResult asy = evaluate_model(cc, cc.detectors.window_s, cfg.f_ec_analytic,
                                                  cfg.epsilons, tgt, 0, SkrMode::asymptotic);
        p.l = fin.budget.l;
        p.skr_f_bps = fin.skr_bps;
        p.skr_inf_bps = asy.skr_bps;
        p.qber_z = fin.counts.qber_z();
        out.push_back(p);
    }
    return out;
}

std::string sweep_csv(SweepAxis axis, const std::vector<SweepPoint>& pts) {
    const char* name = axis == SweepAxis::loss_db ? "loss_db"
                       : axis == SweepAxis::qber ? "qber" : "block_size";
    std::string s = std::string(name) + ",l_bits,skr_f_bps,skr_inf_bps,qber_z\n";
    for (const auto& p : pts) {
        s += format_double(p.value) + "," + std::to_string(p.l) + "," +
             format_double(p.skr_f_bps) + "," + format_double(p.skr_inf_bps) + "," +
             format_double(p.qber_z) + "\n";
    }
    return s;
}

std::string summary_csv(const RunSummary& s) {
    std::string out = "t_s,tdr_hz,snr,qber_z,qber_x,sifted_bps,skr_inf_bps,skr_f_bps\n";
    for (const auto& r : s.rows) {
        out += format_double(r.t_s) + "," + format_double(r.tdr_hz) + "," +
               format_double(r.snr) + "," + format_double(r.qber_z) + "," +
               format_double(r.qber_x) + "," + format_double(r.sifted_bps) + "," +
               format_double(r.skr_inf_bps) + "," + format_double(r.skr_f_bps) + "\n";
    }
    return out;
}

nlohmann::json summary_json(const RunSummary& s) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : s.rows) {
        rows.push_back({
            {"t_s", r.t_s}, {"tdr_hz", r.tdr_hz}, {"snr", r.snr},
            {"qber_z", r.qber_z}, {"qber_x", r.qber_x}, {"sifted_bps", r.sifted_bps},
            {"skr_inf_bps", r.skr_inf_bps}, {"skr_f_bps", r.skr_f_bps},
        });
    }
    return {
        {"rows", rows},
        {"totals", {{"n_z", s.totals.n_z}, {"l", s.totals.l}, {"duration_s", s.totals.duration_s}}},
        {"f_ec_measured", s.f_ec_measured},
        {"verified", s.verified},
        {"error_correction_ran", s.error_correction_ran},
    };
}

// --------------------------------------------------------------------------
// Config file mapping.
// --------------------------------------------------------------------------

nlohmann::json config_to_json(const ExperimentConfig& c) {
    const auto& p = c.channel.protocol;
    const auto& e = c.channel.encoder;
    const auto& l = c.channel.link;
    const auto& d = c.channel.detectors;
    nlohmann::json sched = nlohmann::json::array();
    for (const auto& sp : c.schedule)
        sched.push_back({{"t_s", sp.t_s},
                         {"coupling_mean", sp.coupling_mean},
                         {"background_rate_hz", sp.background_rate_hz}});
    return {
        {"protocol",
         {{"p_z_alice", p.p_z_alice}, {"p_mu1", p.p_mu1},
          {"mu1_z", p.mu1_z}, {"mu2_z", p.mu2_z},
          {"mu1_x", p.mu1_x}, {"mu2_x", p.mu2_x},
          {"p_z_bob", p.p_z_bob}, {"clock_rate_hz", p.clock_rate_hz}}},
        {"encoder",
         {{"theta_error_rad", e.theta_error}, {"phi_error_rad", e.phi_error},
          {"intensity_imbalance", e.intensity_imbalance}}},
        {"link",
         {{"fixed_loss_optics_db", l.fixed_loss_optics_db},
          {"fixed_loss_analyzer_db", l.fixed_loss_analyzer_db},
          {"extra_loss_db", l.extra_loss_db},
          {"background_rate_hz", l.background_rate_hz},
          {"coupling",
           {{"mean_efficiency", l.coupling.mean_efficiency},
            {"lognormal_sigma", l.coupling.lognormal_sigma},
            {"correlation_time_s", l.coupling.correlation_time_s},
            {"tip_tilt_corrected", l.coupling.tip_tilt_corrected}}}}},
        {"detectors",
         {{"efficiency", d.efficiency}, {"dark_rate_hz", d.dark_rate_hz},
          {"window_s", d.window_s}, {"reference_window_s", d.reference_window_s},
          {"tdc_resolution_s", d.tdc_resolution_s}, {"jitter_sigma_s", d.jitter_sigma_s},
          {"pulse_fwhm_s", d.pulse_fwhm_s}}},
        {"timing",
         {{"link_delay_ps", c.channel.link_delay_ps},
          {"bob_clock_offset_ps", c.channel.bob_clock_offset_ps},
          {"bob_clock_drift", c.channel.bob_clock_drift}}},
        {"epsilons", {{"eps_sec", c.epsilons.eps_sec}, {"eps_cor", c.epsilons.eps_cor}}},
        {"run",
         {{"duration_s", c.duration_s}, {"target_n_z", c.target_n_z},
          {"master_seed", c.master_seed}, {"aggregation_s", c.aggregation_s},
          {"chunk_s", c.chunk_s}, {"f_ec", c.f_ec_analytic},
          {"error_correction", c.run_error_correction},
          {"kernel", c.kernel == TagStreamSimulator::Kernel::fast ? "fast"
                     : c.kernel == TagStreamSimulator::Kernel::openmp ? "openmp" : "serial"}}},
        {"schedule", sched},
        {"artifacts",
         {{"write_tags", c.artifacts.write_tags}, {"write_pulses", c.artifacts.write_pulses},
          {"write_keys", c.artifacts.write_keys}}},
    };
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig c = default_config();
    auto& p = c.channel.protocol;
    auto& e = c.channel.encoder;
    auto& l = c.channel.link;
    auto& d = c.channel.detectors;

    if (j.contains("protocol")) {
        const auto& x = j.at("protocol");
        p.p_z_alice = x.value("p_z_alice", p.p_z_alice);
        p.p_mu1 = x.value("p_mu1", p.p_mu1);
        p.mu1_z = x.value("mu1_z", p.mu1_z);
        p.mu2_z = x.value("mu2_z", p.mu2_z);
        p.mu1_x = x.value("mu1_x", p.mu1_x);
        p.mu2_x = x.value("mu2_x", p.mu2_x);
        p.p_z_bob = x.value("p_z_bob", p.p_z_bob);
        p.clock_rate_hz = x.value("clock_rate_hz", p.clock_rate_hz);
    }
    if (j.contains("encoder")) {
        const auto& x = j.at("encoder");
        e.theta_error = x.value("theta_error_rad", e.theta_error);
        e.phi_error = x.value("phi_error_rad", e.phi_error);
        e.intensity_imbalance = x.value("intensity_imbalance", e.intensity_imbalance);
    }
    if (j.contains("link")) {
        const auto& x = j.at("link");
        l.fixed_loss_optics_db = x.value("fixed_loss_optics_db", l.fixed_loss_optics_db);
        l.fixed_loss_analyzer_db = x.value("fixed_loss_analyzer_db", l.fixed_loss_analyzer_db);
        l.extra_loss_db = x.value("extra_loss_db", l.extra_loss_db);
        l.background_rate_hz = x.value("background_rate_hz", l.background_rate_hz);
        if (x.contains("coupling")) {
            const auto& cc = x.at("coupling");
            l.coupling.mean_efficiency = cc.value("mean_efficiency", l.coupling.mean_efficiency);
            l.coupling.lognormal_sigma = cc.value("lognormal_sigma", l.coupling.lognormal_sigma);
            l.coupling.correlation_time_s =
                cc.value("correlation_time_s", l.coupling.correlation_time_s);
            l.coupling.tip_tilt_corrected =
                cc.value("tip_tilt_corrected", l.coupling.tip_tilt_corrected);
        }
    }
    if (j.contains("detectors")) {
        const auto& x = j.at("detectors");
        d.efficiency = x.value("efficiency", d.efficiency);
        d.dark_rate_hz = x.value("dark_rate_hz", d.dark_rate_hz);
        d.window_s = x.value("window_s", d.window_s);
        d.reference_window_s = x.value("reference_window_s", d.reference_window_s);
        d.tdc_resolution_s = x.value("tdc_resolution_s", d.tdc_resolution_s);
        d.jitter_sigma_s = x.value("jitter_sigma_s", d.jitter_sigma_s);
        d.pulse_fwhm_s = x.value("pulse_fwhm_s", d.pulse_fwhm_s);
    }
    if (j.contains("timing")) {
        const auto& x = j.at("timing");
        c.channel.link_delay_ps = x.value("link_delay_ps", c.channel.link_delay_ps);
        c.channel.bob_clock_offset_ps = x.value("bob_clock_offset_ps", c.channel.bob_clock_offset_ps);
        c.channel.bob_clock_drift = x.value("bob_clock_drift", c.channel.bob_clock_drift);
    }
    if (j.contains("epsilons")) {
        const auto& x = j.at("epsilons");
        c.epsilons.eps_sec = x.value("eps_sec", c.epsilons.eps_sec);
        c.epsilons.eps_cor = x.value("eps_cor", c.epsilons.eps_cor);
    }
    if (j.contains("run")) {
        const auto& x = j.at("run");
        c.duration_s = x.value("duration_s", c.duration_s);
        c.target_n_z = x.value("target_n_z", c.target_n_z);
        c.master_seed = x.value("master_seed", c.master_seed);
        c.aggregation_s = x.value("aggregation_s", c.aggregation_s);
        c.chunk_s = x.value("chunk_s", c.chunk_s);
        c.f_ec_analytic = x.value("f_ec", c.f_ec_analytic);
        c.run_error_correction = x.value("error_correction", c.run_error_correction);
        const std::string k = x.value("kernel", std::string("fast"));
        c.kernel = k == "serial" ? TagStreamSimulator::Kernel::serial
                   : k == "openmp" ? TagStreamSimulator::Kernel::openmp
                                   : TagStreamSimulator::Kernel::fast;
    }
    if (j.contains("schedule")) {
        c.schedule.clear();
        for (const auto& sp : j.at("schedule"))
            c.schedule.push_back({sp.at("t_s").get<double>(),
                                  sp.at("coupling_mean").get<double>(),
                                  sp.at("background_rate_hz").get<double>()});
    }
    if (j.contains("artifacts")) {
        const auto& x = j.at("artifacts");
        c.artifacts.write_tags = x.value("write_tags", c.artifacts.write_tags);
        c.artifacts.write_pulses = x.value("write_pulses", c.artifacts.write_pulses);
        c.artifacts.write_keys = x.value("write_keys", c.artifacts.write_keys);
    }
    return c;
}

ExperimentConfig default_config() {
    ExperimentConfig c;
    c.duration_s = 60;
    return c;
}

ExperimentConfig april18_config() {
    ExperimentConfig c = default_config();
    // one field day, 11:00 to 19:00: coupling improves toward the evening,
    // background peaks when the receiver faces the low sun
    c.duration_s = 8 * 3600;
    c.schedule = {
        {0.0, 0.025, 300.0},
        {14400.0, 0.035, 220.0},
        {25200.0, 0.052, 240.0},
        {28800.0, 0.054, 400.0},
    };
    return c;
}

} // namespace fsqkd
