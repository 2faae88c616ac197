#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "fsqkd/channel.hpp"

using namespace fsqkd;

namespace {
ChannelConfig field_config() {
    ChannelConfig cfg;
    cfg.link.coupling.mean_efficiency = std::pow(10.0, -1.4);   // 24 dB total
    cfg.link.coupling.lognormal_sigma = 0.0;
    return cfg;
}
}

TEST_CASE("coupling series: mean, clipping, zero-variance limit") {
    RandomSource rng(11);
    CouplingModel corrected = CouplingModel::corrected();
    auto series = sample_coupling_series(600.0, 1e-3, corrected, rng);
    double mean = 0;
    for (double v : series) {
        REQUIRE(v > 0.0);
        REQUIRE(v <= 1.0);
        mean += v;
    }
    mean /= double(series.size());
    CHECK(mean > 0.035);
    CHECK(mean < 0.045);

    CouplingModel uncorrected = CouplingModel::uncorrected();
    RandomSource rng2(12);
    auto s2 = sample_coupling_series(600.0, 1e-3, uncorrected, rng2);
    double m2 = 0;
    for (double v : s2) m2 += v;
    m2 /= double(s2.size());
    CHECK(m2 > 0.008);
    CHECK(m2 < 0.012);

    CouplingModel flat = corrected;
    flat.lognormal_sigma = 0.0;
    RandomSource rng3(13);
    auto s3 = sample_coupling_series(1.0, 1e-3, flat, rng3);
    for (double v : s3) CHECK(v == doctest::Approx(0.04).epsilon(1e-12));

    CHECK_THROWS_AS(sample_coupling_series(-1.0, 1e-3, corrected, rng),
                    std::invalid_argument);
    CHECK_THROWS_AS(sample_coupling_series(1.0, 0.5, corrected, rng),
                    std::invalid_argument);
}

TEST_CASE("coupling autocorrelation decays on the configured scale") {
    RandomSource rng(21);
    CouplingModel m = CouplingModel::corrected();
    auto s = sample_coupling_series(120.0, 1e-3, m, rng);
    auto corr_at = [&](std::size_t lag) {
        double mean = 0;
        for (double v : s) mean += v;
        mean /= double(s.size());
        double num = 0, den = 0;
        for (std::size_t i = 0; i + lag < s.size(); ++i)
            num += (s[i] - mean) * (s[i + lag] - mean);
        for (double v : s) den += (v - mean) * (v - mean);
        return num / den;
    };
    const double c10 = corr_at(10);    // one correlation time
    const double c100 = corr_at(100);  // ten correlation times
    CHECK(c10 > 0.2);
    CHECK(c10 < 0.6);
    CHECK(std::abs(c100) < 0.1);
}

TEST_CASE("window tradeoff: analytic fractions") {
    const WindowTradeoff t = window_signal_noise_tradeoff(500e-12, 500e-12, 1e-9);
    CHECK(t.signal_fraction == doctest::Approx(0.7610).epsilon(2e-3));
    CHECK(t.noise_fraction == doctest::Approx(0.5));

    CHECK(window_signal_noise_tradeoff(50e-9, 500e-12).signal_fraction ==
          doctest::Approx(1.0).epsilon(1e-9));
    // window below which less than half of the pulse is captured
    const WindowTradeoff half = window_signal_noise_tradeoff(286.43e-12, 500e-12);
    CHECK(half.signal_fraction == doctest::Approx(0.5).epsilon(1e-3));
    CHECK_THROWS_AS(window_signal_noise_tradeoff(0.0, 500e-12), std::invalid_argument);
}

TEST_CASE("expected rates at the field operating point") {
    const ChannelConfig cfg = field_config();
    const ExpectedRates r = expected_rates(cfg);

    // renormalized detection rate vs the bare product clock * <mu> * eta
    const double oracle = 50e6 * 0.4839 * std::pow(10.0, -2.4);
    CHECK(r.tdr_hz / oracle == doctest::Approx(1.0).epsilon(0.01));
    CHECK(r.tdr_hz > 85e3);
    CHECK(r.tdr_hz < 110e3);

    CHECK(r.snr > 340);
    CHECK(r.snr < 460);

    CHECK(r.sifted_z_bps == doctest::Approx(76e3).epsilon(0.03));
    CHECK(r.sifted_z_bps > 50e3);
    CHECK(r.sifted_z_bps < 150e3);

    CHECK(r.qber_z == doctest::Approx(0.005).epsilon(0.05));
    CHECK(r.qber_x == doctest::Approx(0.0025).epsilon(0.2));
}

TEST_CASE("expected rates: noiseless limit and monotonicity") {
    ChannelConfig cfg = field_config();
    cfg.link.background_rate_hz = 0;
    cfg.detectors.dark_rate_hz = {0, 0, 0, 0};
    const ExpectedRates r = expected_rates(cfg);
    CHECK(std::isinf(r.snr));
    CHECK(r.qber_z == doctest::Approx(0.0032917).epsilon(0.01));   // intrinsic only

    // more loss, strictly less detection rate
    ChannelConfig lossy = field_config();
    double prev = expected_rates(lossy).tdr_hz;
    for (double extra : {1.0, 3.0, 7.0, 15.0}) {
        lossy.link.extra_loss_db = extra;
        const double tdr = expected_rates(lossy).tdr_hz;
        CHECK(tdr < prev);
        prev = tdr;
    }

    // widening the window never decreases the captured fraction
    double prev_cap = 0;
    for (double w : {0.2e-9, 0.5e-9, 1e-9, 2e-9}) {
        const double cap = expected_rates(field_config(), w).capture_abs;
        CHECK(cap >= prev_cap);
        prev_cap = cap;
    }
}

TEST_CASE("detector POVM resolves unity per basis") {
    for (const JonesVector& psi :
         {states::L(), states::R(), states::plus(), states::minus(), states::H(),
          encode_bloch(1.1, 0.7)}) {
        CHECK(overlap2(states::L(), psi) + overlap2(states::R(), psi) ==
              doctest::Approx(1.0).epsilon(1e-12));
        CHECK(overlap2(states::plus(), psi) + overlap2(states::minus(), psi) ==
              doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("serial and openmp kernels produce identical tag streams") {
    ChannelConfig cfg;
    cfg.link.coupling.lognormal_sigma = 0.1;
    TagStreamSimulator a(cfg, 404, TagStreamSimulator::Kernel::serial);
    TagStreamSimulator b(cfg, 404, TagStreamSimulator::Kernel::openmp);
    for (int chunk = 0; chunk < 3; ++chunk) {
        const auto ta = a.next_chunk(0.2);
        const auto tb = b.next_chunk(0.2);
        REQUIRE(ta.size() == tb.size());
        for (std::size_t i = 0; i < ta.size(); ++i) {
            CHECK(ta[i].timestamp_ps == tb[i].timestamp_ps);
            CHECK(ta[i].channel == tb[i].channel);
        }
    }
}

TEST_CASE("timestamps are exact multiples of the TDC resolution") {
    ChannelConfig cfg;
    TagStreamSimulator sim(cfg, 7, TagStreamSimulator::Kernel::serial);
    const auto tags = sim.next_chunk(0.05);
    REQUIRE(tags.size() > 100);
    for (const auto& t : tags) CHECK(t.timestamp_ps % 81 == 0);
}

TEST_CASE("no light and no noise gives an empty stream") {
    ChannelConfig cfg;
    cfg.link.background_rate_hz = 0;
    cfg.detectors.dark_rate_hz = {0, 0, 0, 0};
    cfg.link.extra_loss_db = 300;   // "mu = 0" limit via total extinction
    TagStreamSimulator sim(cfg, 3, TagStreamSimulator::Kernel::fast);
    const auto tags = sim.next_chunk(0.2);
    for (const auto& t : tags) CHECK(t.channel == kChannelPps);
}

TEST_CASE("Monte Carlo detection counts converge to the analytic model") {
    // five configurations, steady coupling, 1e7 slots each; per-detector
    // windowed counts within 3 sigma + 1% systematic allowance
    struct Case { double extra_db, bg, seed; };
    const Case cases[] = {
        {0.0, 240.0, 1}, {3.0, 500.0, 2}, {6.0, 100.0, 3}, {0.0, 1000.0, 4}, {9.0, 240.0, 5},
    };
    for (const auto& c : cases) {
        ChannelConfig cfg = field_config();
        cfg.link.extra_loss_db = c.extra_db;
        cfg.link.background_rate_hz = c.bg;
        const double dur = 0.2;   // 1e7 slots
        TagStreamSimulator sim(cfg, static_cast<std::uint64_t>(c.seed),
                               TagStreamSimulator::Kernel::serial);
        const auto tags = sim.next_chunk(dur);

        // count tags inside the +-window/2 acceptance around slot centers
        std::array<std::uint64_t, 4> counts{};
        const double period = cfg.protocol.slot_period_ps();
        const double half = cfg.detectors.window_s * 1e12 / 2;
        for (const auto& t : tags) {
            if (t.channel > 3) continue;
            const double phase = std::fmod(static_cast<double>(t.timestamp_ps), period) -
                                 period / 2;
            if (std::abs(phase) <= half) ++counts[t.channel];
        }
        const ExpectedRates r = expected_rates(cfg);
        for (int d = 0; d < 4; ++d) {
            const double expect = (r.signal_hz[d] + r.noise_hz[d]) * dur;
            const double tol = 3.0 * std::sqrt(expect) + 0.01 * expect;
            CHECK(std::abs(static_cast<double>(counts[d]) - expect) < tol);
        }
    }
}

TEST_CASE("fast kernel matches the per-slot kernel statistically") {
    ChannelConfig cfg = field_config();
    const double dur = 0.2;
    TagStreamSimulator slow(cfg, 99, TagStreamSimulator::Kernel::serial);
    TagStreamSimulator fast(cfg, 99, TagStreamSimulator::Kernel::fast);
    const auto ts = slow.next_chunk(dur);
    const auto tf = fast.next_chunk(dur);
    const double n1 = static_cast<double>(ts.size());
    const double n2 = static_cast<double>(tf.size());
    CHECK(std::abs(n1 - n2) < 4.0 * std::sqrt(n1 + n2));
}

TEST_CASE("transparent reference agrees with the analytic rates") {
    ChannelConfig cfg = field_config();
    const std::uint64_t n_slots = 2000000;
    const PulseTrain train = sample_pulse_train(n_slots, cfg.protocol, RandomSource(55));
    std::vector<JonesVector> states(n_slots);
    for (std::uint64_t i = 0; i < n_slots; ++i) {
        const PulseRecord r = train.record(i);
        states[i] = command_to_state(r.basis, r.bit, cfg.encoder);
    }
    RandomSource rng(56);
    const auto tags = transmit_and_detect(train, states, cfg.protocol, cfg.link,
                                          cfg.detectors, rng);

    std::array<std::uint64_t, 4> counts{};
    const double period = cfg.protocol.slot_period_ps();
    const double half = cfg.detectors.window_s * 1e12 / 2;
    for (const auto& t : tags) {
        const double phase = std::fmod(static_cast<double>(t.timestamp_ps), period) - period / 2;
        if (std::abs(phase) <= half) ++counts[t.channel];
    }
    const double dur = static_cast<double>(n_slots) / cfg.protocol.clock_rate_hz;
    const ExpectedRates r = expected_rates(cfg);
    for (int d = 0; d < 4; ++d) {
        const double expect = (r.signal_hz[d] + r.noise_hz[d]) * dur;
        CHECK(std::abs(static_cast<double>(counts[d]) - expect) <
              3.0 * std::sqrt(expect) + 0.01 * expect);
    }
}
