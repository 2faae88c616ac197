#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fsqkd/io.hpp"
#include "fsqkd/runner.hpp"

using namespace fsqkd;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "fsqkd_runner_test" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

ExperimentConfig small_config() {
    ExperimentConfig cfg = default_config();
    cfg.channel.link.coupling.mean_efficiency = std::pow(10.0, -1.4);
    cfg.channel.link.coupling.lognormal_sigma = 0.0;
    cfg.duration_s = 20;
    cfg.chunk_s = 5;
    cfg.aggregation_s = 10;
    cfg.master_seed = 777;
    cfg.artifacts.write_tags = true;
    return cfg;
}

} // namespace

TEST_CASE("config validation") {
    ExperimentConfig cfg = default_config();
    cfg.duration_s = 0;
    cfg.target_n_z = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    cfg = default_config();
    cfg.schedule = {{10, 0.04, 240}, {5, 0.04, 240}};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("config JSON round trip covers every field") {
    ExperimentConfig cfg = april18_config();
    cfg.master_seed = 31337;
    cfg.channel.link.extra_loss_db = 3.5;
    cfg.channel.detectors.dark_rate_hz = {150, 150, 150, 5};
    cfg.kernel = TagStreamSimulator::Kernel::serial;
    const ExperimentConfig back = config_from_json(config_to_json(cfg));
    CHECK(back.master_seed == 31337);
    CHECK(back.channel.link.extra_loss_db == 3.5);
    CHECK(back.channel.detectors.dark_rate_hz[3] == 5);
    CHECK(back.schedule.size() == cfg.schedule.size());
    CHECK(back.kernel == TagStreamSimulator::Kernel::serial);
    CHECK(config_to_json(back) == config_to_json(cfg));
}

TEST_CASE("end-to-end run produces a key and coherent artifacts") {
    // a block this short barely clears the finite-key penalties; anything
    // much below a minute cannot certify a key at all
    ExperimentConfig cfg = small_config();
    cfg.duration_s = 60;
    cfg.aggregation_s = 30;
    const fs::path out = fresh_dir("run");
    const RunSummary s = run_experiment(cfg, out);

    CHECK(s.totals.duration_s == doctest::Approx(60.0));
    CHECK(s.counts.n_z() > 3000000);
    CHECK(s.counts.qber_z() == doctest::Approx(0.005).epsilon(0.15));
    CHECK(s.verified);
    CHECK(s.f_ec_measured > 1.0);
    CHECK(s.f_ec_measured < 1.2);
    CHECK(s.totals.l > 0);
    CHECK(s.rows.size() == 2);

    for (const char* f : {"summary.csv", "decoy_counts.json", "key_budget.json",
                          "run_summary.json", "config.json", "tags.bin", "pulses.bin",
                          "sifted_alice.bin", "sifted_bob.bin", "key_final.bin"})
        CHECK(fs::exists(out / f));

    const BitVec final_key = read_key(out / "key_final.bin");
    CHECK(final_key.size() >= s.totals.l - 64);
    CHECK(final_key.size() <= s.totals.l);

    // totals consistent with row sums
    double row_bits = 0;
    for (const auto& r : s.rows) row_bits += r.sifted_bps * 30.0;
    CHECK(row_bits == doctest::Approx(double(s.totals.n_z)).epsilon(1e-9));
}

TEST_CASE("same seed reproduces artifacts byte for byte; different seed does not") {
    ExperimentConfig cfg = small_config();
    cfg.duration_s = 10;
    cfg.artifacts.write_tags = false;
    const fs::path a = fresh_dir("repro_a");
    const fs::path b = fresh_dir("repro_b");
    const fs::path c = fresh_dir("repro_c");
    run_experiment(cfg, a);
    run_experiment(cfg, b);
    for (const char* f : {"summary.csv", "decoy_counts.json", "key_budget.json",
                          "run_summary.json", "sifted_alice.bin", "key_final.bin"})
        CHECK(slurp(a / f) == slurp(b / f));

    cfg.master_seed += 1;
    run_experiment(cfg, c);
    CHECK(slurp(a / "sifted_alice.bin") != slurp(c / "sifted_alice.bin"));
}

TEST_CASE("offline analysis reproduces the in-memory pipeline byte for byte") {
    const ExperimentConfig cfg = small_config();
    const fs::path run_dir = fresh_dir("run_for_analyze");
    const fs::path ana_dir = fresh_dir("analyze");
    run_experiment(cfg, run_dir);
    analyze_tags(run_dir / "tags.bin", run_dir / "pulses.bin", cfg, ana_dir);
    for (const char* f : {"summary.csv", "decoy_counts.json", "key_budget.json",
                          "run_summary.json", "key_final.bin"})
        CHECK(slurp(run_dir / f) == slurp(ana_dir / f));
}

TEST_CASE("shuffled tag order analyzes identically after the internal sort") {
    const ExperimentConfig cfg = small_config();
    const fs::path run_dir = fresh_dir("run_shuffle");
    run_experiment(cfg, run_dir);

    auto tags = read_tags(run_dir / "tags.bin");
    RandomSource rng(5);
    for (std::size_t i = tags.size() - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(rng.next_double() * double(i + 1));
        std::swap(tags[i], tags[std::min(j, i)]);
    }
    const fs::path shuffled = run_dir / "tags_shuffled.bin";
    write_tags(shuffled, tags);

    const fs::path d1 = fresh_dir("analyze_sorted");
    const fs::path d2 = fresh_dir("analyze_shuffled");
    analyze_tags(run_dir / "tags.bin", run_dir / "pulses.bin", cfg, d1);
    analyze_tags(shuffled, run_dir / "pulses.bin", cfg, d2);
    CHECK(slurp(d1 / "run_summary.json") == slurp(d2 / "run_summary.json"));
    CHECK(slurp(d1 / "summary.csv") == slurp(d2 / "summary.csv"));
}

TEST_CASE("analysis of a truncated tag file reports the byte offset") {
    const ExperimentConfig cfg = small_config();
    const fs::path run_dir = fresh_dir("run_trunc");
    run_experiment(cfg, run_dir);
    const auto size = fs::file_size(run_dir / "tags.bin");
    fs::resize_file(run_dir / "tags.bin", size - 4);
    const fs::path out = fresh_dir("analyze_trunc");
    CHECK_THROWS_WITH_AS(analyze_tags(run_dir / "tags.bin", run_dir / "pulses.bin", cfg, out),
                         doctest::Contains("byte offset"), std::runtime_error);
    CHECK(fs::exists(out / "FAILED"));
}

TEST_CASE("zero-duration configs are rejected") {
    ExperimentConfig cfg = small_config();
    cfg.duration_s = 0;
    cfg.target_n_z = 0;
    CHECK_THROWS_AS(run_experiment(cfg, fresh_dir("zero")), std::invalid_argument);
}

TEST_CASE("monte carlo summary matches the analytic prediction within 3 sigma") {
    ExperimentConfig cfg = small_config();
    cfg.duration_s = 120;
    cfg.aggregation_s = 120;
    cfg.run_error_correction = false;
    cfg.artifacts.write_tags = false;
    cfg.artifacts.write_keys = false;
    const RunSummary mc = run_experiment(cfg, fresh_dir("mc_vs_analytic"));
    const RunSummary an = predict_summary(cfg);
    REQUIRE(mc.rows.size() == 1);
    REQUIRE(an.rows.size() == 1);

    const ExpectedRates r = expected_rates(cfg.channel);
    const double dur = 120;
    // 3 sigma Poisson on the driving count plus a 1-2% systematic allowance
    auto close = [&](double got, double want, double count, double extra_rel) {
        return std::abs(got - want) <= 3.0 * want / std::sqrt(std::max(count, 1.0)) +
                                       extra_rel * want;
    };
    CHECK(close(mc.rows[0].tdr_hz, an.rows[0].tdr_hz, r.tdr_hz * dur, 0.01));
    CHECK(close(mc.rows[0].sifted_bps, an.rows[0].sifted_bps, r.n_z_hz * dur, 0.01));
    CHECK(close(double(mc.counts.n_z()), double(an.counts.n_z()), r.n_z_hz * dur, 0.01));
    CHECK(close(mc.rows[0].qber_z, an.rows[0].qber_z, r.m_z_hz * dur, 0.02));
    CHECK(close(mc.rows[0].qber_x, an.rows[0].qber_x, r.m_x_hz * dur, 0.05));
    CHECK(close(mc.rows[0].snr, an.rows[0].snr,
                (r.noise_hz[0] + r.noise_hz[1] + r.noise_hz[2] + r.noise_hz[3]) * dur, 0.02));
    // key-rate columns inherit the fluctuations of the small m_x sample
    CHECK(mc.rows[0].skr_f_bps == doctest::Approx(an.rows[0].skr_f_bps).epsilon(0.12));
    CHECK(mc.rows[0].skr_inf_bps == doctest::Approx(an.rows[0].skr_inf_bps).epsilon(0.12));
}

namespace {

// minimal JSON-schema subset: type / required / properties / items /
// minimum / maximum; enough for the shipped artifact schemas
bool validates(const nlohmann::json& value, const nlohmann::json& schema, std::string& why) {
    const std::string type = schema.value("type", "");
    if (type == "object") {
        if (!value.is_object()) { why = "expected object"; return false; }
        for (const auto& req : schema.value("required", nlohmann::json::array()))
            if (!value.contains(req.get<std::string>())) {
                why = "missing required " + req.get<std::string>();
                return false;
            }
        if (schema.contains("properties"))
            for (const auto& [key, sub] : schema.at("properties").items())
                if (value.contains(key) && !validates(value.at(key), sub, why)) {
                    why = key + ": " + why;
                    return false;
                }
        return true;
    }
    if (type == "array") {
        if (!value.is_array()) { why = "expected array"; return false; }
        if (schema.contains("items"))
            for (const auto& item : value)
                if (!validates(item, schema.at("items"), why)) return false;
        return true;
    }
    if (type == "integer") {
        if (!value.is_number_integer() && !value.is_number_unsigned()) {
            why = "expected integer";
            return false;
        }
    } else if (type == "number") {
        if (!value.is_number()) { why = "expected number"; return false; }
    } else if (type == "boolean") {
        if (!value.is_boolean()) { why = "expected boolean"; return false; }
    }
    if (schema.contains("minimum") && value.is_number() &&
        value.get<double>() < schema.at("minimum").get<double>()) {
        why = "below minimum";
        return false;
    }
    if (schema.contains("maximum") && value.is_number() &&
        value.get<double>() > schema.at("maximum").get<double>()) {
        why = "above maximum";
        return false;
    }
    return true;
}

} // namespace

TEST_CASE("JSON artifacts validate against the shipped schemas") {
    ExperimentConfig cfg = small_config();
    cfg.duration_s = 10;
    cfg.artifacts.write_tags = false;
    const fs::path out = fresh_dir("schemas");
    run_experiment(cfg, out);

    const fs::path schema_dir = fs::path(FSQKD_SOURCE_DIR) / "schemas";
    struct Pair { const char* artifact; const char* schema; };
    for (const Pair p : {Pair{"decoy_counts.json", "decoy_counts.schema.json"},
                         Pair{"key_budget.json", "key_budget.schema.json"},
                         Pair{"run_summary.json", "run_summary.schema.json"}}) {
        const auto value = read_json(out / p.artifact);
        const auto schema = read_json(schema_dir / p.schema);
        std::string why;
        const bool ok = validates(value, schema, why);
        INFO(p.artifact, ": ", why);
        CHECK(ok);
    }
}

TEST_CASE("sweep is monotone in loss and locates the feasibility cutoffs") {
    ExperimentConfig cfg = default_config();
    cfg.channel.link.coupling.mean_efficiency = std::pow(10.0, -1.4);
    cfg.channel.detectors.window_s = 0.5e-9;
    cfg.target_n_z = 100000000;
    const auto pts = sweep(cfg, SweepAxis::loss_db, 24, 45, 22);
    REQUIRE(pts.size() == 22);
    for (std::size_t i = 1; i < pts.size(); ++i)
        CHECK(pts[i].skr_f_bps <= pts[i - 1].skr_f_bps + 1e-9);
    CHECK(pts.front().skr_f_bps > 0);
    CHECK(pts.back().skr_f_bps == 0);

    CHECK_THROWS_AS(sweep(cfg, SweepAxis::loss_db, 30, 20, 5), std::invalid_argument);

    const auto qpts = sweep(cfg, SweepAxis::qber, 0.0, 0.109, 12);
    CHECK(qpts.front().skr_f_bps > 0);
    CHECK(qpts.back().skr_f_bps == 0.0);
}

TEST_CASE("schedule steers the simulated rates over a day") {
    ExperimentConfig cfg = small_config();
    cfg.duration_s = 40;
    cfg.aggregation_s = 20;
    cfg.chunk_s = 10;
    cfg.run_error_correction = false;
    cfg.artifacts.write_tags = false;
    cfg.artifacts.write_keys = false;
    cfg.schedule = {{0.0, 0.02, 240.0}, {40.0, 0.08, 240.0}};
    const RunSummary s = run_experiment(cfg, fresh_dir("schedule"));
    REQUIRE(s.rows.size() == 2);
    CHECK(s.rows[1].tdr_hz > 1.5 * s.rows[0].tdr_hz);
}
