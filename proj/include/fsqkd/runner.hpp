#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "fsqkd/channel.hpp"
#include "fsqkd/postproc.hpp"
#include "fsqkd/security.hpp"
#include "fsqkd/sync.hpp"

namespace fsqkd {

struct SchedulePoint {
    double t_s = 0;
    double coupling_mean = 0.04;
    double background_rate_hz = 240;
};

struct ArtifactOptions {
    bool write_tags = false;
    bool write_pulses = true;   // procedural tape header, regenerates any slot
    bool write_keys = true;
};

struct ExperimentConfig {
    ChannelConfig channel;
    SecurityEpsilons epsilons;
    double duration_s = 0;          // used when target_n_z == 0
    std::uint64_t target_n_z = 0;   // stop once this many sifted Z bits accumulated
    std::uint64_t master_seed = 1;
    double aggregation_s = 240;     // summary row interval
    double chunk_s = 10;            // streaming granularity
    double f_ec_analytic = 1.06;    // used when EC is not run
    bool run_error_correction = true;
    TagStreamSimulator::Kernel kernel = TagStreamSimulator::Kernel::fast;
    std::vector<SchedulePoint> schedule;
    ArtifactOptions artifacts;

    void validate() const;
};

struct SummaryRow {
    double t_s = 0;
    double tdr_hz = 0;
    double snr = 0;
    double qber_z = 0;
    double qber_x = 0;
    double sifted_bps = 0;
    double skr_inf_bps = 0;    // asymptotic rate of this interval
    double skr_f_bps = 0;      // finite-key rate of the data accumulated so far
};

struct RunTotals {
    std::uint64_t n_z = 0;
    std::uint64_t l = 0;
    double duration_s = 0;
};

struct RunSummary {
    std::vector<SummaryRow> rows;
    DecoyCounts counts;
    KeyBudget budget;
    RunTotals totals;
    double f_ec_measured = 0;
    bool verified = false;
    bool error_correction_ran = false;
};

std::string summary_csv(const RunSummary& s);
nlohmann::json summary_json(const RunSummary& s);

struct PostprocOutcome {
    BitVec corrected;
    BitVec final_key;
    std::uint64_t leaked_bits = 0;
    std::uint64_t corrected_errors = 0;
    double f_ec_measured = 0;
    bool verified = false;
};

// Cascade over fixed-size frames, correctness verification, then blocked
// Toeplitz compression to the bound length. Fills lambda_ec and l of the
// budget from the measured leakage.
PostprocOutcome run_postprocessing(const ExperimentConfig& cfg, const SiftResult& sift,
                                   KeyBudget& budget);

// End-to-end pipeline: simulate -> synchronize -> window -> balance ->
// resolve -> sift -> decoy bounds -> EC -> verify -> PA. Artifacts land
// in outdir. Any stage failure writes a FAILED marker there and
// rethrows with the stage name prefixed.
RunSummary run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& outdir);

// Offline re-analysis of recorded streams; same receiver chain and same
// artifacts, byte for byte, as the in-memory pipeline on the same data.
RunSummary analyze_tags(const std::filesystem::path& tag_file,
                        const std::filesystem::path& pulse_file,
                        const ExperimentConfig& cfg,
                        const std::filesystem::path& outdir);

// Analytic counterpart of the summary rows, same column conventions.
RunSummary predict_summary(const ExperimentConfig& cfg);

enum class SweepAxis { loss_db, qber, block_size };

struct SweepPoint {
    double value = 0;
    std::uint64_t l = 0;
    double skr_f_bps = 0;
    double skr_inf_bps = 0;
    double qber_z = 0;
};

std::vector<SweepPoint> sweep(const ExperimentConfig& cfg, SweepAxis axis,
                              double from, double to, int points);
std::string sweep_csv(SweepAxis axis, const std::vector<SweepPoint>& pts);

nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig default_config();
ExperimentConfig april18_config();   // piecewise-linear approximation of a field day

} // namespace fsqkd
