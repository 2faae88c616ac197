#pragma once

#include <cstdint>

#include "fsqkd/channel.hpp"
#include "fsqkd/protocol.hpp"
#include "fsqkd/sync.hpp"

namespace fsqkd {

struct SecurityEpsilons {
    double eps_sec = 1e-10;
    double eps_cor = 1e-12;
    void validate() const;
    // one concentration inequality per bound, 19 of them in the key-length
    // equation's 6 log2(19/eps_sec) accounting
    double eps1() const { return eps_sec / 19.0; }
};

struct KeyBudget {
    double s_z0_low = 0;
    double s_z0_up = 0;
    double s_z1_low = 0;
    double s_x1_low = 0;
    double v_x1_up = 0;
    double phi_z_up = 0;          // clamped to [0, 1/2]
    double lambda_ec = 0;         // bits disclosed during error correction
    std::uint64_t l = 0;          // secret key length, floored and clamped
};

enum class SkrMode { finite, asymptotic };

// P(n photons) under the two-intensity mixture.
double tau_n(int n, double mu1, double mu2, double p_mu1);

// sqrt(n/2 * ln(1/eps)); the finite-statistics correction used by every bound.
double hoeffding_delta(double n, double eps);

// Vacuum/single-photon bounds and the phase-error bound. Counts may carry
// real-valued entries (analytic mode); everything is clamped to valid
// ranges and never throws on small counts. asymptotic drops all deltas
// and the gamma term.
KeyBudget decoy_bounds(const DecoyCounts& counts, const ProtocolParams& params,
                       const SecurityEpsilons& eps, SkrMode mode = SkrMode::finite);

// l = floor(s_z0 + s_z1 (1 - h(phi_z)) - lambda_ec - 6 log2(19/eps_sec)
//           - log2(2/eps_cor)), clamped at 0. lambda_ec = f_ec n_z h(q_z).
std::uint64_t key_length(const KeyBudget& budget, const DecoyCounts& counts, double q_z,
                         double f_ec, const SecurityEpsilons& eps,
                         SkrMode mode = SkrMode::finite);

// Same bound with an explicitly measured leakage (EC parities + tag bits).
std::uint64_t key_length_given_leak(const KeyBudget& budget, double lambda_ec_bits,
                                    const SecurityEpsilons& eps,
                                    SkrMode mode = SkrMode::finite);

double skr(const KeyBudget& budget, double duration_s);

// Full analytic chain: expected counts at a given loss point -> bounds ->
// key length. Used by sweeps and the optimizer.
DecoyCounts expected_decoy_counts(const ChannelConfig& cfg, double window_s,
                                  double duration_s);

struct PipelineResult {
    KeyBudget budget;
    DecoyCounts counts;
    double skr_bps = 0;
    double duration_s = 0;
};

// Evaluate the modeled pipeline at a duration chosen so that about
// target_n_z sifted Z bits accumulate (or at fixed duration if
// duration_s > 0).
PipelineResult evaluate_model(const ChannelConfig& cfg, double window_s,
                              double f_ec, const SecurityEpsilons& eps,
                              double target_n_z, double duration_s = 0,
                              SkrMode mode = SkrMode::finite);

struct OperatingScenario {
    ChannelConfig base;          // detector bank, clock, losses, noise
    double target_n_z = 1e8;
    double f_ec = 1.06;
    SecurityEpsilons eps;
    double window_s = 1e-9;
};

struct OptimizeResult {
    ProtocolParams params;
    double skr_bps = 0;
    std::uint64_t evaluations = 0;
};

// Deterministic grid + coordinate-descent search over
// {mu1, mu2 per basis, p_z_alice, p_mu1}; ties resolve to the
// lexicographically smallest parameter tuple.
OptimizeResult optimize_operating_point(const OperatingScenario& scenario);

} // namespace fsqkd
