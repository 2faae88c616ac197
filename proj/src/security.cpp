#include "fsqkd/security.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "fsqkd/postproc.hpp"

namespace fsqkd {

void SecurityEpsilons::validate() const {
    if (!(eps_sec > 0 && eps_sec < 1) || !(eps_cor > 0 && eps_cor < 1))
        throw std::invalid_argument("SecurityEpsilons: parameters must lie in (0,1)");
}

double tau_n(int n, double mu1, double mu2, double p_mu1) {
    if (n < 0) throw std::invalid_argument("tau_n: n must be >= 0");
    auto pois = [n](double mu) {
        if (mu == 0.0) return n == 0 ? 1.0 : 0.0;
        return std::exp(-mu + n * std::log(mu) - std::lgamma(n + 1.0));
    };
    return p_mu1 * pois(mu1) + (1.0 - p_mu1) * pois(mu2);
}

double hoeffding_delta(double n, double eps) {
    if (n < 0) throw std::invalid_argument("hoeffding_delta: n must be >= 0");
    if (!(eps > 0 && eps <= 1)) throw std::invalid_argument("hoeffding_delta: eps must be in (0,1]");
    return std::sqrt(n / 2.0 * std::log(1.0 / eps));
}

namespace {

struct BasisBounds {
    double s0_low = 0, s0_up = 0, s1_low = 0, v1_up = 0;
};

// 1-decoy bounds for one basis from (n_mu1, n_mu2, m_mu1, m_mu2).
BasisBounds basis_bounds(double n1, double n2, double m1, double m2,
                         double mu1, double mu2, double p1,
                         double eps1, bool asymptotic) {
    if (!(mu1 > mu2)) throw std::invalid_argument("decoy_bounds: need mu1 > mu2");
    const double n = n1 + n2, m = m1 + m2;
    const double p2 = 1.0 - p1;
    const double dn = asymptotic ? 0.0 : hoeffding_delta(n, eps1);
    const double dm = asymptotic ? 0.0 : hoeffding_delta(m, eps1);

    const double e1 = std::exp(mu1) / p1, e2 = std::exp(mu2) / p2;
    const double n1_up = e1 * (n1 + dn);
    const double n2_lo = e2 * std::max(0.0, n2 - dn);
    const double m1_up = e1 * (m1 + dm);
    const double m2_lo = e2 * std::max(0.0, m2 - dm);

    const double t0 = tau_n(0, mu1, mu2, p1);
    const double t1 = tau_n(1, mu1, mu2, p1);

    BasisBounds b;
    b.s0_low = std::max(0.0, t0 * (mu1 * n2_lo - mu2 * n1_up) / (mu1 - mu2));
    b.s0_up = std::max(0.0, 2.0 * (m + dm));
    b.v1_up = std::max(0.0, t1 * (m1_up - m2_lo) / (mu1 - mu2));

    const double r2 = (mu2 * mu2) / (mu1 * mu1);
    const double bracket = n2_lo - r2 * n1_up - (1.0 - r2) * (t0 > 0 ? b.s0_up / t0 : 0.0);
    b.s1_low = std::max(0.0, t1 * mu1 / (mu2 * (mu1 - mu2)) * bracket);
    // a bound can never exceed the sample it is drawn from
    b.s0_low = std::min(b.s0_low, n);
    b.s1_low = std::min(b.s1_low, n);
    return b;
}

double gamma_term(double a, double b, double c, double d) {
    if (c <= 0 || d <= 0) return 0.5;
    const double bb = std::clamp(b, 1e-12, 1.0 - 1e-12);
    const double f1 = (c + d) * (1.0 - bb) * bb / (c * d * std::numbers::ln2);
    const double arg = (c + d) / (c * d * (1.0 - bb) * bb) * std::pow(21.0 / a, 2.0);
    if (arg <= 1.0) return 0.0;
    return std::sqrt(f1 * std::log2(arg));
}

} // namespace

KeyBudget decoy_bounds(const DecoyCounts& counts, const ProtocolParams& params,
                       const SecurityEpsilons& eps, SkrMode mode) {
    params.validate();
    eps.validate();
    const bool asym = mode == SkrMode::asymptotic;
    const double e1 = eps.eps1();

    const BasisBounds z = basis_bounds(
        static_cast<double>(counts.n_z_mu1), static_cast<double>(counts.n_z_mu2),
        static_cast<double>(counts.m_z_mu1), static_cast<double>(counts.m_z_mu2),
        params.mu1_z, params.mu2_z, params.p_mu1, e1, asym);
    const BasisBounds x = basis_bounds(
        static_cast<double>(counts.n_x_mu1), static_cast<double>(counts.n_x_mu2),
        static_cast<double>(counts.m_x_mu1), static_cast<double>(counts.m_x_mu2),
        params.mu1_x, params.mu2_x, params.p_mu1, e1, asym);

    KeyBudget kb;
    kb.s_z0_low = z.s0_low;
    kb.s_z0_up = z.s0_up;
    kb.s_z1_low = z.s1_low;
    kb.s_x1_low = x.s1_low;
    kb.v_x1_up = x.v1_up;

    if (x.s1_low <= 0.0) {
        kb.phi_z_up = 0.5;
    } else {
        const double ratio = std::min(0.5, x.v1_up / x.s1_low);
        const double g = asym ? 0.0 : gamma_term(eps.eps_sec, ratio, z.s1_low, x.s1_low);
        kb.phi_z_up = std::clamp(ratio + g, 0.0, 0.5);
    }
    return kb;
}

std::uint64_t key_length(const KeyBudget& budget, const DecoyCounts& counts, double q_z,
                         double f_ec, const SecurityEpsilons& eps, SkrMode mode) {
    const double lambda = f_ec * static_cast<double>(counts.n_z()) * binary_entropy(q_z);
    return key_length_given_leak(budget, lambda, eps, mode);
}

std::uint64_t key_length_given_leak(const KeyBudget& budget, double lambda_ec_bits,
                                    const SecurityEpsilons& eps, SkrMode mode) {
    eps.validate();
    const bool asym = mode == SkrMode::asymptotic;
    const double corrections =
        asym ? 0.0 : 6.0 * std::log2(19.0 / eps.eps_sec) + std::log2(2.0 / eps.eps_cor);
    const double rhs = budget.s_z0_low +
                       budget.s_z1_low * (1.0 - binary_entropy(budget.phi_z_up)) -
                       lambda_ec_bits - corrections;
    if (rhs <= 0.0) return 0;
    return static_cast<std::uint64_t>(std::floor(rhs));
}

double skr(const KeyBudget& budget, double duration_s) {
    if (!(duration_s > 0)) throw std::invalid_argument("skr: duration must be positive");
    return static_cast<double>(budget.l) / duration_s;
}

DecoyCounts expected_decoy_counts(const ChannelConfig& cfg, double window_s,
                                  double duration_s) {
    if (!(duration_s > 0)) throw std::invalid_argument("expected_decoy_counts: duration must be > 0");
    const ExpectedRates r = expected_rates(cfg, window_s);
    auto cnt = [&](double hz) {
        return static_cast<std::uint64_t>(std::llround(hz * duration_s));
    };
    DecoyCounts c;
    c.n_z_mu1 = cnt(r.n_z_mu1_hz);
    c.n_z_mu2 = cnt(r.n_z_mu2_hz);
    c.m_z_mu1 = std::min(cnt(r.m_z_mu1_hz), c.n_z_mu1);
    c.m_z_mu2 = std::min(cnt(r.m_z_mu2_hz), c.n_z_mu2);
    c.n_x_mu1 = cnt(r.n_x_mu1_hz);
    c.n_x_mu2 = cnt(r.n_x_mu2_hz);
    c.m_x_mu1 = std::min(cnt(r.m_x_mu1_hz), c.n_x_mu1);
    c.m_x_mu2 = std::min(cnt(r.m_x_mu2_hz), c.n_x_mu2);
    c.duration_s = duration_s;
    return c;
}

PipelineResult evaluate_model(const ChannelConfig& cfg, double window_s,
                              double f_ec, const SecurityEpsilons& eps,
                              double target_n_z, double duration_s, SkrMode mode) {
    PipelineResult out;
    const ExpectedRates r = expected_rates(cfg, window_s);
    if (duration_s <= 0) {
        if (!(r.n_z_hz > 0)) return out;
        duration_s = target_n_z / r.n_z_hz;
    }
    out.duration_s = duration_s;
    out.counts = expected_decoy_counts(cfg, window_s, duration_s);
    out.budget = decoy_bounds(out.counts, cfg.protocol, eps, mode);
    out.budget.lambda_ec =
        f_ec * static_cast<double>(out.counts.n_z()) * binary_entropy(out.counts.qber_z());
    out.budget.l = key_length_given_leak(out.budget, out.budget.lambda_ec, eps, mode);
    out.skr_bps = static_cast<double>(out.budget.l) / duration_s;
    return out;
}

namespace {

double objective(const OperatingScenario& sc, const ProtocolParams& p) {
    // infeasible tuples score zero
    if (!(p.mu1_z > p.mu2_z && p.mu2_z > 0 && p.mu1_x > p.mu2_x && p.mu2_x > 0)) return 0.0;
    if (!(p.p_z_alice > 0 && p.p_z_alice < 1 && p.p_mu1 > 0 && p.p_mu1 < 1)) return 0.0;
    ChannelConfig cfg = sc.base;
    cfg.protocol = p;
    const PipelineResult res =
        evaluate_model(cfg, sc.window_s, sc.f_ec, sc.eps, sc.target_n_z);
    return res.skr_bps;
}

struct Candidate {
    double skr = -1.0;
    std::array<double, 6> x{};   // mu1_z, mu2_z, mu1_x, mu2_x, p_z_alice, p_mu1

    bool better_than(const Candidate& o) const {
        if (skr != o.skr) return skr > o.skr;
        return x < o.x;   // deterministic tie-break: lexicographically smallest
    }
};

ProtocolParams to_params(const OperatingScenario& sc, const std::array<double, 6>& x) {
    ProtocolParams p = sc.base.protocol;
    p.mu1_z = x[0]; p.mu2_z = x[1];
    p.mu1_x = x[2]; p.mu2_x = x[3];
    p.p_z_alice = x[4]; p.p_mu1 = x[5];
    return p;
}

} // namespace

OptimizeResult optimize_operating_point(const OperatingScenario& scenario) {
    static constexpr double lo[6] = {0.10, 0.02, 0.10, 0.02, 0.50, 0.50};
    static constexpr double hi[6] = {1.00, 0.60, 1.00, 0.60, 0.98, 0.95};

    std::uint64_t evals = 0;
    auto eval = [&](const std::array<double, 6>& x) {
        ++evals;
        return objective(scenario, to_params(scenario, x));
    };

    Candidate best;
    best.x = {0.50, 0.25, 0.50, 0.25, 0.90, 0.70};
    best.skr = eval(best.x);

    // coordinate descent over a shrinking grid
    double step[6] = {0.09, 0.06, 0.09, 0.06, 0.08, 0.05};
    for (int round = 0; round < 6; ++round) {
        bool improved = false;
        for (int dim = 0; dim < 6; ++dim) {
            Candidate local = best;
            for (double v = lo[dim]; v <= hi[dim] + 1e-12; v += step[dim]) {
                Candidate cand = best;
                cand.x[dim] = v;
                cand.skr = eval(cand.x);
                if (cand.better_than(local)) local = cand;
            }
            if (local.better_than(best)) {
                best = local;
                improved = true;
            }
        }
        for (double& s : step) s *= 0.5;
        if (!improved && round >= 2) break;
    }

    if (best.skr <= 0.0)
        throw std::runtime_error("optimize_operating_point: no feasible operating point");

    OptimizeResult out;
    out.params = to_params(scenario, best.x);
    out.skr_bps = best.skr;
    out.evaluations = evals;
    return out;
}

} // namespace fsqkd
