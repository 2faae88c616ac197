#include "fsqkd/sync.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fsqkd {

void DecoyCounts::validate() const {
    if (m_z_mu1 > n_z_mu1 || m_z_mu2 > n_z_mu2 || m_x_mu1 > n_x_mu1 || m_x_mu2 > n_x_mu2)
        throw std::invalid_argument("DecoyCounts: error counts exceed detections");
    if (duration_s < 0)
        throw std::invalid_argument("DecoyCounts: negative duration");
}

namespace {

// circular mean of the phases in bins [peak-3, peak+3]
double refine_peak(const std::vector<double>& hist_weight, const std::vector<double>& hist_phase,
                   std::size_t peak, double period) {
    using std::numbers::pi;
    double cs = 0, sn = 0;
    const std::size_t nb = hist_weight.size();
    for (int k = -3; k <= 3; ++k) {
        const std::size_t b = (peak + nb + static_cast<std::size_t>(k)) % nb;
        const double ang = 2 * pi * hist_phase[b] / period;
        cs += hist_weight[b] * std::cos(ang);
        sn += hist_weight[b] * std::sin(ang);
    }
    double ang = std::atan2(sn, cs);
    if (ang < 0) ang += 2 * pi;
    return ang * period / (2 * pi);
}

double fold_phase(double t, double period) {
    double ph = std::fmod(t, period);
    if (ph < 0) ph += period;
    return ph;
}

// folded-histogram peak phase of a tag range; returns contrast via out-param
double folded_peak(std::span<const TimeTag> tags, double t0, double drift1, double period,
                   double bin_ps, double& contrast) {
    const std::size_t nbins = static_cast<std::size_t>(std::ceil(period / bin_ps));
    std::vector<double> weight(nbins, 0.0), phase_sum(nbins, 0.0);
    std::size_t total = 0;
    for (const auto& tag : tags) {
        if (tag.channel == kChannelPps) continue;
        const double t = (static_cast<double>(tag.timestamp_ps) - t0) / drift1;
        const double ph = fold_phase(t, period);
        std::size_t b = static_cast<std::size_t>(ph / bin_ps);
        if (b >= nbins) b = nbins - 1;
        weight[b] += 1.0;
        phase_sum[b] += ph;
        ++total;
    }
    std::vector<double> phase_center(nbins);
    for (std::size_t b = 0; b < nbins; ++b)
        phase_center[b] = weight[b] > 0 ? phase_sum[b] / weight[b]
                                        : (static_cast<double>(b) + 0.5) * bin_ps;
    const std::size_t peak =
        static_cast<std::size_t>(std::max_element(weight.begin(), weight.end()) - weight.begin());
    const double mean = static_cast<double>(total) / static_cast<double>(nbins);
    contrast = mean > 0 ? weight[peak] / mean : 0.0;
    return refine_peak(weight, phase_center, peak, period);
}

} // namespace

SyncState recover_clock(std::span<const TimeTag> tags, double nominal_period_ps,
                        double tdc_resolution_ps) {
    std::vector<double> pps;
    std::size_t n_signal = 0;
    for (const auto& t : tags) {
        if (t.channel == kChannelPps) pps.push_back(static_cast<double>(t.timestamp_ps));
        else ++n_signal;
    }
    if (pps.size() < 2)
        throw std::invalid_argument("recover_clock: need at least 2 PPS markers");
    if (n_signal < 1000)
        throw std::invalid_argument("recover_clock: need at least 1000 signal tags");

    // coarse: PPS markers are one true second apart
    const double span_s = static_cast<double>(pps.size() - 1);
    const double drift = (pps.back() - pps.front()) / (span_s * 1e12) - 1.0;
    const double drift1 = 1.0 + drift;
    const double t0 = pps.front();

    SyncState st;
    st.slot_period_ps = nominal_period_ps;
    st.drift = drift;
    st.pps_anchor_ps = t0;
    st.offset_ps = folded_peak(tags, t0, drift1, nominal_period_ps, tdc_resolution_ps,
                               st.contrast);
    if (st.contrast < 3.0)
        throw NoLockError("recover_clock: no lock (folded histogram contrast below 3)");

    // fine drift refit over per-second segments
    if (pps.size() >= 3) {
        std::vector<double> xs, ys;
        std::size_t lo = 0;
        for (std::size_t seg = 0; seg + 1 < pps.size(); ++seg) {
            while (lo < tags.size() && static_cast<double>(tags[lo].timestamp_ps) < pps[seg]) ++lo;
            std::size_t hi = lo;
            std::size_t count = 0;
            while (hi < tags.size() && static_cast<double>(tags[hi].timestamp_ps) < pps[seg + 1]) {
                if (tags[hi].channel != kChannelPps) ++count;
                ++hi;
            }
            if (count >= 1000) {
                double c;
                const double ph = folded_peak(tags.subspan(lo, hi - lo), t0, drift1,
                                              nominal_period_ps, tdc_resolution_ps, c);
                if (c >= 3.0) {
                    // unwrap relative to the global offset
                    double d = ph - st.offset_ps;
                    if (d > nominal_period_ps / 2) d -= nominal_period_ps;
                    if (d < -nominal_period_ps / 2) d += nominal_period_ps;
                    xs.push_back(static_cast<double>(seg) + 0.5);
                    ys.push_back(d);
                }
            }
            lo = hi;
        }
        if (xs.size() >= 3) {
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            for (std::size_t i = 0; i < xs.size(); ++i) {
                sx += xs[i]; sy += ys[i];
                sxx += xs[i] * xs[i]; sxy += xs[i] * ys[i];
            }
            const double n = static_cast<double>(xs.size());
            const double denom = n * sxx - sx * sx;
            if (denom > 0) {
                const double slope_ps_per_s = (n * sxy - sx * sy) / denom;   // residual drift
                const double intercept = (sy - slope_ps_per_s * sx) / n;
                st.drift += slope_ps_per_s / 1e12 * drift1;
                st.offset_ps += intercept;
            }
        }
    }
    st.offset_ps = fold_phase(st.offset_ps, nominal_period_ps);
    return st;
}

std::vector<SlotClick> window_filter(std::span<const TimeTag> tags, const SyncState& sync,
                                     double window_s) {
    if (!(window_s > 0)) throw std::invalid_argument("window_filter: window must be positive");
    const double half_ps = window_s * 1e12 / 2.0;
    const double period = sync.slot_period_ps;
    const double drift1 = 1.0 + sync.drift;
    std::vector<SlotClick> out;
    out.reserve(tags.size());
    for (const auto& tag : tags) {
        if (tag.channel == kChannelPps) continue;
        const double t = (static_cast<double>(tag.timestamp_ps) - sync.pps_anchor_ps) / drift1 -
                         sync.offset_ps;
        const double slot_d = std::nearbyint(t / period);
        const double phase = t - slot_d * period;
        if (std::abs(phase) <= half_ps && slot_d >= 0)
            out.push_back({static_cast<std::uint64_t>(slot_d), tag.channel});
    }
    return out;
}

std::vector<SlotClick> balance_efficiency(std::span<const SlotClick> clicks,
                                          const std::array<double, 4>& efficiency,
                                          RandomSource& rng) {
    for (double e : efficiency)
        if (!(e > 0.0 && e <= 1.0))
            throw std::invalid_argument("balance_efficiency: efficiencies must be in (0,1]");
    const double keep[4] = {
        std::min(efficiency[0], efficiency[1]) / efficiency[0],
        std::min(efficiency[0], efficiency[1]) / efficiency[1],
        std::min(efficiency[2], efficiency[3]) / efficiency[2],
        std::min(efficiency[2], efficiency[3]) / efficiency[3],
    };
    std::vector<SlotClick> out;
    out.reserve(clicks.size());
    for (const auto& c : clicks) {
        const double k = keep[c.channel];
        if (k >= 1.0 || rng.next_double() < k) out.push_back(c);
    }
    return out;
}

std::vector<SlotClick> resolve_double_clicks(std::span<const SlotClick> clicks,
                                             RandomSource& rng) {
    std::vector<SlotClick> out;
    out.reserve(clicks.size());
    std::size_t i = 0;
    while (i < clicks.size()) {
        std::size_t j = i;
        while (j < clicks.size() && clicks[j].slot == clicks[i].slot) ++j;
        if (j == i + 1) {
            out.push_back(clicks[i]);
        } else {
            bool has_z = false, has_x = false;
            for (std::size_t k = i; k < j; ++k) {
                if (clicks[k].channel <= kChannelZ1) has_z = true;
                else has_x = true;
            }
            bool pick_z = has_z;
            if (has_z && has_x) pick_z = rng.next_double() < 0.5;
            std::size_t n_match = 0;
            for (std::size_t k = i; k < j; ++k)
                if ((clicks[k].channel <= kChannelZ1) == pick_z) ++n_match;
            std::size_t pick = static_cast<std::size_t>(rng.next_double() * static_cast<double>(n_match));
            if (pick >= n_match) pick = n_match - 1;
            for (std::size_t k = i; k < j; ++k) {
                if ((clicks[k].channel <= kChannelZ1) == pick_z) {
                    if (pick == 0) { out.push_back(clicks[k]); break; }
                    --pick;
                }
            }
        }
        i = j;
    }
    return out;
}

void Sifter::feed(std::span<const SlotClick> detections) {
    for (const auto& det : detections) {
        if (any_ && det.slot <= last_slot_)
            throw std::runtime_error("sift: detections out of order or duplicated slot");
        any_ = true;
        last_slot_ = det.slot;

        const PulseRecord rec = alice_(det.slot);
        const bool bob_z = det.channel <= kChannelZ1;
        if (rec.basis == Basis::Z && bob_z) {
            const std::uint8_t bob_bit = det.channel == kChannelZ1 ? 1 : 0;
            result_.alice_bits.push_back(rec.bit);
            result_.bob_bits.push_back(bob_bit);
            const bool err = bob_bit != rec.bit;
            if (rec.intensity == Intensity::mu1) {
                ++result_.counts.n_z_mu1;
                if (err) ++result_.counts.m_z_mu1;
            } else {
                ++result_.counts.n_z_mu2;
                if (err) ++result_.counts.m_z_mu2;
            }
        } else if (rec.basis == Basis::X && !bob_z) {
            const bool err = det.channel == kChannelXMinus;   // |-> while |+> was sent
            if (rec.intensity == Intensity::mu1) {
                ++result_.counts.n_x_mu1;
                if (err) ++result_.counts.m_x_mu1;
            } else {
                ++result_.counts.n_x_mu2;
                if (err) ++result_.counts.m_x_mu2;
            }
        }
        // basis mismatch: discarded
    }
}

SiftResult sift(const PulseTrain& alice, std::span<const SlotClick> detections) {
    Sifter s([&alice](std::uint64_t slot) { return alice.record(slot); });
    s.feed(detections);
    return s.take();
}

SiftResult sift(const SlotTape& alice, std::span<const SlotClick> detections) {
    Sifter s([&alice](std::uint64_t slot) { return alice.at(slot); });
    s.feed(detections);
    return s.take();
}

} // namespace fsqkd
