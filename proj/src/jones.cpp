#include "fsqkd/jones.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fsqkd {

using std::numbers::pi;

JonesVector JonesVector::normalized() const {
    const double n = std::sqrt(norm2());
    if (n == 0.0) throw std::domain_error("cannot normalize zero Jones vector");
    JonesVector out{amp_h / n, amp_v / n};
    // fix global phase: amp_h real >= 0; if amp_h vanishes, make amp_v real >= 0
    const double ah = std::abs(out.amp_h);
    if (ah > 1e-15) {
        const std::complex<double> ph = out.amp_h / ah;
        out.amp_h = ah;
        out.amp_v /= ph;
    } else {
        const double av = std::abs(out.amp_v);
        out.amp_h = 0.0;
        out.amp_v = av;
    }
    return out;
}

std::complex<double> overlap(const JonesVector& a, const JonesVector& b) {
    return std::conj(a.amp_h) * b.amp_h + std::conj(a.amp_v) * b.amp_v;
}

double overlap2(const JonesVector& a, const JonesVector& b) {
    return std::norm(overlap(a, b));
}

JonesVector orthogonal(const JonesVector& a) {
    return JonesVector{-std::conj(a.amp_v), std::conj(a.amp_h)}.normalized();
}

namespace states {
JonesVector H() { return {1.0, 0.0}; }
JonesVector V() { return {0.0, 1.0}; }
JonesVector plus() { return encode_bloch(pi / 2, 0.0); }
JonesVector minus() { return {1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0)}; }
JonesVector L() { return encode_bloch(pi / 2, -pi / 2); }
JonesVector R() { return encode_bloch(pi / 2, pi / 2); }
}

JonesVector encode_bloch(double theta, double phi) {
    if (!(theta >= 0.0 && theta <= pi))
        throw std::domain_error("encode_bloch: theta outside [0, pi]");
    if (!(phi >= -pi && phi <= pi))
        throw std::domain_error("encode_bloch: phi outside [-pi, pi]");
    const double c = std::cos(theta / 2.0);
    const double s = std::sin(theta / 2.0);
    JonesVector v{c, std::polar(s, phi)};
    return v.normalized();
}

JonesVector command_to_state(Basis basis, int bit, const EncoderImperfection& imp) {
    if (bit != 0 && bit != 1)
        throw std::domain_error("command_to_state: bit must be 0 or 1");
    if (basis == Basis::X && bit != 0)
        throw std::domain_error("command_to_state: |-> is never prepared");

    double theta = pi / 2 + imp.theta_error;
    double phi = 0.0;
    if (basis == Basis::Z) {
        // RF phase is applied only for the Z states, so phi_error enters here
        phi = (bit == 0 ? -pi / 2 : pi / 2) + (bit == 0 ? -imp.phi_error : imp.phi_error);
    }
    theta = std::clamp(theta, 0.0, pi);
    if (phi > pi) phi -= 2 * pi;
    if (phi < -pi) phi += 2 * pi;
    return encode_bloch(theta, phi);
}

double extinction_ratio_db(const JonesVector& state, const JonesVector& target) {
    const JonesVector t = target.normalized();
    const double p_target = overlap2(t, state);
    const double p_ortho = overlap2(orthogonal(t), state);
    if (p_ortho == 0.0) return kInfiniteExtinction;
    return 10.0 * std::log10(p_target / p_ortho);
}

double intrinsic_qber_from_er(double er_db) {
    if (er_db < 0.0) throw std::domain_error("intrinsic_qber_from_er: negative ER");
    return 1.0 / (1.0 + std::pow(10.0, er_db / 10.0));
}

} // namespace fsqkd
