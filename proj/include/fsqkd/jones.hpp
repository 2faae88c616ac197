#pragma once

#include <complex>
#include <limits>

namespace fsqkd {

enum class Basis : std::uint8_t { Z = 0, X = 1 };

// Polarization state in the H/V field basis. Normalized with the global
// phase fixed so amp_h is real and non-negative; this makes states
// directly comparable.
struct JonesVector {
    std::complex<double> amp_h{1.0, 0.0};
    std::complex<double> amp_v{0.0, 0.0};

    double norm2() const {
        return std::norm(amp_h) + std::norm(amp_v);
    }
    JonesVector normalized() const;
};

std::complex<double> overlap(const JonesVector& a, const JonesVector& b);   // <a|b>
double overlap2(const JonesVector& a, const JonesVector& b);                // |<a|b>|^2
JonesVector orthogonal(const JonesVector& a);

namespace states {
JonesVector H();
JonesVector V();
JonesVector plus();     // (|H> + |V>)/sqrt2
JonesVector minus();    // (|H> - |V>)/sqrt2
JonesVector L();        // (|H> - i|V>)/sqrt2, encodes bit 0 of Z
JonesVector R();        // (|H> + i|V>)/sqrt2, encodes bit 1 of Z
}

// Deviations of the encoder from the ideal transfer function, expressed
// in the chip's control coordinates: the inner MZI sets the colatitude,
// the external modulators apply the +-pi/2 phase used for the Z states.
// phi_error therefore perturbs only states with a nonzero ideal phase.
struct EncoderImperfection {
    double theta_error = 0.0;          // rad, inner-MZI colatitude offset
    double phi_error = 0.0;            // rad, offset of the applied pi/2 phase
    double intensity_imbalance = 1.0;  // X-state mean photon number scale
};

// cos(theta/2)|H> + e^{i phi} sin(theta/2)|V>, theta in [0,pi], phi in [-pi,pi]
JonesVector encode_bloch(double theta, double phi);

// Protocol command -> emitted state. Only |L>, |R>, |+> are preparable;
// (X, bit=1) is rejected.
JonesVector command_to_state(Basis basis, int bit,
                             const EncoderImperfection& imp = {});

inline constexpr double kInfiniteExtinction = std::numeric_limits<double>::infinity();

// 10 log10(P_target / P_orthogonal); +infinity when the orthogonal power
// is exactly zero.
double extinction_ratio_db(const JonesVector& state, const JonesVector& target);

// Error probability of a state whose extinction ratio w.r.t. the ideal
// state is er_db: 1 / (1 + 10^(er/10)).
double intrinsic_qber_from_er(double er_db);

} // namespace fsqkd
