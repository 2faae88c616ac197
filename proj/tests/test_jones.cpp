#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fsqkd/jones.hpp"

using namespace fsqkd;
using std::numbers::pi;

namespace {
double dist(const JonesVector& a, const JonesVector& b) {
    return std::sqrt(std::norm(a.amp_h - b.amp_h) + std::norm(a.amp_v - b.amp_v));
}
}

TEST_CASE("encode_bloch hits the named states") {
    const double r2 = 1.0 / std::sqrt(2.0);
    const JonesVector plus = encode_bloch(pi / 2, 0.0);
    CHECK(std::abs(plus.amp_h.real() - r2) < 1e-12);
    CHECK(std::abs(plus.amp_v.real() - r2) < 1e-12);

    const JonesVector h = encode_bloch(0.0, 1.23);
    CHECK(std::abs(h.amp_h.real() - 1.0) < 1e-12);
    CHECK(std::abs(h.amp_v) < 1e-12);

    const JonesVector l = encode_bloch(pi / 2, -pi / 2);
    CHECK(std::abs(l.amp_h.real() - r2) < 1e-12);
    CHECK(std::abs(l.amp_v - std::complex<double>(0.0, -r2)) < 1e-12);
}

TEST_CASE("encode_bloch rejects out-of-range angles") {
    CHECK_THROWS_AS(encode_bloch(-0.1, 0.0), std::domain_error);
    CHECK_THROWS_AS(encode_bloch(pi + 0.1, 0.0), std::domain_error);
    CHECK_THROWS_AS(encode_bloch(1.0, 4.0), std::domain_error);
}

TEST_CASE("normalization invariant") {
    for (double th : {0.0, 0.3, 1.2, pi / 2, 2.9, pi})
        for (double ph : {-pi, -1.0, 0.0, 0.5, pi})
            CHECK(std::abs(encode_bloch(th, ph).norm2() - 1.0) < 1e-12);
}

TEST_CASE("command_to_state ideal mapping and rejection") {
    CHECK(dist(command_to_state(Basis::Z, 0), states::L()) < 1e-12);
    CHECK(dist(command_to_state(Basis::Z, 1), states::R()) < 1e-12);
    CHECK(dist(command_to_state(Basis::X, 0), states::plus()) < 1e-12);
    CHECK_THROWS_AS(command_to_state(Basis::X, 1), std::domain_error);
}

TEST_CASE("mutual unbiasedness and orthogonality of the ideal states") {
    CHECK(std::abs(overlap2(states::L(), states::plus()) - 0.5) < 1e-12);
    CHECK(std::abs(overlap2(states::R(), states::plus()) - 0.5) < 1e-12);
    CHECK(std::abs(overlap2(states::L(), states::minus()) - 0.5) < 1e-12);
    CHECK(std::abs(overlap(states::L(), states::R())) < 1e-12);
    CHECK(std::abs(overlap(states::plus(), states::minus())) < 1e-12);
}

TEST_CASE("encoder imperfection: 0.063 rad gives about 30 dB of extinction") {
    EncoderImperfection imp;
    imp.theta_error = 0.063;
    const JonesVector psi = command_to_state(Basis::Z, 0, imp);
    const double wrong = overlap2(states::R(), psi);
    const double right = overlap2(states::L(), psi);
    CHECK(wrong / right == doctest::Approx(1e-3).epsilon(0.01));
    CHECK(extinction_ratio_db(psi, states::L()) == doctest::Approx(30.0).epsilon(0.01));
}

TEST_CASE("phi error perturbs only the RF-modulated states") {
    EncoderImperfection imp;
    imp.phi_error = 0.09;
    CHECK(dist(command_to_state(Basis::X, 0, imp), states::plus()) < 1e-12);
    CHECK(dist(command_to_state(Basis::Z, 0, imp), states::L()) > 1e-3);
}

TEST_CASE("extinction ratio examples") {
    CHECK(extinction_ratio_db(states::L(), states::L()) == kInfiniteExtinction);
    CHECK(std::abs(extinction_ratio_db(states::plus(), states::L())) < 1e-9);

    // a state with exactly 1e-3 orthogonal power
    const double th = 2.0 * std::asin(std::sqrt(1e-3));
    const JonesVector psi = encode_bloch(th, 0.0);   // |<V|psi>|^2 = 1e-3
    CHECK(extinction_ratio_db(psi, states::H()) == doctest::Approx(29.996).epsilon(1e-4));
}

TEST_CASE("intrinsic qber from extinction ratio") {
    CHECK(intrinsic_qber_from_er(0.0) == doctest::Approx(0.5));
    CHECK(intrinsic_qber_from_er(30.0) == doctest::Approx(9.99e-4).epsilon(1e-4));
    CHECK(intrinsic_qber_from_er(23.5) == doctest::Approx(4.446972e-3).epsilon(1e-5));
    CHECK_THROWS_AS(intrinsic_qber_from_er(-1.0), std::domain_error);
}

TEST_CASE("perfect command states have unbounded extinction ratio") {
    CHECK(extinction_ratio_db(command_to_state(Basis::Z, 0), states::L()) == kInfiniteExtinction);
    CHECK(extinction_ratio_db(command_to_state(Basis::Z, 1), states::R()) == kInfiniteExtinction);
    CHECK(extinction_ratio_db(command_to_state(Basis::X, 0), states::plus()) == kInfiniteExtinction);
}

TEST_CASE("encode_bloch is continuous") {
    const double d = 1e-6;
    for (double th : {0.2, pi / 2, 2.8}) {
        for (double ph : {-2.0, 0.0, 1.5}) {
            const JonesVector a = encode_bloch(th, ph);
            const JonesVector b = encode_bloch(th + d, ph + d);
            CHECK(dist(a, b) < 10 * d);
        }
    }
}
