#include "qfc/counting.hpp"
#include "qfc/encodings.hpp"
#include "qfc/metrics.hpp"
#include "qfc/tomography.hpp"

#include <gtest/gtest.h>

using namespace qfc;

namespace {

// |<a|b>|^2 so global phases drop out.
double overlap(const Vector2c& a, const Vector2c& b) { return std::norm(a.dot(b)); }

Vector2c pol(cplx h, cplx v) { return Vector2c(h, v).normalized(); }

}  // namespace

TEST(waveplate, jones_matrices) {
    const Matrix2c hwp0 = waveplate_unitary(Waveplate::hwp, 0.0);
    EXPECT_LT(max_abs(hwp0 - I_unit * pauli::z()), 1e-15);
    for (double a : {0.0, 0.3, 1.1}) {
        for (auto k : {Waveplate::hwp, Waveplate::qwp}) {
            const Matrix2c u = waveplate_unitary(k, a);
            EXPECT_LT(max_abs(u.adjoint() * u - Matrix2c::Identity()), 1e-14);
        }
        const Matrix2c q = waveplate_unitary(Waveplate::qwp, a);
        EXPECT_LT(max_abs(q * q - waveplate_unitary(Waveplate::hwp, a)), 1e-14);
    }
    // HWP at 22.5 deg maps H to D.
    EXPECT_NEAR(overlap(waveplate_unitary(Waveplate::hwp, pi / 8) * ket_h(), pol(1, 1)), 1.0, 1e-14);
}

TEST(waveplate, analyzer_angles_select_the_six_states) {
    const double s = 1.0 / std::sqrt(2.0);
    struct Case {
        AnalyzerAngles a;
        Vector2c expected;
    };
    const Case cases[] = {{analyzer_h, pol(1, 0)},      {analyzer_v, pol(0, 1)},      {analyzer_d, pol(s, s)},
                          {analyzer_a, pol(s, -s)},     {analyzer_r, pol(s, I_unit * s)},
                          {analyzer_l, pol(s, -I_unit * s)}};
    for (const auto& c : cases) EXPECT_NEAR(overlap(analyzer_state(c.a.qwp, c.a.hwp), c.expected), 1.0, 1e-14);
}

TEST(encoding, round_trip_preserves_state_and_probabilities) {
    const auto bell = TwoQubitState::pure(bell_phi_plus());
    const auto enc = pol_to_timebin(bell);
    EXPECT_EQ(enc.probability, 0.5);
    const auto dec = timebin_to_pol(enc.state, MziConfig{});
    EXPECT_EQ(dec.probability, 0.5);
    EXPECT_LT(max_abs(dec.state.matrix() - bell.matrix()), 1e-15);
    EXPECT_NEAR(fidelity(dec.state, bell_phi_plus()), 1.0, 1e-15);
}

TEST(encoding, decoding_phase_maps_to_bell_phase) {
    MziConfig mzi;
    mzi.relative_phase = pi;
    const auto out = timebin_to_pol(TwoQubitState::pure(bell_phi_plus()), mzi);
    EXPECT_NEAR(fidelity(out.state, bell_phi_minus()), 1.0, 1e-14);
    MziConfig wrong;
    wrong.in = Splitter::pbs;
    EXPECT_THROW(timebin_to_pol(out.state, wrong), InvalidArgument);
}

TEST(conversion_channel, ideal_is_identity_and_noise_is_mixing) {
    const auto bell = TwoQubitState::pure(bell_phi_plus());
    EXPECT_LT(max_abs(convert_timebin_qubit(bell, 0.39, 1.0, 0.0).matrix() - bell.matrix()), 1e-15);
    // Equal signal and noise: (rho + rho_A (x) I/2) / 2 for phi+ gives F = (1 + 1/4) / 2.
    const auto mixed = convert_timebin_qubit(bell, 0.2, 1.0, 0.2);
    EXPECT_NEAR(fidelity(mixed, bell_phi_plus()), 0.625, 1e-14);
    EXPECT_THROW(convert_timebin_qubit(bell, 0.0, 1.0, 0.0), NumericalError);
    EXPECT_THROW(convert_timebin_qubit(bell, 1.2, 1.0, 0.0), InvalidArgument);
}

TEST(conversion_channel, dephasing_scales_coherence_only) {
    // Werner with visibility v: F = (1 + p)/4 + v p / 2.
    for (double p : {1.0, 0.9333}) {
        for (double v : {1.0, 0.99906, 0.5, 0.0}) {
            const auto out = convert_timebin_qubit(entangled_pair_state(p), 1.0, v, 0.0);
            EXPECT_NEAR(fidelity(out, bell_phi_plus()), (1.0 + p) / 4.0 + v * p / 2.0, 1e-14);
        }
    }
}

TEST(conversion_channel, pump_phase_rotates_the_bell_phase) {
    const auto out = convert_timebin_qubit(TwoQubitState::pure(bell_phi_plus()), 1.0, 1.0, 0.0, 0.0, pi);
    EXPECT_NEAR(fidelity(out, bell_phi_minus()), 1.0, 1e-14);
}

TEST(chain, end_to_end_fidelity_closed_form) {
    InterfaceChain chain;
    chain.p_white = 0.9333;
    chain.dephasing = std::exp(-2.0 * pi * 150e3 * 1e-9);
    chain.eta = 0.39;
    const double f_sig = (1.0 + chain.p_white) / 4.0 + chain.dephasing * chain.p_white / 2.0;
    EXPECT_NEAR(fidelity(end_to_end_state(chain), bell_phi_plus()), f_sig, 1e-14);
    chain.noise_mean = 0.39;  // equal parts: the noise term has F = 1/4
    EXPECT_NEAR(fidelity(end_to_end_state(chain), bell_phi_plus()), 0.5 * (f_sig + 0.25), 1e-14);
}

TEST(mzi_paths, one_two_one_without_analyzers) {
    const auto p = mzi_path_probabilities(TwoQubitState::pure(bell_phi_plus()), MziConfig{});
    EXPECT_NEAR(p.early, 0.25, 1e-15);
    EXPECT_NEAR(p.central, 0.5, 1e-15);
    EXPECT_NEAR(p.late, 0.25, 1e-15);
}

TEST(mzi_paths, diagonal_analyzers_on_both_sides) {
    // A and C' analyzed at +45 deg: side peaks each carry 1/2 * 1/2 * 1/2, the
    // central peak the full phi+ correlation 1/2 * 1/2.
    const Vector2c d = pol(1, 1);
    const auto p = mzi_path_probabilities(TwoQubitState::pure(bell_phi_plus()), MziConfig{}, d, d);
    EXPECT_NEAR(p.early, 0.0625, 1e-15);
    EXPECT_NEAR(p.central, 0.25, 1e-15);
    EXPECT_NEAR(p.late, 0.0625, 1e-15);
    // Orthogonal analyzers: the central peak vanishes.
    const auto q = mzi_path_probabilities(TwoQubitState::pure(bell_phi_plus()), MziConfig{}, d, pol(1, -1));
    EXPECT_NEAR(q.central, 0.0, 1e-15);
}

TEST(mzi_stream, three_peaks_and_window_selection) {
    MziStreamSetup s;
    s.n_pulses = 2'000'000;
    s.detector_c.efficiency = 0.5;
    s.eta = 1.0;
    const auto stream = generate_mzi_stream(s);
    const auto h = delay_histogram(stream, channel::d1, channel::d2, 20.0);
    const double t1 = 1000.0;
    const double early = h.mass_between(-t1 - 450, -t1 + 450);
    const double central = h.mass_between(-450, 450);
    const double late = h.mass_between(t1 - 450, t1 + 450);
    EXPECT_EQ(early + central + late, h.total());
    EXPECT_NEAR(central / early, 2.0, 0.1);
    EXPECT_NEAR(central / late, 2.0, 0.1);
    const auto sel = select_window(stream, channel::d1, channel::d2, {200.0, 0.0});
    const auto hs = delay_histogram(sel, channel::d1, channel::d2, 20.0);
    EXPECT_EQ(hs.mass_between(-150, 150), hs.total());
    EXPECT_GT(hs.total(), 0.6 * central);
}
