// Polarization and time-bin qubit algebra for the entanglement-preserving
// conversion chain:
//
//   |phi+>_AB --(PBS, HWP in S1, BS)--> time-bin B' --(conversion)--> C
//            --(BS, HWP in L2, PBS)--> polarization C'
//
// Qubit ordering is A (x) B with |0> = H or S (short path) and |1> = V or L.

#pragma once

#include "qfc/linalg.hpp"
#include "qfc/sources.hpp"
#include "qfc/state.hpp"

#include <optional>

namespace qfc {

enum class Waveplate { hwp, qwp };

/// Jones matrix of a retarder (pi for HWP, pi/2 for QWP) with its axis at `angle`.
inline Matrix2c waveplate_unitary(Waveplate kind, double angle) {
    const double retardance = kind == Waveplate::hwp ? pi : pi / 2.0;
    const double c2 = std::cos(2.0 * angle);
    const double s2 = std::sin(2.0 * angle);
    Matrix2c axis;
    axis << c2, s2, s2, -c2;
    return std::cos(retardance / 2.0) * Matrix2c::Identity() + I_unit * std::sin(retardance / 2.0) * axis;
}

inline Vector2c ket_h() { return Vector2c(1.0, 0.0); }
inline Vector2c ket_v() { return Vector2c(0.0, 1.0); }

/// Polarization state transmitted by a QWP -> HWP -> PBS(H port) analyzer.
inline Vector2c analyzer_state(double qwp_angle, double hwp_angle) {
    return waveplate_unitary(Waveplate::qwp, qwp_angle).adjoint() *
           waveplate_unitary(Waveplate::hwp, hwp_angle).adjoint() * ket_h();
}

struct PostSelected {
    TwoQubitState state;
    double probability = 0.0;
};

/// PBS splits H into S1 and V into L1; the HWP in S1 and the merging BS leave a
/// V-polarized time-bin qubit H -> S1, V -> L1 in one BS output port (p = 1/2).
inline PostSelected pol_to_timebin(const TwoQubitState& state) {
    return {TwoQubitState(state.matrix()), 0.5};
}

/// Conversion of the B' time-bin qubit to C.
///
/// Both bins are attenuated equally (renormalized on detection), the pump phase
/// is imprinted per bin, the S/L coherence is scaled by `dephasing`, and
/// unpolarized noise is mixed in: (eta rho + nu rho_A (x) I/2) / (eta + nu).
inline TwoQubitState convert_timebin_qubit(const TwoQubitState& state, double eta, double dephasing,
                                           double noise_mean, double pump_phase_early = 0.0,
                                           double pump_phase_late = 0.0) {
    require(finite(eta) && eta >= 0.0 && eta <= 1.0, "conversion efficiency must lie in [0, 1]");
    require(finite(dephasing) && dephasing >= 0.0 && dephasing <= 1.0, "dephasing factor must lie in [0, 1]");
    require(finite(noise_mean) && noise_mean >= 0.0, "noise mean must be non-negative");
    require(finite(pump_phase_early) && finite(pump_phase_late), "pump phases must be finite");
    if (eta + noise_mean <= 0.0) throw NumericalError("nothing reaches the detector (eta + noise = 0)");

    Matrix2c phase = Matrix2c::Zero();
    phase(0, 0) = std::polar(1.0, -pump_phase_early);
    phase(1, 1) = std::polar(1.0, -pump_phase_late);
    const Matrix4c d = kron(Matrix2c::Identity(), phase);
    Matrix4c rho = d * state.matrix() * d.adjoint();
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            if ((r & 1) != (c & 1)) rho(r, c) *= dephasing;

    const Matrix4c noise = kron(partial_trace_b(rho), Matrix2c(Matrix2c::Identity() / 2.0));
    return TwoQubitState((eta * rho + noise_mean * noise) / (eta + noise_mean));
}

enum class Splitter { pbs, bs };

struct MziConfig {
    double t1 = 1e-9;             // long-short path delay, s
    Splitter in = Splitter::bs;   // decoding MZI: BS split ...
    Splitter out = Splitter::pbs; // ... PBS merge
    double relative_phase = 0.0;  // delta between S1-L2 and L1-S2

    void validate() const {
        require(finite(t1) && t1 > 0.0, "MZI delay t1 must be positive");
        require(finite(relative_phase), "MZI phase must be finite");
    }
};

/// Decoding MZI: BS into S2/L2, HWP (V -> H) in L2, PBS merge. The central
/// peak (S1-L2 or L1-S2) carries S -> H, L -> e^{i delta} V with p = 1/2.
inline PostSelected timebin_to_pol(const TwoQubitState& state, const MziConfig& mzi) {
    mzi.validate();
    require(mzi.in == Splitter::bs && mzi.out == Splitter::pbs, "decoding MZI must be BS-in / PBS-out");
    Matrix2c w = Matrix2c::Zero();
    w(0, 0) = 1.0;
    w(1, 1) = std::polar(1.0, mzi.relative_phase);
    const Matrix4c u = kron(Matrix2c::Identity(), w);
    return {TwoQubitState(u * state.matrix() * u.adjoint()), 0.5};
}

/// Arrival-time classes behind the decoding MZI relative to the central peak.
struct MziPathProbabilities {
    double early = 0.0;    // S1-S2, delay -t1, leaves V-polarized
    double central = 0.0;  // S1-L2 or L1-S2
    double late = 0.0;     // L1-L2, delay +t1, leaves H-polarized
};

/// Joint probabilities that A passes `analyzer_a` and the photon leaves the
/// decoding MZI in each time class passing `analyzer_c` (nullopt = no analyzer).
inline MziPathProbabilities mzi_path_probabilities(const TwoQubitState& timebin_state, const MziConfig& mzi,
                                                   const std::optional<Vector2c>& analyzer_a = std::nullopt,
                                                   const std::optional<Vector2c>& analyzer_c = std::nullopt) {
    const Matrix2c pa = analyzer_a ? Matrix2c(*analyzer_a * analyzer_a->adjoint()) : Matrix2c::Identity();
    const Matrix2c pc = analyzer_c ? Matrix2c(*analyzer_c * analyzer_c->adjoint()) : Matrix2c::Identity();
    const Matrix4c& rho = timebin_state.matrix();
    const Matrix2c s_proj = ket_h() * ket_h().adjoint();
    const Matrix2c l_proj = ket_v() * ket_v().adjoint();

    MziPathProbabilities p;
    p.early = 0.5 * (kron(pa, s_proj) * rho).trace().real() * pc(1, 1).real();
    p.late = 0.5 * (kron(pa, l_proj) * rho).trace().real() * pc(0, 0).real();
    const auto decoded = timebin_to_pol(timebin_state, mzi);
    p.central = decoded.probability * (kron(pa, pc) * decoded.state.matrix()).trace().real();
    return p;
}

/// Parameters of the source -> encoder -> converter -> decoder chain.
struct InterfaceChain {
    double p_white = 1.0;     // source Werner weight
    double eta = 1.0;         // conversion x transmission
    double dephasing = 1.0;   // pump-coherence visibility multiplier
    double noise_mean = 0.0;  // noise photons per detection relative to eta
    MziConfig mzi;
};

inline TwoQubitState end_to_end_state(const InterfaceChain& chain) {
    const auto source = entangled_pair_state(chain.p_white);
    const auto encoded = pol_to_timebin(source);
    const auto converted = convert_timebin_qubit(encoded.state, chain.eta, chain.dephasing, chain.noise_mean);
    return timebin_to_pol(converted, chain.mzi).state;
}

// --------------------------------------------------------------------------
// Event stream for the entangled-pair chain (D1 = photon A, D2 = photon C')

struct MziStreamSetup {
    double pair_prob = 0.05;  // at most one pair per pulse
    double rep_period = 1.0 / 82e6;
    double p_white = 1.0;
    double eta = 0.39;        // conversion x transmission of photon B
    double dephasing = 1.0;
    double noise_mean = 0.0;  // noise photons per gate at the C' detector
    MziConfig mzi;
    Detector detector_a{0.6, 0.0, false, channel::d1};
    Detector detector_c{0.15, 0.0, true, channel::d2};
    std::optional<Vector2c> analyzer_a;
    std::optional<Vector2c> analyzer_c;
    double jitter_ps = 60.0;
    double gate_width_ps = 3000.0;
    std::int64_t n_pulses = 1'000'000;
    std::uint64_t seed = 1;
    unsigned threads = 1;

    void validate() const {
        require(finite(pair_prob) && pair_prob >= 0.0 && pair_prob <= 1.0, "pair probability must lie in [0, 1]");
        require(finite(rep_period) && rep_period > 0.0, "repetition period must be positive");
        require(finite(eta) && eta >= 0.0 && eta <= 1.0, "eta must lie in [0, 1]");
        require(finite(noise_mean) && noise_mean >= 0.0, "noise mean must be non-negative");
        require(finite(jitter_ps) && jitter_ps >= 0.0, "timing jitter must be non-negative");
        require(finite(gate_width_ps) && gate_width_ps > 0.0, "gate width must be positive");
        require(n_pulses > 0, "n_pulses must be positive");
        mzi.validate();
        detector_a.validate();
        detector_c.validate();
    }
};

/// The time-bin state entering the decoding MZI without noise (noise is
/// simulated as separate photons).
inline TwoQubitState mzi_input_state(const MziStreamSetup& s) {
    const auto encoded = pol_to_timebin(entangled_pair_state(s.p_white));
    return convert_timebin_qubit(encoded.state, 1.0, s.dephasing, 0.0);
}

inline EventStream generate_mzi_stream(const MziStreamSetup& setup) {
    setup.validate();
    const TwoQubitState rho = mzi_input_state(setup);

    // P(A passes analyzer) and the three path classes conditioned on it.
    const auto joint = mzi_path_probabilities(rho, setup.mzi, setup.analyzer_a, setup.analyzer_c);
    const Matrix2c pa = setup.analyzer_a ? Matrix2c(*setup.analyzer_a * setup.analyzer_a->adjoint())
                                         : Matrix2c::Identity();
    const double p_a = (pa * partial_trace_b(rho.matrix())).trace().real();
    const double p_early = p_a > 0.0 ? joint.early / p_a : 0.0;
    const double p_central = p_a > 0.0 ? joint.central / p_a : 0.0;
    const double p_late = p_a > 0.0 ? joint.late / p_a : 0.0;
    // Unpolarized noise passes a polarizer half of the time.
    const double noise_pass = setup.analyzer_c ? 0.5 : 1.0;

    const double period_ps = setup.rep_period * ps_per_s;
    const double t1_ps = setup.mzi.t1 * ps_per_s;
    const double half_gate = 0.5 * setup.gate_width_ps;
    // Encoder BS keeps the photon with probability 1/2.
    const double survive = 0.5 * setup.eta * setup.detector_c.efficiency;

    auto body = [&](std::int64_t begin, std::int64_t end, RandomStream& rng, std::vector<DetectionEvent>& out) {
        for (std::int64_t pulse = begin; pulse < end; ++pulse) {
            const bool pair = rng.bernoulli(setup.pair_prob);
            bool a_click = false;
            if (pair) a_click = rng.bernoulli(setup.detector_a.efficiency * p_a);
            if (!a_click && setup.detector_a.dark_prob > 0.0) a_click = rng.bernoulli(setup.detector_a.dark_prob);
            const bool c_open = a_click || !setup.detector_c.gated;
            if (!a_click && !c_open) continue;

            const std::int64_t t0 = detail::pulse_time_ps(pulse, period_ps);
            if (a_click) out.push_back({pulse, t0 + detail::jittered(rng, 0.0, setup.jitter_ps), channel::d1});
            if (!c_open) continue;

            double first = std::numeric_limits<double>::infinity();
            if (pair && a_click && rng.bernoulli(survive)) {
                const double u = rng.uniform();
                if (u < p_early) first = -t1_ps;
                else if (u < p_early + p_central) first = 0.0;
                else if (u < p_early + p_central + p_late) first = t1_ps;
            }
            const std::int64_t noise = rng.poisson(setup.noise_mean * noise_pass * setup.detector_c.efficiency);
            for (std::int64_t i = 0; i < noise; ++i)
                first = std::min(first, -half_gate + rng.uniform() * setup.gate_width_ps);
            if (setup.detector_c.dark_prob > 0.0 && rng.bernoulli(setup.detector_c.dark_prob))
                first = std::min(first, -half_gate + rng.uniform() * setup.gate_width_ps);
            if (std::isfinite(first))
                out.push_back({pulse, t0 + detail::jittered(rng, first, setup.jitter_ps), channel::d2});
        }
    };
    return detail::generate_chunked(setup.n_pulses, setup.seed, setup.rep_period, RngDomain::mzi_pulses,
                                    setup.threads, body);
}

}  // namespace qfc
