// Photon-pair sources, heralding, click detectors and the Monte Carlo HBT
// (start/stop) event generator.

#pragma once

#include "qfc/events.hpp"
#include "qfc/linalg.hpp"
#include "qfc/rng.hpp"
#include "qfc/state.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

namespace qfc {

enum class PairStatistics {
    poisson,  // multimode SPDC
    thermal,  // single-mode SPDC
    single,   // mu -> 0 limit: at most one pair per pulse
};

struct SpdcSource {
    double mu = 0.05;                 // mean pairs per pulse
    double rep_period = 1.0 / 82e6;   // s
    int pair_truncation = 4;
    PairStatistics statistics = PairStatistics::poisson;

    void validate() const {
        require(finite(mu) && mu >= 0.0, "mean pair number mu must be non-negative");
        require(finite(rep_period) && rep_period > 0.0, "repetition period must be positive");
        require(pair_truncation >= 1, "pair truncation must be >= 1");
        if (statistics == PairStatistics::single) require(mu <= 1.0, "single-pair emission probability must be <= 1");
    }

    /// P(k pairs), k = 0..pair_truncation, renormalized after truncation.
    std::vector<double> pair_distribution() const {
        validate();
        std::vector<double> p(pair_truncation + 1, 0.0);
        switch (statistics) {
        case PairStatistics::poisson: {
            double term = std::exp(-mu);
            for (int k = 0; k <= pair_truncation; ++k) {
                p[k] = term;
                term *= mu / (k + 1);
            }
            break;
        }
        case PairStatistics::thermal:
            for (int k = 0; k <= pair_truncation; ++k) p[k] = std::pow(mu, k) / std::pow(1.0 + mu, k + 1);
            break;
        case PairStatistics::single:
            p[0] = 1.0 - mu;
            p[1] = mu;
            break;
        }
        double total = 0.0;
        for (double x : p) total += x;
        for (double& x : p) x /= total;
        return p;
    }
};

struct Detector {
    double efficiency = 0.15;
    double dark_prob = 1e-4;  // per gate
    bool gated = true;
    int channel_id = channel::d2;

    void validate() const {
        require(finite(efficiency) && efficiency >= 0.0 && efficiency <= 1.0, "detector efficiency must lie in [0, 1]");
        require(finite(dark_prob) && dark_prob >= 0.0 && dark_prob <= 1.0, "dark-count probability must lie in [0, 1]");
    }
};

/// Click probability for an n-photon Fock input.
inline double click_probability_fock(std::int64_t n, const Detector& det) {
    det.validate();
    require(n >= 0, "photon number must be non-negative");
    return 1.0 - (1.0 - det.dark_prob) * std::pow(1.0 - det.efficiency, static_cast<double>(n));
}

/// Click probability for Poissonian light of the given mean.
inline double click_probability_poissonian(double mean_exposure, const Detector& det) {
    det.validate();
    require(finite(mean_exposure) && mean_exposure >= 0.0, "mean exposure must be non-negative");
    return 1.0 - (1.0 - det.dark_prob) * std::exp(-det.efficiency * mean_exposure);
}

inline bool detect(double mean_exposure, const Detector& det, RandomStream& rng) {
    return rng.bernoulli(click_probability_poissonian(mean_exposure, det));
}

inline bool detect_fock(std::int64_t n, const Detector& det, RandomStream& rng) {
    return rng.bernoulli(click_probability_fock(n, det));
}

/// P(n_B = k | herald click), from the truncated pair-number distribution.
inline std::vector<double> herald_single_photon(const SpdcSource& src, const Detector& herald) {
    src.validate();
    herald.validate();
    require(src.statistics == PairStatistics::single || src.pair_truncation >= 2,
            "pair truncation must be >= 2 so multi-pair terms are represented");
    auto p = src.pair_distribution();
    double total = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        p[k] *= click_probability_fock(static_cast<std::int64_t>(k), herald);
        total += p[k];
    }
    if (!(total > 0.0)) throw NumericalError("herald never clicks: conditional distribution undefined");
    for (double& x : p) x /= total;
    return p;
}

/// p_white |phi+><phi+| + (1 - p_white) I/4.
inline TwoQubitState entangled_pair_state(double p_white) {
    require(finite(p_white) && p_white >= 0.0 && p_white <= 1.0, "p_white must lie in [0, 1]");
    const Vector4c phi = bell_phi_plus();
    return TwoQubitState(p_white * phi * phi.adjoint() + (1.0 - p_white) * Matrix4c::Identity() / 4.0);
}

// --------------------------------------------------------------------------
// HBT Monte Carlo

enum class SourceKind {
    spdc,      // heralded: D1 detects the idler
    coherent,  // laser light, D1 is the clock trigger
    thermal,   // single-mode thermal light, D1 is the clock trigger
};

struct HbtSetup {
    SourceKind kind = SourceKind::spdc;
    SpdcSource source;
    Detector herald{0.6, 1e-4, false, channel::d1};
    Detector start{0.15, 1e-4, true, channel::d2};
    Detector stop{0.15, 1e-4, true, channel::d3};
    double signal_transmission = 0.39;  // conversion efficiency x components, per photon
    double noise_mean = 0.0;            // noise photons per pulse reaching the splitter
    double splitter_ratio = 0.5;        // probability to go to the start detector
    double jitter_ps = 60.0;
    double gate_width_ps = 500.0;       // noise and dark clicks are uniform across the gate
    std::int64_t n_pulses = 1'000'000;
    std::uint64_t seed = 1;
    unsigned threads = 1;

    void validate() const {
        source.validate();
        herald.validate();
        start.validate();
        stop.validate();
        require(finite(signal_transmission) && signal_transmission >= 0.0 && signal_transmission <= 1.0,
                "signal transmission must lie in [0, 1]");
        require(finite(noise_mean) && noise_mean >= 0.0, "noise mean must be non-negative");
        require(splitter_ratio >= 0.0 && splitter_ratio <= 1.0, "splitter ratio must lie in [0, 1]");
        require(finite(jitter_ps) && jitter_ps >= 0.0, "timing jitter must be non-negative");
        require(finite(gate_width_ps) && gate_width_ps > 0.0, "gate width must be positive");
        require(n_pulses > 0, "n_pulses must be positive");
        if (kind == SourceKind::spdc && source.statistics != PairStatistics::single)
            require(source.pair_truncation >= 2, "pair truncation must be >= 2");
    }
};

inline constexpr std::int64_t pulse_chunk_size = std::int64_t{1} << 20;

namespace detail {

inline std::int64_t pulse_time_ps(std::int64_t pulse, double rep_period_ps) {
    return static_cast<std::int64_t>(std::llround(static_cast<double>(pulse) * rep_period_ps));
}

inline std::int64_t jittered(RandomStream& rng, double offset_ps, double jitter_ps) {
    const double t = jitter_ps > 0.0 ? rng.normal(offset_ps, jitter_ps) : offset_ps;
    return static_cast<std::int64_t>(std::llround(t));
}

/// Samples index k from a cumulative table with a single uniform draw.
inline int sample_cdf(const std::vector<double>& cdf, double u) {
    for (std::size_t k = 0; k < cdf.size(); ++k)
        if (u < cdf[k]) return static_cast<int>(k);
    return static_cast<int>(cdf.size()) - 1;
}

/// Chunked, order-stable event generation shared by the Monte Carlo streams.
inline EventStream generate_chunked(std::int64_t n_pulses, std::uint64_t seed, double rep_period, RngDomain domain,
                                    unsigned threads,
                                    const std::function<void(std::int64_t, std::int64_t, RandomStream&,
                                                             std::vector<DetectionEvent>&)>& chunk_body) {
    const auto n_chunks = static_cast<std::size_t>((n_pulses + pulse_chunk_size - 1) / pulse_chunk_size);
    std::vector<std::vector<DetectionEvent>> parts(n_chunks);
    parallel_for(n_chunks, threads, [&](std::size_t c) {
        RandomStream rng(seed, domain, c);
        const std::int64_t begin = static_cast<std::int64_t>(c) * pulse_chunk_size;
        const std::int64_t end = std::min(n_pulses, begin + pulse_chunk_size);
        chunk_body(begin, end, rng, parts[c]);
    });
    EventStream stream;
    stream.n_pulses = n_pulses;
    stream.seed = seed;
    stream.rep_period = rep_period;
    std::size_t total = 0;
    for (const auto& p : parts) total += p.size();
    stream.events.reserve(total);
    for (auto& p : parts) {
        stream.events.insert(stream.events.end(), p.begin(), p.end());
        std::vector<DetectionEvent>().swap(p);
    }
    stream.sort();
    return stream;
}

}  // namespace detail

/// Per pulse: emission, herald at D1, conversion loss, Poisson noise photons,
/// the fiber beamsplitter and gated detection at D2/D3. Deterministic per seed.
inline EventStream generate_hbt_stream(const HbtSetup& setup) {
    setup.validate();
    const double period_ps = setup.source.rep_period * ps_per_s;

    std::vector<double> pair_cdf;
    std::vector<double> herald_click;
    if (setup.kind == SourceKind::spdc) {
        const auto p = setup.source.pair_distribution();
        double acc = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k) {
            acc += p[k];
            pair_cdf.push_back(acc);
            herald_click.push_back(click_probability_fock(static_cast<std::int64_t>(k), setup.herald));
        }
        pair_cdf.back() = 1.0;
    }

    // Detection probability of one photon in each arm; the remainder is lost.
    const double q_start = setup.splitter_ratio * setup.start.efficiency;
    const double q_stop = (1.0 - setup.splitter_ratio) * setup.stop.efficiency;
    const double half_gate = 0.5 * setup.gate_width_ps;

    auto body = [&](std::int64_t begin, std::int64_t end, RandomStream& rng, std::vector<DetectionEvent>& out) {
        for (std::int64_t pulse = begin; pulse < end; ++pulse) {
            std::int64_t photons = 0;
            bool trigger = true;
            switch (setup.kind) {
            case SourceKind::spdc: {
                const int k = detail::sample_cdf(pair_cdf, rng.uniform());
                trigger = (k == 0 && setup.herald.dark_prob == 0.0) ? false : rng.bernoulli(herald_click[k]);
                photons = k;
                break;
            }
            case SourceKind::coherent:
                photons = rng.poisson(setup.source.mu);
                break;
            case SourceKind::thermal:
                photons = rng.thermal(setup.source.mu);
                break;
            }
            const bool start_open = trigger || !setup.start.gated;
            const bool stop_open = trigger || !setup.stop.gated;
            if (!start_open && !stop_open) continue;

            const std::int64_t t0 = detail::pulse_time_ps(pulse, period_ps);
            if (trigger) out.push_back({pulse, t0 + detail::jittered(rng, 0.0, setup.jitter_ps), channel::d1});

            // Earliest arrival per arm; +inf means no click.
            double first_start = std::numeric_limits<double>::infinity();
            double first_stop = first_start;
            auto route = [&](double arrival) {
                const double u = rng.uniform();
                if (u < q_start) first_start = std::min(first_start, arrival);
                else if (u < q_start + q_stop) first_stop = std::min(first_stop, arrival);
            };
            const std::int64_t survivors = rng.binomial(photons, setup.signal_transmission);
            for (std::int64_t i = 0; i < survivors; ++i) route(0.0);
            const std::int64_t noise = rng.poisson(setup.noise_mean);
            for (std::int64_t i = 0; i < noise; ++i) route(-half_gate + rng.uniform() * setup.gate_width_ps);
            if (start_open && setup.start.dark_prob > 0.0 && rng.bernoulli(setup.start.dark_prob))
                first_start = std::min(first_start, -half_gate + rng.uniform() * setup.gate_width_ps);
            if (stop_open && setup.stop.dark_prob > 0.0 && rng.bernoulli(setup.stop.dark_prob))
                first_stop = std::min(first_stop, -half_gate + rng.uniform() * setup.gate_width_ps);

            if (start_open && std::isfinite(first_start))
                out.push_back({pulse, t0 + detail::jittered(rng, first_start, setup.jitter_ps), channel::d2});
            if (stop_open && std::isfinite(first_stop))
                out.push_back({pulse, t0 + detail::jittered(rng, first_stop, setup.jitter_ps), channel::d3});
        }
    };
    return detail::generate_chunked(setup.n_pulses, setup.seed, setup.source.rep_period, RngDomain::hbt_pulses,
                                    setup.threads, body);
}

/// Exact per-pulse click probabilities of the HBT model (timing windows ignored).
struct HbtPrediction {
    double p_trigger = 0.0;
    double p_start = 0.0;   // trigger and start click
    double p_stop = 0.0;    // trigger and stop click
    double p_coinc = 0.0;   // trigger and both click

    double g2_zero() const { return p_trigger * p_coinc / (p_start * p_stop); }
};

inline HbtPrediction predict_hbt(const HbtSetup& setup) {
    setup.validate();
    require(setup.start.gated && setup.stop.gated, "prediction assumes gated start/stop detectors");
    const double q2 = setup.signal_transmission * setup.splitter_ratio * setup.start.efficiency;
    const double q3 = setup.signal_transmission * (1.0 - setup.splitter_ratio) * setup.stop.efficiency;
    const double x2 = setup.noise_mean * setup.splitter_ratio * setup.start.efficiency;
    const double x3 = setup.noise_mean * (1.0 - setup.splitter_ratio) * setup.stop.efficiency;
    const double d2 = setup.start.dark_prob;
    const double d3 = setup.stop.dark_prob;

    // E[z^k ; trigger] for the photon number k sent toward the splitter.
    std::function<double(double)> gen;
    double p_trig = 1.0;
    switch (setup.kind) {
    case SourceKind::spdc: {
        const auto p = setup.source.pair_distribution();
        std::vector<double> w(p.size());
        p_trig = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k) {
            w[k] = p[k] * click_probability_fock(static_cast<std::int64_t>(k), setup.herald);
            p_trig += w[k];
        }
        gen = [w](double z) {
            double s = 0.0;
            for (std::size_t k = 0; k < w.size(); ++k) s += w[k] * std::pow(z, static_cast<double>(k));
            return s;
        };
        break;
    }
    case SourceKind::coherent:
        gen = [mu = setup.source.mu](double z) { return std::exp(mu * (z - 1.0)); };
        break;
    case SourceKind::thermal:
        gen = [mu = setup.source.mu](double z) { return 1.0 / (1.0 + mu * (1.0 - z)); };
        break;
    }
    const double none2 = (1.0 - d2) * std::exp(-x2) * gen(1.0 - q2);
    const double none3 = (1.0 - d3) * std::exp(-x3) * gen(1.0 - q3);
    const double none23 = (1.0 - d2) * (1.0 - d3) * std::exp(-x2 - x3) * gen(1.0 - q2 - q3);

    HbtPrediction out;
    out.p_trigger = p_trig;
    out.p_start = p_trig - none2;
    out.p_stop = p_trig - none3;
    out.p_coinc = p_trig - none2 - none3 + none23;
    return out;
}

/// Noise mean (photons per pulse) for which the predicted g2(0) equals target.
inline double calibrate_noise_mean_for_g2(HbtSetup setup, double target) {
    require(finite(target) && target > 0.0 && target < 1.0, "g2 calibration target must lie in (0, 1)");
    setup.noise_mean = 0.0;
    const double floor = predict_hbt(setup).g2_zero();
    require(floor < target, "g2 target is below the noiseless (multi-pair) floor");
    double lo = 0.0;
    double hi = 1e-3;
    for (;;) {
        setup.noise_mean = hi;
        if (predict_hbt(setup).g2_zero() > target) break;
        lo = hi;
        hi *= 2.0;
        if (hi > 1e3) throw NumericalError("g2 calibration: target not reachable by adding noise");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        setup.noise_mean = mid;
        (predict_hbt(setup).g2_zero() > target ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace qfc
