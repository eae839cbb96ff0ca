// The three end-to-end experiments (efficiency sweep, HBT g2, polarization
// tomography of the converted entangled pair) and their report writers.

#pragma once

#include "qfc/config.hpp"
#include "qfc/conversion.hpp"
#include "qfc/counting.hpp"
#include "qfc/encodings.hpp"
#include "qfc/metrics.hpp"
#include "qfc/rng.hpp"
#include "qfc/sources.hpp"
#include "qfc/tomography.hpp"

#include <json.hpp>

#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace qfc {

// --------------------------------------------------------------------------
// Efficiency sweep

struct SweepResult {
    std::vector<EfficiencySample> table;
    std::optional<EfficiencyFit> fit;
    std::string fit_error;  // set when the fit failed; the table is still valid
};

/// sweep_points powers evenly spaced on [0, sweep_max_power].
inline std::vector<Power> sweep_powers(const ExperimentConfig& c) {
    std::vector<Power> out;
    if (c.sweep_points == 1) return {Power::watts(c.sweep_max_power)};
    for (int i = 0; i < c.sweep_points; ++i)
        out.push_back(Power::watts(c.sweep_max_power * i / (c.sweep_points - 1)));
    return out;
}

inline SweepResult run_efficiency_sweep(const ExperimentConfig& c, const std::vector<Power>& powers) {
    require(!powers.empty(), "efficiency sweep needs at least one power");
    const auto model = c.efficiency_model();
    SweepResult r;
    for (const auto& p : powers) r.table.push_back({p, conversion_efficiency(p, model)});
    try {
        r.fit = fit_efficiency_curve(r.table);
    } catch (const std::exception& e) {
        r.fit_error = e.what();
    }
    return r;
}

/// The sample with the largest efficiency (first one on ties).
inline EfficiencySample sweep_peak(const SweepResult& r) {
    require(!r.table.empty(), "empty sweep table");
    EfficiencySample best = r.table.front();
    for (const auto& s : r.table)
        if (s.efficiency > best.efficiency) best = s;
    return best;
}

inline void write_sweep_csv(std::ostream& os, const SweepResult& r) {
    os << "power_mW,efficiency\n";
    for (const auto& s : r.table)
        os << detail::format_double(s.power.in_milliwatts()) << ',' << detail::format_double(s.efficiency) << '\n';
}

inline void write_fit_summary(std::ostream& os, const SweepResult& r) {
    if (!r.fit) {
        os << "fit=failed\nerror=" << r.fit_error << '\n';
        return;
    }
    const auto& f = *r.fit;
    const auto peak = sweep_peak(r);
    os << "A=" << detail::format_double(f.peak) << "\nB_per_W=" << detail::format_double(f.b_per_watt)
       << "\nresidual=" << detail::format_double(f.residual) << "\niterations=" << f.iterations
       << "\nconverged=" << (f.converged ? "true" : "false")
       << "\nb_identifiable=" << (f.b_identifiable ? "true" : "false")
       << "\ntable_peak_power_mW=" << detail::format_double(peak.power.in_milliwatts())
       << "\ntable_peak_efficiency=" << detail::format_double(peak.efficiency) << '\n';
    if (f.b_identifiable && f.peak > 0.0) {
        const auto model = EfficiencyModel{f.peak, f.b_per_watt};
        os << "fit_peak_power_mW=" << detail::format_double(model.first_peak().in_milliwatts()) << '\n';
    }
}

// --------------------------------------------------------------------------
// HBT experiment

inline std::uint64_t require_seed(const ExperimentConfig& c) {
    require(c.seed.has_value(), "a seed is required for simulation runs (config key 'seed' or --seed)");
    return *c.seed;
}

/// Per-photon transmission from the converter input to the detectors.
inline double total_transmission(const ExperimentConfig& c) {
    return conversion_efficiency(Power::watts(c.pump_power), c.efficiency_model()) * c.transmittance;
}

/// HBT setup from the config; noise_mean = c_noise * P unless a g2 target is set.
inline HbtSetup make_hbt_setup(const ExperimentConfig& c) {
    HbtSetup s;
    s.kind = c.source;
    s.source = SpdcSource{c.mu, c.rep_period, c.pair_truncation, c.pair_stats};
    s.herald = Detector{c.d1_efficiency, c.d1_dark, false, channel::d1};
    s.start = Detector{c.d2_efficiency, c.d2_dark, true, channel::d2};
    s.stop = Detector{c.d3_efficiency, c.d3_dark, true, channel::d3};
    s.signal_transmission = total_transmission(c);
    s.noise_mean = noise_mean_photons(Power::watts(c.pump_power), c.c_noise);
    s.jitter_ps = c.jitter * ps_per_s;
    s.gate_width_ps = c.gate_width * ps_per_s;
    s.n_pulses = c.n_pulses;
    s.seed = c.seed.value_or(0);
    s.threads = c.threads;
    if (c.calibrate_g2_target > 0.0) s.noise_mean = calibrate_noise_mean_for_g2(s, c.calibrate_g2_target);
    return s;
}

struct G2Result {
    HbtSetup setup;
    double c_noise = 0.0;  // effective noise coefficient, photons / pulse / W
    HbtPrediction prediction;
    G2Estimate g2_zero;
    std::optional<G2Estimate> g2_plus1, g2_minus1;
    std::string side_peak_note;
    Histogram histogram;  // start-stop delays over pulse offsets -2..2
    EventStream stream;
};

/// g2(0) and g2(+-1) with their histogram from an event stream.
inline void analyze_hbt_stream(const EventStream& stream, const ExperimentConfig& c, G2Result& r) {
    const CoincidenceWindow window{c.g2_window * ps_per_s, 0.0};
    r.g2_zero = g2_n(stream, 0, window, {}, 1);
    try {
        r.g2_plus1 = g2_n(stream, 1, window);
        r.g2_minus1 = g2_n(stream, -1, window);
    } catch (const InsufficientData& e) {
        r.side_peak_note = e.what();
    }
    r.histogram = cross_pulse_histogram(stream, {}, 2, c.histogram_bin * ps_per_s);
}

inline G2Result run_g2_experiment(const ExperimentConfig& c) {
    c.validate();
    require_seed(c);
    G2Result r;
    r.setup = make_hbt_setup(c);
    r.c_noise = c.pump_power > 0.0 ? r.setup.noise_mean / c.pump_power : 0.0;
    if (r.setup.start.gated && r.setup.stop.gated) r.prediction = predict_hbt(r.setup);
    r.stream = generate_hbt_stream(r.setup);
    analyze_hbt_stream(r.stream, c, r);
    return r;
}

inline void write_g2_report(std::ostream& os, const G2Result& r) {
    auto est = [&](const char* name, const std::optional<G2Estimate>& g) {
        if (!g) {
            os << name << "=insufficient\n";
            return;
        }
        os << name << '=' << detail::format_double(g->value) << '\n'
           << name << "_err=" << detail::format_double(g->std_error) << '\n'
           << name << "_coinc=" << g->counts.n_coinc << '\n';
    };
    est("g2_0", r.g2_zero);
    est("g2_plus1", r.g2_plus1);
    est("g2_minus1", r.g2_minus1);
    if (!r.side_peak_note.empty()) os << "side_peak_note=" << r.side_peak_note << '\n';
    if (r.prediction.p_trigger > 0.0) os << "g2_0_predicted=" << detail::format_double(r.prediction.g2_zero()) << '\n';
    os << "signal_transmission=" << detail::format_double(r.setup.signal_transmission) << '\n'
       << "noise_mean=" << detail::format_double(r.setup.noise_mean) << '\n'
       << "c_noise=" << detail::format_double(r.c_noise) << '\n'
       << "n_pulses=" << r.setup.n_pulses << '\n'
       << "seed=" << r.setup.seed << '\n';
}

// --------------------------------------------------------------------------
// Time-bin interface histogram

struct MziResult {
    Histogram histogram;  // D2 (C') relative to D1 (A)
    Histogram selected;   // after the post-selection window
    double early = 0.0, central = 0.0, late = 0.0;  // peak areas
};

inline MziStreamSetup make_mzi_setup(const ExperimentConfig& c) {
    MziStreamSetup s;
    s.pair_prob = c.mzi_pair_prob;
    s.rep_period = c.rep_period;
    s.p_white = c.p_white;
    s.eta = total_transmission(c);
    s.dephasing = pump_dephasing_factor({c.c_noise, c.delta_f, c.t1});
    s.noise_mean = noise_mean_photons(Power::watts(c.pump_power), c.c_noise);
    s.mzi.t1 = c.t1;
    s.mzi.relative_phase = c.mzi_phase;
    s.detector_a = Detector{c.d1_efficiency, c.d1_dark, false, channel::d1};
    s.detector_c = Detector{c.d2_efficiency, c.d2_dark, true, channel::d2};
    s.jitter_ps = c.jitter * ps_per_s;
    s.gate_width_ps = std::max(c.gate_width, 3.0 * c.t1) * ps_per_s;
    s.n_pulses = c.mzi_pulses;
    s.seed = c.seed.value_or(0);
    s.threads = c.threads;
    return s;
}

inline MziResult run_mzi_experiment(const ExperimentConfig& c) {
    c.validate();
    require_seed(c);
    const auto stream = generate_mzi_stream(make_mzi_setup(c));
    const double bin = c.histogram_bin * ps_per_s;
    const double t1 = c.t1 * ps_per_s;
    MziResult r;
    r.histogram = delay_histogram(stream, channel::d1, channel::d2, bin);
    const auto kept = select_window(stream, channel::d1, channel::d2, {c.post_window * ps_per_s, 0.0});
    if (!kept.events.empty()) r.selected = delay_histogram(kept, channel::d1, channel::d2, bin);
    else r.selected.bin_width_ps = bin;
    r.early = static_cast<double>(r.histogram.mass_between(-1.5 * t1, -0.5 * t1));
    r.central = static_cast<double>(r.histogram.mass_between(-0.5 * t1, 0.5 * t1));
    r.late = static_cast<double>(r.histogram.mass_between(0.5 * t1, 1.5 * t1));
    return r;
}

// --------------------------------------------------------------------------
// Tomography experiment

struct TomographyMetrics {
    double fidelity = 0.0, concurrence = 0.0, eof = 0.0, s_max = 0.0;
    bool violates = false, witness = false;
};

inline TomographyMetrics compute_metrics(const TwoQubitState& rho) {
    const auto chsh = chsh_assessment(rho);
    TomographyMetrics m;
    m.fidelity = fidelity(rho, bell_phi_plus());
    m.concurrence = concurrence(rho);
    m.eof = eof_from_concurrence(m.concurrence);
    m.s_max = chsh.s_max;
    m.violates = chsh.violates;
    m.witness = chsh.fidelity_witness;
    return m;
}

struct TomographyResult {
    TwoQubitState signal_state = TwoQubitState::maximally_mixed();  // noiseless chain output
    double signal_rate = 0.0;         // Hz per complete basis
    double noise_fraction = 0.0;      // background share of the raw coincidences
    double equivalent_noise_mean = 0.0;
    bool subtract_bg = false;
    std::vector<CountRecord> records;  // raw simulated counts
    MleResult mle;
    TomographyMetrics metrics;
    TomographyMetrics errors;          // bootstrap standard deviations (flags unused)
    int bootstrap_replicas = 0;
};

inline std::vector<MeasurementSetting> config_settings(const ExperimentConfig& c) {
    return c.tomo_settings == 36 ? six_state_settings() : standard_settings();
}

inline TwoQubitState tomography_signal_state(const ExperimentConfig& c) {
    if (!c.tomo_interface) return entangled_pair_state(c.p_white);
    InterfaceChain chain;
    chain.p_white = c.p_white;
    chain.eta = total_transmission(c);
    chain.dephasing = pump_dephasing_factor({c.c_noise, c.delta_f, c.t1});
    chain.noise_mean = 0.0;
    chain.mzi.t1 = c.t1;
    chain.mzi.relative_phase = c.mzi_phase;
    return end_to_end_state(chain);
}

/// Signal rate per complete basis for which background at bg_rate per setting
/// pulls the expected fidelity down to `target`.
inline double calibrate_signal_rate_for_fidelity(const TwoQubitState& signal, double bg_rate, double target) {
    const double f_sig = fidelity(signal, bell_phi_plus());
    require(bg_rate > 0.0, "fidelity calibration needs a non-zero bg_rate");
    require(target > 0.25 && target < f_sig, "fidelity target must lie between 1/4 and the noiseless fidelity");
    const double noise_fraction = (f_sig - target) / (f_sig - 0.25);
    return 4.0 * bg_rate * (1.0 - noise_fraction) / noise_fraction;
}

inline MleOptions config_mle_options(const ExperimentConfig& c) {
    MleOptions opt;
    opt.tol = c.mle_tol;
    opt.max_iter = c.mle_max_iter;
    return opt;
}

/// Reconstruction, metrics and Poisson-resampling bootstrap of a record set.
inline void reconstruct_records(const std::vector<CountRecord>& raw, const ExperimentConfig& c, bool subtract_bg,
                                std::uint64_t seed, TomographyResult& r) {
    const auto opt = config_mle_options(c);
    r.subtract_bg = subtract_bg;
    const auto prepared = subtract_bg ? subtract_background(raw, c.bg_rate) : raw;
    r.mle = mle_reconstruct(prepared, opt);
    if (!r.mle.converged) throw NumericalError("MLE did not converge within mle_max_iter iterations");
    r.metrics = compute_metrics(r.mle.state);

    r.bootstrap_replicas = c.bootstrap;
    if (c.bootstrap < 2) return;
    std::vector<TomographyMetrics> reps(static_cast<std::size_t>(c.bootstrap));
    parallel_for(reps.size(), c.threads, [&](std::size_t b) {
        RandomStream rng(seed, RngDomain::bootstrap, b);
        auto resampled = raw;
        for (auto& rec : resampled) rec.count = rng.poisson(static_cast<double>(rec.count));
        if (subtract_bg) resampled = subtract_background(resampled, c.bg_rate);
        reps[b] = compute_metrics(mle_reconstruct(resampled, opt).state);
    });
    auto spread = [&](double TomographyMetrics::*field) {
        double mean = 0.0;
        for (const auto& m : reps) mean += m.*field;
        mean /= static_cast<double>(reps.size());
        double var = 0.0;
        for (const auto& m : reps) var += (m.*field - mean) * (m.*field - mean);
        return std::sqrt(var / static_cast<double>(reps.size() - 1));
    };
    r.errors.fidelity = spread(&TomographyMetrics::fidelity);
    r.errors.concurrence = spread(&TomographyMetrics::concurrence);
    r.errors.eof = spread(&TomographyMetrics::eof);
    r.errors.s_max = spread(&TomographyMetrics::s_max);
}

inline TomographyResult run_tomography_experiment(const ExperimentConfig& c, bool subtract_bg) {
    c.validate();
    const auto seed = require_seed(c);
    TomographyResult r;
    r.signal_state = tomography_signal_state(c);
    r.signal_rate = c.calibrate_fidelity_target > 0.0
                        ? calibrate_signal_rate_for_fidelity(r.signal_state, c.bg_rate, c.calibrate_fidelity_target)
                        : c.tomo_signal_rate;
    require(r.signal_rate > 0.0 || c.bg_rate > 0.0, "tomography needs a non-zero signal or background rate");
    r.noise_fraction = 4.0 * c.bg_rate / (r.signal_rate + 4.0 * c.bg_rate);
    if (c.tomo_interface && r.noise_fraction < 1.0)
        r.equivalent_noise_mean = total_transmission(c) * r.noise_fraction / (1.0 - r.noise_fraction);

    RandomStream rng(seed, RngDomain::tomography_counts, 0);
    r.records = simulate_counts(r.signal_state, config_settings(c), r.signal_rate * c.tomo_duration, c.bg_rate,
                                c.tomo_duration, rng);
    reconstruct_records(r.records, c, subtract_bg, seed, r);
    return r;
}

inline nlohmann::ordered_json matrix_json(const Matrix4c& m) {
    nlohmann::ordered_json re = nlohmann::ordered_json::array(), im = nlohmann::ordered_json::array();
    for (int i = 0; i < 4; ++i) {
        nlohmann::ordered_json rr = nlohmann::ordered_json::array(), ii = nlohmann::ordered_json::array();
        for (int j = 0; j < 4; ++j) {
            rr.push_back(m(i, j).real());
            ii.push_back(m(i, j).imag());
        }
        re.push_back(rr);
        im.push_back(ii);
    }
    return {{"re", re}, {"im", im}};
}

inline nlohmann::ordered_json metrics_json(const TomographyMetrics& m) {
    return {{"fidelity", m.fidelity}, {"concurrence", m.concurrence},       {"eof", m.eof},
            {"s_max", m.s_max},       {"chsh_violation", m.violates},     {"fidelity_witness", m.witness}};
}

inline nlohmann::ordered_json tomography_json(const TomographyResult& r) {
    nlohmann::ordered_json j;
    j["rho"] = matrix_json(r.mle.state.matrix());
    j["metrics"] = metrics_json(r.metrics);
    j["errors"] = {{"fidelity", r.errors.fidelity},
                   {"concurrence", r.errors.concurrence},
                   {"eof", r.errors.eof},
                   {"s_max", r.errors.s_max},
                   {"bootstrap_replicas", r.bootstrap_replicas}};
    j["mle"] = {{"iterations", r.mle.iterations},
                {"converged", r.mle.converged},
                {"log_likelihood", r.mle.log_likelihood}};
    j["subtract_background"] = r.subtract_bg;
    j["settings"] = r.records.size();
    j["signal_rate_hz"] = r.signal_rate;
    j["noise_fraction"] = r.noise_fraction;
    j["equivalent_noise_mean"] = r.equivalent_noise_mean;
    j["signal_state_fidelity"] = fidelity(r.signal_state, bell_phi_plus());
    return j;
}

inline void write_tomography_report(std::ostream& os, const TomographyResult& r) {
    os << tomography_json(r).dump(2) << '\n';
}

}  // namespace qfc
