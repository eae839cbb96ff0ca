// Experiment configuration: a flat `key=value` file with unit-suffixed
// quantities (`pump_power=700mW`, `t1=1ns`, `delta_f=150kHz`).
//
// Values are stored in SI units. Writing uses the base unit and the shortest
// round-trip decimal form, so read(write(c)) == c exactly.

#pragma once

#include "qfc/conversion.hpp"
#include "qfc/events.hpp"
#include "qfc/linalg.hpp"
#include "qfc/sources.hpp"

#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace qfc {

struct ExperimentConfig {
    // Timing and pump
    double rep_period = 1.0 / 82e6;  // s
    double pump_power = 0.7;         // W
    double eff_a = 0.62;
    double eff_b = 3.6;              // in units of 1 / B_unit
    BUnit b_unit = BUnit::per_W;
    double transmittance = 0.62;     // components after the converter
    double c_noise = 0.0;            // noise photons per pulse per W of pump
    double delta_f = 150e3;          // Hz
    double t1 = 1e-9;                // s
    double bg_rate = 0.2;            // Hz per tomography setting

    // Source and detectors
    SourceKind source = SourceKind::spdc;
    PairStatistics pair_stats = PairStatistics::poisson;
    double mu = 0.05;
    int pair_truncation = 4;
    double d1_efficiency = 0.6, d1_dark = 1e-4;
    double d2_efficiency = 0.15, d2_dark = 1e-4;
    double d3_efficiency = 0.15, d3_dark = 1e-4;
    double jitter = 60e-12;          // s
    double gate_width = 500e-12;     // s

    // Analysis windows
    double g2_window = 1e-9;         // s
    double post_window = 200e-12;    // s
    double histogram_bin = 20e-12;   // s

    // Entangled-pair chain
    double p_white = 0.9333;
    double mzi_phase = 0.0;          // rad
    double mzi_pair_prob = 0.05;
    std::int64_t mzi_pulses = 1'000'000;
    int tomo_settings = 16;          // 16 or 36
    double tomo_signal_rate = 2.0;   // Hz, coincidences per complete basis
    double tomo_duration = 2000.0;   // s per setting
    bool tomo_interface = true;      // false: source state only
    int bootstrap = 100;
    double mle_tol = 1e-10;
    int mle_max_iter = 100000;

    // Efficiency sweep
    double sweep_max_power = 1.0;    // W
    int sweep_points = 51;

    // Calibration (0 = off)
    double calibrate_g2_target = 0.0;
    double calibrate_fidelity_target = 0.0;

    // Run control
    std::int64_t n_pulses = 10'000'000;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;

    bool operator==(const ExperimentConfig&) const = default;

    EfficiencyModel efficiency_model() const { return EfficiencyModel::from_fit(eff_a, eff_b, b_unit); }

    void validate() const {
        require(finite(rep_period) && rep_period > 0.0, "rep_period must be positive");
        require(finite(pump_power) && pump_power >= 0.0, "pump_power must be non-negative");
        efficiency_model().validate();
        require(finite(transmittance) && transmittance >= 0.0 && transmittance <= 1.0,
                "transmittance must lie in [0, 1]");
        require(finite(c_noise) && c_noise >= 0.0, "c_noise must be non-negative");
        NoiseModel{c_noise, delta_f, t1}.validate();
        require(finite(bg_rate) && bg_rate >= 0.0, "bg_rate must be non-negative");
        SpdcSource{mu, rep_period, pair_truncation, pair_stats}.validate();
        for (double e : {d1_efficiency, d2_efficiency, d3_efficiency, d1_dark, d2_dark, d3_dark})
            require(finite(e) && e >= 0.0 && e <= 1.0, "detector efficiencies and dark probabilities must lie in [0, 1]");
        require(finite(jitter) && jitter >= 0.0, "jitter must be non-negative");
        require(finite(gate_width) && gate_width > 0.0, "gate_width must be positive");
        require(finite(g2_window) && g2_window > 0.0, "g2_window must be positive");
        require(finite(post_window) && post_window > 0.0, "post_window must be positive");
        require(finite(histogram_bin) && histogram_bin > 0.0, "histogram_bin must be positive");
        require(finite(p_white) && p_white >= 0.0 && p_white <= 1.0, "p_white must lie in [0, 1]");
        require(finite(mzi_phase), "mzi_phase must be finite");
        require(finite(mzi_pair_prob) && mzi_pair_prob >= 0.0 && mzi_pair_prob <= 1.0,
                "mzi_pair_prob must lie in [0, 1]");
        require(mzi_pulses > 0, "mzi_pulses must be positive");
        require(tomo_settings == 16 || tomo_settings == 36, "tomo_settings must be 16 or 36");
        require(finite(tomo_signal_rate) && tomo_signal_rate >= 0.0, "tomo_signal_rate must be non-negative");
        require(finite(tomo_duration) && tomo_duration > 0.0, "tomo_duration must be positive");
        require(bootstrap >= 0, "bootstrap must be non-negative");
        require(finite(mle_tol) && mle_tol >= 0.0, "mle_tol must be non-negative");
        require(mle_max_iter > 0, "mle_max_iter must be positive");
        require(finite(sweep_max_power) && sweep_max_power > 0.0, "sweep_max_power must be positive");
        require(sweep_points >= 1, "sweep_points must be >= 1");
        require(finite(calibrate_g2_target) && calibrate_g2_target >= 0.0 && calibrate_g2_target < 1.0,
                "calibrate_g2_target must lie in [0, 1)");
        require(finite(calibrate_fidelity_target) && calibrate_fidelity_target >= 0.0 &&
                    calibrate_fidelity_target <= 1.0,
                "calibrate_fidelity_target must lie in [0, 1]");
        require(n_pulses > 0, "n_pulses must be positive");
    }
};

namespace config_detail {

enum class Dimension { none, time, frequency, power, angle };

struct Unit {
    const char* suffix;
    double scale;  // value_in_SI = number * scale, or number / (1/scale) when divide is set
    bool divide;
};

inline const std::vector<Unit>& units_for(Dimension d) {
    static const std::vector<Unit> none{};
    static const std::vector<Unit> time{{"ps", 1e12, true}, {"ns", 1e9, true}, {"us", 1e6, true},
                                        {"ms", 1e3, true},  {"s", 1.0, false}};
    static const std::vector<Unit> freq{{"GHz", 1e9, false}, {"MHz", 1e6, false}, {"kHz", 1e3, false},
                                        {"Hz", 1.0, false}};
    static const std::vector<Unit> power{{"uW", 1e6, true}, {"mW", 1e3, true}, {"W", 1.0, false}};
    static const std::vector<Unit> angle{{"deg", 180.0 / pi, true}, {"rad", 1.0, false}};
    switch (d) {
    case Dimension::time: return time;
    case Dimension::frequency: return freq;
    case Dimension::power: return power;
    case Dimension::angle: return angle;
    default: return none;
    }
}

inline const char* base_suffix(Dimension d) {
    switch (d) {
    case Dimension::time: return "s";
    case Dimension::frequency: return "Hz";
    case Dimension::power: return "W";
    case Dimension::angle: return "rad";
    default: return "";
    }
}

inline bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

/// Parses `<number><suffix>`; a bare number is taken in the base unit.
inline double parse_quantity(const std::string& key, const std::string& text, Dimension d) {
    for (const auto& u : units_for(d)) {
        if (!ends_with(text, u.suffix)) continue;
        const std::string num = detail::trim(text.substr(0, text.size() - std::string(u.suffix).size()));
        const double x = detail::parse_number<double>(num, key.c_str());
        return u.divide ? x / u.scale : x * u.scale;
    }
    return detail::parse_number<double>(text, key.c_str());
}

struct Field {
    std::string key;
    std::function<void(ExperimentConfig&, const std::string&)> read;
    std::function<std::optional<std::string>(const ExperimentConfig&)> write;
};

template <typename T>
Field quantity(const std::string& key, T ExperimentConfig::*member, Dimension d) {
    return {key,
            [=](ExperimentConfig& c, const std::string& v) { c.*member = parse_quantity(key, v, d); },
            [=](const ExperimentConfig& c) -> std::optional<std::string> {
                return detail::format_double(c.*member) + base_suffix(d);
            }};
}

template <typename T>
Field integer(const std::string& key, T ExperimentConfig::*member) {
    return {key,
            [=](ExperimentConfig& c, const std::string& v) {
                c.*member = detail::parse_number<T>(v, key.c_str());
            },
            [=](const ExperimentConfig& c) -> std::optional<std::string> { return std::to_string(c.*member); }};
}

template <typename E>
Field enumeration(const std::string& key, E ExperimentConfig::*member, std::vector<std::pair<std::string, E>> names) {
    return {key,
            [=](ExperimentConfig& c, const std::string& v) {
                for (const auto& [n, e] : names)
                    if (n == v) {
                        c.*member = e;
                        return;
                    }
                std::string allowed;
                for (const auto& [n, e] : names) allowed += (allowed.empty() ? "" : "|") + n;
                throw InvalidArgument("invalid value for " + key + ": '" + v + "' (expected " + allowed + ")");
            },
            [=](const ExperimentConfig& c) -> std::optional<std::string> {
                for (const auto& [n, e] : names)
                    if (e == c.*member) return n;
                return std::nullopt;
            }};
}

inline const std::vector<Field>& fields() {
    using C = ExperimentConfig;
    using D = Dimension;
    static const std::vector<Field> table{
        quantity("rep_period", &C::rep_period, D::time),
        quantity("pump_power", &C::pump_power, D::power),
        quantity("eff_A", &C::eff_a, D::none),
        quantity("eff_B", &C::eff_b, D::none),
        enumeration<BUnit>("B_unit", &C::b_unit, {{"per_W", BUnit::per_W}, {"per_mW", BUnit::per_mW}}),
        quantity("transmittance", &C::transmittance, D::none),
        quantity("c_noise", &C::c_noise, D::none),
        quantity("delta_f", &C::delta_f, D::frequency),
        quantity("t1", &C::t1, D::time),
        quantity("bg_rate", &C::bg_rate, D::frequency),
        enumeration<SourceKind>("source", &C::source,
                                {{"spdc", SourceKind::spdc},
                                 {"coherent", SourceKind::coherent},
                                 {"thermal", SourceKind::thermal}}),
        enumeration<PairStatistics>("pair_stats", &C::pair_stats,
                                    {{"poisson", PairStatistics::poisson},
                                     {"thermal", PairStatistics::thermal},
                                     {"single", PairStatistics::single}}),
        quantity("mu", &C::mu, D::none),
        integer("pair_truncation", &C::pair_truncation),
        quantity("d1_efficiency", &C::d1_efficiency, D::none),
        quantity("d1_dark", &C::d1_dark, D::none),
        quantity("d2_efficiency", &C::d2_efficiency, D::none),
        quantity("d2_dark", &C::d2_dark, D::none),
        quantity("d3_efficiency", &C::d3_efficiency, D::none),
        quantity("d3_dark", &C::d3_dark, D::none),
        quantity("jitter", &C::jitter, D::time),
        quantity("gate_width", &C::gate_width, D::time),
        quantity("g2_window", &C::g2_window, D::time),
        quantity("post_window", &C::post_window, D::time),
        quantity("histogram_bin", &C::histogram_bin, D::time),
        quantity("p_white", &C::p_white, D::none),
        quantity("mzi_phase", &C::mzi_phase, D::angle),
        quantity("mzi_pair_prob", &C::mzi_pair_prob, D::none),
        integer("mzi_pulses", &C::mzi_pulses),
        integer("tomo_settings", &C::tomo_settings),
        quantity("tomo_signal_rate", &C::tomo_signal_rate, D::frequency),
        quantity("tomo_duration", &C::tomo_duration, D::time),
        enumeration<bool>("tomo_interface", &C::tomo_interface, {{"true", true}, {"false", false}}),
        integer("bootstrap", &C::bootstrap),
        quantity("mle_tol", &C::mle_tol, D::none),
        integer("mle_max_iter", &C::mle_max_iter),
        quantity("sweep_max_power", &C::sweep_max_power, D::power),
        integer("sweep_points", &C::sweep_points),
        quantity("calibrate_g2_target", &C::calibrate_g2_target, D::none),
        quantity("calibrate_fidelity_target", &C::calibrate_fidelity_target, D::none),
        integer("n_pulses", &C::n_pulses),
        Field{"seed",
              [](C& c, const std::string& v) { c.seed = detail::parse_number<std::uint64_t>(v, "seed"); },
              [](const C& c) -> std::optional<std::string> {
                  if (!c.seed) return std::nullopt;
                  return std::to_string(*c.seed);
              }},
        integer("threads", &C::threads),
    };
    return table;
}

}  // namespace config_detail

/// Reads `key=value` lines; `#` starts a comment. Unknown keys are errors.
inline ExperimentConfig read_config(std::istream& is) {
    ExperimentConfig c;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        require(eq != std::string::npos, "config line " + std::to_string(line_no) + " is not key=value: " + line);
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        bool known = false;
        for (const auto& f : config_detail::fields())
            if (f.key == key) {
                f.read(c, value);
                known = true;
                break;
            }
        require(known, "unknown config key '" + key + "' on line " + std::to_string(line_no));
    }
    c.validate();
    return c;
}

inline void write_config(std::ostream& os, const ExperimentConfig& c) {
    for (const auto& f : config_detail::fields())
        if (const auto v = f.write(c)) os << f.key << '=' << *v << '\n';
}

}  // namespace qfc
