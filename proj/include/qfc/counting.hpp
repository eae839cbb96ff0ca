// TDC-style analysis: delay histograms, coincidence windows and the pulsed
// second-order correlation estimators.

#pragma once

#include "qfc/events.hpp"
#include "qfc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace qfc {

/// Raised when a stream holds too few events for an estimator.
class InsufficientData : public NumericalError {
public:
    using NumericalError::NumericalError;
};

struct CoincidenceWindow {
    double width_ps = 1000.0;
    double center_ps = 0.0;

    void validate() const {
        require(finite(width_ps) && width_ps > 0.0, "coincidence window width must be positive");
        require(finite(center_ps), "coincidence window center must be finite");
    }
    bool contains(double delay_ps) const { return std::abs(delay_ps - center_ps) <= 0.5 * width_ps; }
};

struct CountSummary {
    std::int64_t n_trig = 0;
    std::int64_t n_start = 0;
    std::int64_t n_stop = 0;
    std::int64_t n_coinc = 0;

    bool operator==(const CountSummary&) const = default;
};

struct G2Estimate {
    double value = 0.0;
    double std_error = 0.0;
    CountSummary counts;
    std::int64_t opportunities = 0;  // trigger pairs (i, i + n)
};

struct ChannelMap {
    int trigger = channel::d1;
    int start = channel::d2;
    int stop = channel::d3;
};

/// First click per pulse on one channel, sorted by pulse index.
using PulseClicks = std::vector<std::pair<std::int64_t, std::int64_t>>;

inline PulseClicks first_clicks(const EventStream& stream, int channel_id) {
    PulseClicks out;
    for (const auto& e : stream.events)
        if (e.channel_id == channel_id) out.emplace_back(e.pulse_index, e.timestamp_ps);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first == b.first; }),
              out.end());
    return out;
}

namespace detail {

inline const std::int64_t* find_click(const PulseClicks& clicks, std::int64_t pulse) {
    auto it = std::lower_bound(clicks.begin(), clicks.end(), std::make_pair(pulse, INT64_MIN));
    return (it != clicks.end() && it->first == pulse) ? &it->second : nullptr;
}

inline bool has_click(const PulseClicks& clicks, std::int64_t pulse) { return find_click(clicks, pulse) != nullptr; }

}  // namespace detail

/// g2(0) = N_trig N_coinc / (N_start N_stop), first-order Poisson error.
inline G2Estimate g2_zero_from_counts(const CountSummary& c) {
    if (c.n_trig <= 0 || c.n_start <= 0 || c.n_stop <= 0)
        throw InsufficientData("g2 needs non-zero trigger, start and stop counts");
    require(c.n_coinc >= 0, "coincidence count must be non-negative");
    G2Estimate g;
    g.counts = c;
    g.opportunities = c.n_trig;
    const double scale = static_cast<double>(c.n_trig) / (static_cast<double>(c.n_start) * c.n_stop);
    g.value = scale * static_cast<double>(c.n_coinc);
    if (c.n_coinc > 0) {
        const double rel2 = 1.0 / c.n_coinc + 1.0 / c.n_start + 1.0 / c.n_stop + 1.0 / c.n_trig;
        g.std_error = g.value * std::sqrt(rel2);
    } else {
        g.std_error = scale;  // one-count resolution
    }
    return g;
}

inline CountSummary count_summary(const EventStream& stream, const CoincidenceWindow& window,
                                  const ChannelMap& ch = {}) {
    window.validate();
    const auto trig = first_clicks(stream, ch.trigger);
    const auto start = first_clicks(stream, ch.start);
    const auto stop = first_clicks(stream, ch.stop);
    CountSummary c;
    c.n_trig = static_cast<std::int64_t>(trig.size());
    for (const auto& [pulse, ts] : start)
        if (detail::has_click(trig, pulse)) ++c.n_start;
    for (const auto& [pulse, ts] : stop) {
        if (!detail::has_click(trig, pulse)) continue;
        ++c.n_stop;
        if (const auto* t_start = detail::find_click(start, pulse))
            if (window.contains(static_cast<double>(ts - *t_start))) ++c.n_coinc;
    }
    return c;
}

/// Pulsed g2 between pulse i (start) and pulse i + n (stop). For n = 0 this is
/// the count estimator above; for n != 0 the coincidence rate is normalized by
/// the number of trigger pairs (i, i + n), as both gates must be open.
inline G2Estimate g2_n(const EventStream& stream, std::int64_t n, const CoincidenceWindow& window,
                       const ChannelMap& ch = {}, std::int64_t min_opportunities = 100) {
    window.validate();
    require(std::abs(n) < stream.n_pulses, "pulse offset |n| must be smaller than n_pulses");
    const auto trig = first_clicks(stream, ch.trigger);
    const auto start = first_clicks(stream, ch.start);
    const auto stop = first_clicks(stream, ch.stop);
    const double period_ps = stream.rep_period_ps();

    CountSummary c;
    c.n_trig = static_cast<std::int64_t>(trig.size());
    for (const auto& [pulse, ts] : start)
        if (detail::has_click(trig, pulse)) ++c.n_start;
    for (const auto& [pulse, ts] : stop)
        if (detail::has_click(trig, pulse)) ++c.n_stop;

    std::int64_t pairs = 0;
    for (const auto& [pulse, ts] : trig)
        if (detail::has_click(trig, pulse + n)) ++pairs;
    if (pairs < min_opportunities)
        throw InsufficientData("g2_n: only " + std::to_string(pairs) + " coincidence opportunities (need " +
                               std::to_string(min_opportunities) + ")");

    for (const auto& [pulse, t_start] : start) {
        if (!detail::has_click(trig, pulse) || !detail::has_click(trig, pulse + n)) continue;
        const auto* t_stop = detail::find_click(stop, pulse + n);
        if (!t_stop) continue;
        const double shift = static_cast<double>(n) * period_ps;
        if (window.contains(static_cast<double>(*t_stop - t_start) - shift)) ++c.n_coinc;
    }

    if (c.n_start <= 0 || c.n_stop <= 0) throw InsufficientData("g2_n needs non-zero start and stop counts");
    G2Estimate g;
    g.counts = c;
    g.opportunities = pairs;
    const double pt = static_cast<double>(c.n_trig);
    const double scale = pt * pt / (static_cast<double>(c.n_start) * c.n_stop * pairs);
    g.value = scale * static_cast<double>(c.n_coinc);
    if (c.n_coinc > 0) {
        double rel2 = 1.0 / c.n_coinc + 1.0 / c.n_start + 1.0 / c.n_stop;
        if (n != 0) rel2 += 1.0 / pairs;
        else rel2 += 1.0 / c.n_trig;
        g.std_error = g.value * std::sqrt(rel2);
    } else {
        g.std_error = scale;
    }
    return g;
}

struct Histogram {
    double bin_width_ps = 10.0;
    std::map<std::int64_t, std::int64_t> bins;  // bin k covers [(k - 1/2) w, (k + 1/2) w)

    std::int64_t total() const {
        std::int64_t s = 0;
        for (const auto& [k, v] : bins) s += v;
        return s;
    }
    /// Sum of counts with bin centers in [lo, hi].
    std::int64_t mass_between(double lo_ps, double hi_ps) const {
        std::int64_t s = 0;
        for (const auto& [k, v] : bins) {
            const double c = static_cast<double>(k) * bin_width_ps;
            if (c >= lo_ps && c <= hi_ps) s += v;
        }
        return s;
    }
};

inline std::int64_t delay_bin(double delay_ps, double bin_width_ps) {
    return static_cast<std::int64_t>(std::floor(delay_ps / bin_width_ps + 0.5));
}

/// Histogram of t_stop - t_start over pulses where both channels fire.
inline Histogram delay_histogram(const EventStream& stream, int start_ch, int stop_ch, double bin_width_ps) {
    require(!stream.events.empty(), "delay histogram of an empty stream");
    require(finite(bin_width_ps) && bin_width_ps > 0.0, "histogram bin width must be positive");
    Histogram h;
    h.bin_width_ps = bin_width_ps;
    const auto start = first_clicks(stream, start_ch);
    const auto stop = first_clicks(stream, stop_ch);
    for (const auto& [pulse, t_stop] : stop)
        if (const auto* t_start = detail::find_click(start, pulse))
            ++h.bins[delay_bin(static_cast<double>(t_stop - *t_start), bin_width_ps)];
    return h;
}

/// Start-stop delays across pulses i -> i + n, |n| <= max_offset, restricted to
/// triggered pulses: the HBT picture with side peaks at multiples of the period.
inline Histogram cross_pulse_histogram(const EventStream& stream, const ChannelMap& ch, int max_offset,
                                       double bin_width_ps) {
    require(!stream.events.empty(), "delay histogram of an empty stream");
    require(finite(bin_width_ps) && bin_width_ps > 0.0, "histogram bin width must be positive");
    require(max_offset >= 0, "pulse offset range must be non-negative");
    Histogram h;
    h.bin_width_ps = bin_width_ps;
    const auto trig = first_clicks(stream, ch.trigger);
    const auto start = first_clicks(stream, ch.start);
    const auto stop = first_clicks(stream, ch.stop);
    for (const auto& [pulse, t_start] : start) {
        if (!detail::has_click(trig, pulse)) continue;
        for (int n = -max_offset; n <= max_offset; ++n) {
            if (!detail::has_click(trig, pulse + n)) continue;
            if (const auto* t_stop = detail::find_click(stop, pulse + n))
                ++h.bins[delay_bin(static_cast<double>(*t_stop - t_start), bin_width_ps)];
        }
    }
    return h;
}

/// Keeps the start/stop pair of each pulse whose delay lies in the window.
inline EventStream select_window(const EventStream& stream, int start_ch, int stop_ch,
                                 const CoincidenceWindow& window) {
    window.validate();
    const auto start = first_clicks(stream, start_ch);
    const auto stop = first_clicks(stream, stop_ch);
    PulseClicks keep_start, keep_stop;
    for (const auto& [pulse, t_stop] : stop)
        if (const auto* t_start = detail::find_click(start, pulse))
            if (window.contains(static_cast<double>(t_stop - *t_start))) {
                keep_start.emplace_back(pulse, *t_start);
                keep_stop.emplace_back(pulse, t_stop);
            }
    auto kept = [](const PulseClicks& list, const DetectionEvent& e) {
        const auto* t = detail::find_click(list, e.pulse_index);
        return t && *t == e.timestamp_ps;
    };
    EventStream out;
    out.n_pulses = stream.n_pulses;
    out.seed = stream.seed;
    out.rep_period = stream.rep_period;
    std::vector<char> taken_start(keep_start.size(), 0), taken_stop(keep_stop.size(), 0);
    for (const auto& e : stream.events) {
        if (e.channel_id != start_ch && e.channel_id != stop_ch) continue;
        const auto& list = e.channel_id == start_ch ? keep_start : keep_stop;
        auto& taken = e.channel_id == start_ch ? taken_start : taken_stop;
        if (!kept(list, e)) continue;
        const auto idx = static_cast<std::size_t>(
            std::lower_bound(list.begin(), list.end(), std::make_pair(e.pulse_index, INT64_MIN)) - list.begin());
        if (taken[idx]) continue;  // duplicate timestamp on the same channel and pulse
        taken[idx] = 1;
        out.events.push_back(e);
    }
    return out;
}

inline void write_histogram_csv(std::ostream& os, const Histogram& h) {
    os << "delay_ps,count\n";
    if (h.bins.empty()) return;
    const auto lo = h.bins.begin()->first;
    const auto hi = h.bins.rbegin()->first;
    for (auto k = lo; k <= hi; ++k) {
        const auto it = h.bins.find(k);
        os << detail::format_double(static_cast<double>(k) * h.bin_width_ps) << ','
           << (it == h.bins.end() ? 0 : it->second) << '\n';
    }
}

inline void write_count_summary(std::ostream& os, const CountSummary& c) {
    os << "N_trig=" << c.n_trig << "\nN_start=" << c.n_start << "\nN_stop=" << c.n_stop << "\nN_coinc=" << c.n_coinc
       << '\n';
}

}  // namespace qfc
