// Time-tagged detection records, as a TDC would emit them.

#pragma once

#include "qfc/linalg.hpp"
#include "qfc/units.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace qfc {

namespace channel {
inline constexpr int d1 = 1;  // herald / trigger
inline constexpr int d2 = 2;  // start
inline constexpr int d3 = 3;  // stop
}  // namespace channel

struct DetectionEvent {
    std::int64_t pulse_index = 0;
    std::int64_t timestamp_ps = 0;
    int channel_id = 0;

    double timestamp() const { return static_cast<double>(timestamp_ps) / ps_per_s; }
    bool operator==(const DetectionEvent&) const = default;
};

struct EventStream {
    std::vector<DetectionEvent> events;
    std::int64_t n_pulses = 0;
    std::uint64_t seed = 0;
    double rep_period = 1.0 / 82e6;  // s

    bool operator==(const EventStream&) const = default;

    double rep_period_ps() const { return rep_period * ps_per_s; }

    /// Orders by timestamp, then channel; the TDC record order.
    void sort() {
        std::stable_sort(events.begin(), events.end(), [](const DetectionEvent& a, const DetectionEvent& b) {
            return std::tie(a.timestamp_ps, a.channel_id) < std::tie(b.timestamp_ps, b.channel_id);
        });
    }

    void validate() const {
        require(n_pulses >= 0, "n_pulses must be non-negative");
        require(rep_period > 0.0 && finite(rep_period), "repetition period must be positive");
        for (std::size_t i = 0; i < events.size(); ++i) {
            require(events[i].pulse_index >= 0 && events[i].pulse_index < n_pulses,
                    "event pulse index outside [0, n_pulses)");
            if (i > 0)
                require(events[i - 1].timestamp_ps <= events[i].timestamp_ps, "event timestamps must be non-decreasing");
        }
    }
};

namespace detail {

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(trim(cur));
    return out;
}

template <typename T>
T parse_number(const std::string& text, const char* what) {
    T value{};
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) throw InvalidArgument(std::string("cannot parse ") + what + ": '" + text + "'");
    return value;
}

inline std::string format_double(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

}  // namespace detail

/// Header `n_pulses=<N>,seed=<S>,rep_period_ps=<T>`, then `channel_id,pulse_index,timestamp_ps` lines.
inline void write_event_stream(std::ostream& os, const EventStream& stream) {
    os << "n_pulses=" << stream.n_pulses << ",seed=" << stream.seed
       << ",rep_period_ps=" << detail::format_double(stream.rep_period_ps()) << '\n';
    for (const auto& e : stream.events) os << e.channel_id << ',' << e.pulse_index << ',' << e.timestamp_ps << '\n';
}

inline EventStream read_event_stream(std::istream& is) {
    EventStream stream;
    std::string line;
    bool have_header = false;
    bool have_pulses = false;
    while (std::getline(is, line)) {
        line = detail::trim(line);
        if (line.empty() || line[0] == '#') continue;
        if (!have_header) {
            for (const auto& field : detail::split(line, ',')) {
                const auto eq = field.find('=');
                require(eq != std::string::npos, "malformed event-stream header field: " + field);
                const auto key = field.substr(0, eq);
                const auto val = field.substr(eq + 1);
                if (key == "n_pulses") {
                    stream.n_pulses = detail::parse_number<std::int64_t>(val, "n_pulses");
                    have_pulses = true;
                } else if (key == "seed") {
                    stream.seed = detail::parse_number<std::uint64_t>(val, "seed");
                } else if (key == "rep_period_ps") {
                    stream.rep_period = detail::parse_number<double>(val, "rep_period_ps") / ps_per_s;
                } else {
                    throw InvalidArgument("unknown event-stream header key: " + key);
                }
            }
            require(have_pulses, "event-stream header lacks n_pulses");
            have_header = true;
            continue;
        }
        const auto cols = detail::split(line, ',');
        require(cols.size() == 3, "event record must have 3 columns: " + line);
        DetectionEvent e;
        e.channel_id = detail::parse_number<int>(cols[0], "channel_id");
        e.pulse_index = detail::parse_number<std::int64_t>(cols[1], "pulse_index");
        e.timestamp_ps = detail::parse_number<std::int64_t>(cols[2], "timestamp_ps");
        stream.events.push_back(e);
    }
    require(have_header, "event stream is empty (no header)");
    stream.validate();
    return stream;
}

}  // namespace qfc
