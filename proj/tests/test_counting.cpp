#include "qfc/counting.hpp"
#include "qfc/sources.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace qfc;

namespace {

EventStream make_stream(std::int64_t n_pulses, std::vector<DetectionEvent> events) {
    EventStream s;
    s.n_pulses = n_pulses;
    s.events = std::move(events);
    s.sort();
    return s;
}

}  // namespace

TEST(g2_counts, hand_computed_values) {
    const auto g = g2_zero_from_counts({1000, 100, 100, 10});
    EXPECT_DOUBLE_EQ(g.value, 1.0);
    EXPECT_NEAR(g.std_error, std::sqrt(0.1 + 0.01 + 0.01 + 0.001), 1e-14);
    EXPECT_EQ(g2_zero_from_counts({1000, 100, 100, 0}).value, 0.0);
    EXPECT_THROW(g2_zero_from_counts({1000, 0, 100, 0}), InsufficientData);
    EXPECT_THROW(g2_zero_from_counts({0, 0, 0, 0}), NumericalError);
}

TEST(count_summary, window_and_gating) {
    // pulse 0: trig+start+stop in window; pulse 1: start/stop 2 ns apart; pulse 2: no trigger.
    const auto s = make_stream(10, {{0, 0, 1},
                                    {0, 100, 2},
                                    {0, 300, 3},
                                    {1, 12195, 1},
                                    {1, 12195, 2},
                                    {1, 14195, 3},
                                    {2, 24390, 2},
                                    {2, 24390, 3}});
    const auto c = count_summary(s, {1000.0, 0.0});
    EXPECT_EQ(c, (CountSummary{2, 2, 2, 1}));
    EXPECT_EQ(count_summary(s, {5000.0, 0.0}).n_coinc, 2);
    EXPECT_THROW(count_summary(s, {0.0, 0.0}), InvalidArgument);
}

TEST(g2_n, shifted_pulses_and_insufficient_data) {
    std::vector<DetectionEvent> ev;
    const std::int64_t n = 400;
    EventStream tmp;
    const double period = tmp.rep_period_ps();
    for (std::int64_t p = 0; p < n; ++p) {
        const auto t = static_cast<std::int64_t>(std::llround(p * period));
        ev.push_back({p, t, channel::d1});
        if (p % 2 == 0) ev.push_back({p, t + 5, channel::d2});
        else ev.push_back({p, t + 5, channel::d3});
    }
    const auto s = make_stream(n, ev);
    // Zero delay: start and stop never share a pulse.
    const auto g0 = g2_n(s, 0, {1000.0, 0.0});
    EXPECT_EQ(g0.counts.n_coinc, 0);
    // Offset 1: every even start pairs with the next odd stop: 200 coincidences over 399 pairs.
    const auto g1 = g2_n(s, 1, {1000.0, 0.0});
    EXPECT_EQ(g1.counts.n_coinc, 200);
    EXPECT_EQ(g1.opportunities, 399);
    EXPECT_NEAR(g1.value, 200.0 * 400.0 * 400.0 / (200.0 * 200.0 * 399.0), 1e-12);
    EXPECT_THROW(g2_n(s, 1, {1000.0, 0.0}, {}, 1000), InsufficientData);
    EXPECT_THROW(g2_n(s, 400, {1000.0, 0.0}), InvalidArgument);
}

TEST(g2_n, reduces_to_zero_delay_estimator) {
    HbtSetup h;
    h.n_pulses = 500'000;
    h.kind = SourceKind::coherent;
    h.source.mu = 0.5;
    h.start.efficiency = h.stop.efficiency = 0.3;
    const auto s = generate_hbt_stream(h);
    const auto a = g2_n(s, 0, {1000.0, 0.0});
    const auto b = g2_zero_from_counts(count_summary(s, {1000.0, 0.0}));
    EXPECT_DOUBLE_EQ(a.value, b.value);
    EXPECT_EQ(a.counts, b.counts);
}

TEST(g2_n, independent_pulses_give_unity) {
    HbtSetup h;
    h.n_pulses = 2'000'000;
    h.source.mu = 0.1;
    h.herald.efficiency = 0.9;
    h.start.efficiency = h.stop.efficiency = 0.3;
    h.signal_transmission = 0.5;
    h.noise_mean = 0.02;
    const auto s = generate_hbt_stream(h);
    for (std::int64_t n : {-1, 1, 3}) {
        const auto g = g2_n(s, n, {1000.0, 0.0});
        EXPECT_NEAR(g.value, 1.0, 4.0 * g.std_error) << n;
    }
}

TEST(g2_uncertainty, shrinks_like_inverse_sqrt_n) {
    HbtSetup h;
    h.kind = SourceKind::coherent;
    h.source.mu = 0.5;
    h.start.efficiency = h.stop.efficiency = 0.3;
    h.n_pulses = 250'000;
    const auto small = g2_zero_from_counts(count_summary(generate_hbt_stream(h), {1000.0, 0.0}));
    h.n_pulses = 1'000'000;
    const auto large = g2_zero_from_counts(count_summary(generate_hbt_stream(h), {1000.0, 0.0}));
    EXPECT_GT(small.std_error, 0.0);
    EXPECT_NEAR(small.std_error / large.std_error, 2.0, 0.2);
}

TEST(histogram, bins_totals_and_flat_accidentals) {
    EXPECT_EQ(delay_bin(4.9, 10.0), 0);
    EXPECT_EQ(delay_bin(5.0, 10.0), 1);
    EXPECT_EQ(delay_bin(-5.1, 10.0), -1);

    // Uniform random delays: occupancy per bin consistent with a flat distribution.
    RandomStream rng(1, RngDomain::test, 0);
    std::vector<DetectionEvent> ev;
    const std::int64_t n = 200'000;
    for (std::int64_t p = 0; p < n; ++p) {
        const std::int64_t t = p * 100'000;
        ev.push_back({p, t, channel::d2});
        ev.push_back({p, t - 5000 + static_cast<std::int64_t>(rng.uniform() * 10000.0), channel::d3});
    }
    const auto h = delay_histogram(make_stream(n, ev), channel::d2, channel::d3, 500.0);
    EXPECT_EQ(h.total(), n);
    const double expected = n / 20.0;
    for (std::int64_t k = -9; k <= 9; ++k) EXPECT_NEAR(h.bins.at(k), expected, 5.0 * std::sqrt(expected)) << k;

    EXPECT_THROW(delay_histogram(EventStream{}, 2, 3, 10.0), InvalidArgument);
    EXPECT_THROW(delay_histogram(make_stream(n, ev), 2, 3, 0.0), InvalidArgument);
}

TEST(select_window, keeps_only_pairs_inside_and_is_idempotent) {
    const auto s = make_stream(3, {{0, 0, 1}, {0, 50, 2}, {0, -50, 3}, {1, 1000, 2}, {1, 2000, 3}, {2, 10, 3}});
    const CoincidenceWindow w{200.0, 0.0};
    const auto once = select_window(s, channel::d2, channel::d3, w);
    ASSERT_EQ(once.events.size(), 2u);
    for (const auto& e : once.events) EXPECT_EQ(e.pulse_index, 0);
    const auto twice = select_window(once, channel::d2, channel::d3, w);
    ASSERT_EQ(twice.events.size(), once.events.size());
    for (std::size_t i = 0; i < once.events.size(); ++i) {
        EXPECT_EQ(twice.events[i].timestamp_ps, once.events[i].timestamp_ps);
        EXPECT_EQ(twice.events[i].channel_id, once.events[i].channel_id);
    }
}

TEST(io, event_stream_round_trip) {
    HbtSetup h;
    h.n_pulses = 100'000;
    h.noise_mean = 0.05;
    const auto s = generate_hbt_stream(h);
    std::stringstream buf;
    write_event_stream(buf, s);
    const auto back = read_event_stream(buf);
    ASSERT_EQ(back.events.size(), s.events.size());
    EXPECT_EQ(back.n_pulses, s.n_pulses);
    EXPECT_EQ(back.seed, s.seed);
    for (std::size_t i = 0; i < s.events.size(); ++i) {
        EXPECT_EQ(back.events[i].pulse_index, s.events[i].pulse_index);
        EXPECT_EQ(back.events[i].timestamp_ps, s.events[i].timestamp_ps);
        EXPECT_EQ(back.events[i].channel_id, s.events[i].channel_id);
    }
    std::stringstream again;
    write_event_stream(again, back);
    std::stringstream first;
    write_event_stream(first, s);
    EXPECT_EQ(first.str(), again.str());
}

TEST(io, malformed_event_stream_rejected) {
    std::stringstream bad("n_pulses=10,seed=1,rep_period_ps=12195.12\n1,2\n");
    EXPECT_THROW(read_event_stream(bad), InvalidArgument);
    std::stringstream bad_channel("n_pulses=10,seed=1,rep_period_ps=12195.12\nx,2,3\n");
    EXPECT_THROW(read_event_stream(bad_channel), InvalidArgument);
}

TEST(io, histogram_csv_is_contiguous) {
    Histogram h;
    h.bin_width_ps = 10.0;
    h.bins[-1] = 2;
    h.bins[2] = 5;
    std::ostringstream os;
    write_histogram_csv(os, h);
    EXPECT_EQ(os.str(), "delay_ps,count\n-10,2\n0,0\n10,0\n20,5\n");
    std::ostringstream cs;
    write_count_summary(cs, {1, 2, 3, 4});
    EXPECT_EQ(cs.str(), "N_trig=1\nN_start=2\nN_stop=3\nN_coinc=4\n");
}
