#include "qfc/counting.hpp"
#include "qfc/sources.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace qfc;

namespace {

// Brute force over (pairs, herald photons detected) for P(n_B = k | click).
std::vector<double> herald_enumeration(const SpdcSource& src, const Detector& det) {
    const auto p = src.pair_distribution();
    std::vector<double> joint(p.size(), 0.0);
    double norm = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        // sum over j detected photons among k, binomial weights
        double p_click = 0.0;
        for (std::size_t j = 0; j <= k; ++j) {
            double binom = 1.0;
            for (std::size_t i = 0; i < j; ++i) binom = binom * static_cast<double>(k - i) / static_cast<double>(i + 1);
            const double w = binom * std::pow(det.efficiency, double(j)) * std::pow(1.0 - det.efficiency, double(k - j));
            p_click += w * (j > 0 ? 1.0 : det.dark_prob);
        }
        joint[k] = p[k] * p_click;
        norm += joint[k];
    }
    for (double& x : joint) x /= norm;
    return joint;
}

HbtSetup small_setup(SourceKind kind) {
    HbtSetup s;
    s.kind = kind;
    s.n_pulses = 300'000;
    s.seed = 5;
    s.source.mu = 0.1;
    s.start.efficiency = 0.3;
    s.stop.efficiency = 0.3;
    s.signal_transmission = 0.5;
    return s;
}

}  // namespace

TEST(detector, click_probability_closed_forms) {
    Detector det{0.3, 0.01, true, channel::d2};
    EXPECT_NEAR(click_probability_fock(1, det), 1.0 - 0.99 * 0.7, 1e-15);
    EXPECT_NEAR(click_probability_fock(1, det), 0.307, 1e-15);
    EXPECT_NEAR(click_probability_fock(0, det), 0.01, 1e-15);
    Detector ideal{1.0, 0.0, true, channel::d2};
    EXPECT_EQ(click_probability_fock(1, ideal), 1.0);
    EXPECT_EQ(click_probability_fock(0, ideal), 0.0);
    EXPECT_NEAR(click_probability_poissonian(2.0, det), 1.0 - 0.99 * std::exp(-0.6), 1e-15);
    EXPECT_THROW(click_probability_fock(1, Detector{1.2, 0.0, true, 2}), InvalidArgument);
    EXPECT_THROW(click_probability_fock(-1, det), InvalidArgument);
}

TEST(detector, monte_carlo_click_rate) {
    Detector det{0.3, 0.01, true, channel::d2};
    RandomStream rng(3, RngDomain::test, 0);
    const int n = 200'000;
    int clicks = 0;
    for (int i = 0; i < n; ++i) clicks += detect_fock(1, det, rng);
    const double p = 0.307;
    EXPECT_NEAR(clicks / double(n), p, 4.0 * std::sqrt(p * (1 - p) / n));
}

TEST(source, pair_distributions) {
    SpdcSource src;
    src.mu = 0.2;
    src.pair_truncation = 30;
    const auto p = src.pair_distribution();
    EXPECT_NEAR(p[0], std::exp(-0.2), 1e-14);
    EXPECT_NEAR(p[2], std::exp(-0.2) * 0.02, 1e-14);
    src.statistics = PairStatistics::thermal;
    const auto t = src.pair_distribution();
    EXPECT_NEAR(t[1], 0.2 / (1.2 * 1.2), 1e-12);
    src.statistics = PairStatistics::single;
    const auto s = src.pair_distribution();
    EXPECT_EQ(s[0], 0.8);
    EXPECT_EQ(s[1], 0.2);
    EXPECT_EQ(s[2], 0.0);
    src.mu = -1.0;
    EXPECT_THROW(src.pair_distribution(), InvalidArgument);
}

TEST(herald, conditional_distribution_matches_enumeration) {
    for (auto stats : {PairStatistics::poisson, PairStatistics::thermal}) {
        for (double mu : {0.01, 0.1, 0.5}) {
            SpdcSource src;
            src.mu = mu;
            src.statistics = stats;
            const Detector det{0.4, 1e-3, false, channel::d1};
            const auto a = herald_single_photon(src, det);
            const auto b = herald_enumeration(src, det);
            ASSERT_EQ(a.size(), b.size());
            for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-14);
        }
    }
}

TEST(herald, ideal_limit_and_multi_pair_growth) {
    SpdcSource src;
    src.mu = 1e-6;
    const Detector det{1.0, 0.0, false, channel::d1};
    const auto p = herald_single_photon(src, det);
    EXPECT_NEAR(p[1], 1.0, 1e-5);
    EXPECT_EQ(p[0], 0.0);
    src.mu = 0.1;
    const double lo = herald_single_photon(src, det)[2];
    src.mu = 0.3;
    EXPECT_GT(herald_single_photon(src, det)[2], lo);
    src.mu = 0.0;
    EXPECT_THROW(herald_single_photon(src, det), NumericalError);
}

TEST(entangled_pair, werner_bounds) {
    const auto rho = entangled_pair_state(1.0);
    EXPECT_LT(max_abs(rho.matrix() - bell_phi_plus() * bell_phi_plus().adjoint()), 1e-15);
    EXPECT_LT(max_abs(entangled_pair_state(0.0).matrix() - Matrix4c::Identity() / 4.0), 1e-15);
    EXPECT_THROW(entangled_pair_state(1.1), InvalidArgument);
}

TEST(hbt_stream, ideal_heralded_photon_has_no_coincidences) {
    HbtSetup s = small_setup(SourceKind::spdc);
    s.source.statistics = PairStatistics::single;
    s.herald.dark_prob = s.start.dark_prob = s.stop.dark_prob = 0.0;
    const auto stream = generate_hbt_stream(s);
    const auto c = count_summary(stream, {1000.0, 0.0});
    EXPECT_GT(c.n_start, 0);
    EXPECT_GT(c.n_stop, 0);
    EXPECT_EQ(c.n_coinc, 0);
    EXPECT_EQ(g2_zero_from_counts(c).value, 0.0);
}

TEST(hbt_stream, coherent_and_thermal_against_analytic_prediction) {
    for (auto kind : {SourceKind::coherent, SourceKind::thermal}) {
        HbtSetup s = small_setup(kind);
        s.source.mu = 0.5;
        s.start.dark_prob = s.stop.dark_prob = 0.0;
        s.n_pulses = 2'000'000;
        const auto g = g2_zero_from_counts(count_summary(generate_hbt_stream(s), {1000.0, 0.0}));
        const double predicted = predict_hbt(s).g2_zero();
        EXPECT_NEAR(g.value, predicted, 4.0 * g.std_error) << static_cast<int>(kind);
    }
}

TEST(hbt_prediction, closed_forms) {
    // Coherent light without darks: click events in the two arms are independent.
    HbtSetup s = small_setup(SourceKind::coherent);
    s.start.dark_prob = s.stop.dark_prob = 0.0;
    EXPECT_NEAR(predict_hbt(s).g2_zero(), 1.0, 1e-12);
    // Thermal click g2 with equal arms: 2(1+x)/(1+2x), x = q mu, q = per-arm detection probability.
    s.kind = SourceKind::thermal;
    const double x = 0.5 * 0.5 * 0.3 * s.source.mu;
    const double p1 = 1.0 - 1.0 / (1.0 + x);
    const double p12 = 1.0 - 2.0 / (1.0 + x) + 1.0 / (1.0 + 2.0 * x);
    EXPECT_NEAR(predict_hbt(s).g2_zero(), p12 / (p1 * p1), 1e-10);
    EXPECT_NEAR(predict_hbt(s).g2_zero(), 2.0 * (1.0 + x) / (1.0 + 2.0 * x), 1e-10);
    s.source.mu = 1e-3;
    EXPECT_NEAR(predict_hbt(s).g2_zero(), 2.0, 1e-3);
}

TEST(hbt_prediction, spdc_matches_monte_carlo) {
    HbtSetup s = small_setup(SourceKind::spdc);
    s.herald.efficiency = 0.9;
    s.noise_mean = 0.01;
    s.n_pulses = 3'000'000;
    const auto pred = predict_hbt(s);
    const auto c = count_summary(generate_hbt_stream(s), {1e6, 0.0});
    const double n = static_cast<double>(s.n_pulses);
    EXPECT_NEAR(c.n_trig / n, pred.p_trigger, 4.0 * std::sqrt(pred.p_trigger / n));
    EXPECT_NEAR(c.n_start / n, pred.p_start, 4.0 * std::sqrt(pred.p_start / n));
    EXPECT_NEAR(c.n_coinc / n, pred.p_coinc, 4.0 * std::sqrt(pred.p_coinc / n));
}

TEST(hbt_prediction, noise_calibration_hits_target) {
    HbtSetup s = small_setup(SourceKind::spdc);
    const double nm = calibrate_noise_mean_for_g2(s, 0.17);
    s.noise_mean = nm;
    EXPECT_NEAR(predict_hbt(s).g2_zero(), 0.17, 1e-9);
    EXPECT_THROW(calibrate_noise_mean_for_g2(s, 1.5), InvalidArgument);
}

TEST(hbt_stream, deterministic_and_thread_independent) {
    HbtSetup s = small_setup(SourceKind::spdc);
    s.n_pulses = 3 * pulse_chunk_size + 17;
    s.noise_mean = 0.01;
    s.threads = 1;
    std::ostringstream a, b, c;
    write_event_stream(a, generate_hbt_stream(s));
    write_event_stream(b, generate_hbt_stream(s));
    s.threads = 4;
    write_event_stream(c, generate_hbt_stream(s));
    EXPECT_EQ(a.str(), b.str());
    EXPECT_EQ(a.str(), c.str());
    s.seed = 6;
    std::ostringstream d;
    write_event_stream(d, generate_hbt_stream(s));
    EXPECT_NE(a.str(), d.str());
}

TEST(hbt_stream, rejects_invalid_setup) {
    HbtSetup s;
    s.n_pulses = 0;
    EXPECT_THROW(generate_hbt_stream(s), InvalidArgument);
    s.n_pulses = 10;
    s.signal_transmission = 1.5;
    EXPECT_THROW(generate_hbt_stream(s), InvalidArgument);
}
