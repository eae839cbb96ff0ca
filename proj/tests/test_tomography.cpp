#include "qfc/tomography.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace qfc;

namespace {

TwoQubitState random_state(std::mt19937_64& gen, int rank) {
    std::normal_distribution<double> n;
    Eigen::Matrix<cplx, 4, Eigen::Dynamic> g(4, rank);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < rank; ++j) g(i, j) = cplx(n(gen), n(gen));
    const Matrix4c m = g * g.adjoint();
    return TwoQubitState(m / m.trace().real());
}

std::vector<double> exact_probabilities(const TwoQubitState& rho, const std::vector<MeasurementSetting>& settings) {
    std::vector<double> p;
    for (const auto& s : settings) p.push_back(s.probability(rho));
    return p;
}

// Linear inversion on the Gram system, used only as a cross-check.
Matrix4c linear_inversion(const std::vector<MeasurementSetting>& settings, const std::vector<double>& p) {
    Eigen::MatrixXcd a(settings.size(), 16);
    for (std::size_t i = 0; i < settings.size(); ++i) {
        const Matrix4c proj = settings[i].projector();
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) a(i, 4 * c + r) = proj(c, r);  // Tr(P rho) = sum P_cr rho_rc
    }
    Eigen::VectorXcd b(settings.size());
    for (std::size_t i = 0; i < settings.size(); ++i) b(i) = p[i];
    const Eigen::VectorXcd x = a.colPivHouseholderQr().solve(b);
    Matrix4c rho;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) rho(r, c) = x(4 * c + r);
    return rho;
}

}  // namespace

TEST(settings, informational_completeness) {
    EXPECT_EQ(standard_settings().size(), 16u);
    EXPECT_EQ(settings_rank(standard_settings()), 16);
    EXPECT_EQ(settings_rank(six_state_settings()), 16);
    EXPECT_EQ(settings_rank(settings_from({analyzer_h, analyzer_v})), 4);
}

TEST(settings, projector_probabilities_for_phi_plus) {
    const auto bell = TwoQubitState::pure(bell_phi_plus());
    const auto s = standard_settings();
    // Order {H, V, D, R} x {H, V, D, R}.
    EXPECT_NEAR(s[0].probability(bell), 0.5, 1e-14);    // HH
    EXPECT_NEAR(s[1].probability(bell), 0.0, 1e-14);    // HV
    EXPECT_NEAR(s[10].probability(bell), 0.5, 1e-14);   // DD
    EXPECT_NEAR(s[15].probability(bell), 0.0, 1e-14);   // RR: phi+ has <RR> = 0
    EXPECT_NEAR(s[2].probability(bell), 0.25, 1e-14);   // HD
}

TEST(linear_inversion, recovers_state_from_exact_probabilities) {
    std::mt19937_64 gen(4);
    const auto settings = standard_settings();
    const auto rho = random_state(gen, 4);
    EXPECT_LT(max_abs(linear_inversion(settings, exact_probabilities(rho, settings)) - rho.matrix()), 1e-10);
}

TEST(mle, reaches_truth_from_exact_probabilities) {
    std::mt19937_64 gen(8);
    const auto settings = standard_settings();
    MleOptions opt;
    opt.tol = 1e-16;
    opt.record_trace = true;
    for (int trial = 0; trial < 10; ++trial) {
        const auto rho = random_state(gen, 4);
        const auto res = mle_reconstruct_frequencies(settings, exact_probabilities(rho, settings), opt);
        EXPECT_LT(trace_distance(res.state.matrix(), rho.matrix()), 1e-6) << trial;
        for (std::size_t i = 1; i < res.log_likelihood_trace.size(); ++i)
            ASSERT_GE(res.log_likelihood_trace[i], res.log_likelihood_trace[i - 1]);
    }
}

TEST(mle, six_state_settings_also_work) {
    std::mt19937_64 gen(9);
    const auto settings = six_state_settings();
    MleOptions opt;
    opt.tol = 1e-16;
    const auto rho = random_state(gen, 3);
    const auto res = mle_reconstruct_frequencies(settings, exact_probabilities(rho, settings), opt);
    EXPECT_LT(trace_distance(res.state.matrix(), rho.matrix()), 1e-6);
}

TEST(mle, output_is_always_a_state) {
    // Extreme and inconsistent counts still produce a valid density matrix.
    const auto settings = standard_settings();
    std::vector<double> f(settings.size(), 0.0);
    f[0] = 10.0;
    f[5] = 3.0;
    f[13] = 1.0;
    const auto res = mle_reconstruct_frequencies(settings, f);
    Eigen::SelfAdjointEigenSolver<Matrix4c> es(res.state.matrix());
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
    EXPECT_NEAR(res.state.matrix().trace().real(), 1.0, 1e-12);
    EXPECT_THROW(mle_reconstruct_frequencies(settings, std::vector<double>(16, 0.0)), InvalidArgument);
    EXPECT_THROW(mle_reconstruct_frequencies(settings_from({analyzer_h, analyzer_v}), std::vector<double>(4, 1.0)),
                 InvalidArgument);
}

TEST(mle, deterministic_given_counts) {
    RandomStream rng(1, RngDomain::test, 0);
    const auto records = simulate_counts(TwoQubitState::pure(bell_phi_plus()), standard_settings(), 1000, 0.2, 10, rng);
    const auto a = mle_reconstruct(records);
    const auto b = mle_reconstruct(records);
    EXPECT_EQ(a.iterations, b.iterations);
    EXPECT_EQ(max_abs(a.state.matrix() - b.state.matrix()), 0.0);
}

TEST(simulate_counts, means_follow_the_forward_model) {
    RandomStream rng(2, RngDomain::test, 0);
    const auto bell = TwoQubitState::pure(bell_phi_plus());
    const auto settings = standard_settings();
    std::vector<double> sum(settings.size(), 0.0);
    const int reps = 400;
    for (int r = 0; r < reps; ++r) {
        const auto rec = simulate_counts(bell, settings, 100.0, 0.5, 4.0, rng);
        for (std::size_t i = 0; i < rec.size(); ++i) sum[i] += rec[i].count;
    }
    for (std::size_t i = 0; i < settings.size(); ++i) {
        const double mean = 100.0 * settings[i].probability(bell) + 2.0;
        EXPECT_NEAR(sum[i] / reps, mean, 5.0 * std::sqrt(mean / reps)) << i;
    }
}

TEST(subtract_background, arithmetic) {
    std::vector<CountRecord> rec(2);
    rec[0].count = 25;
    rec[0].duration = 100.0;
    rec[1].count = 3;
    rec[1].duration = 100.0;
    const auto out = subtract_background(rec, 0.2);
    EXPECT_EQ(out[0].count, 5);
    EXPECT_EQ(out[1].count, 0);
    EXPECT_EQ(subtract_background(rec, 0.0)[0].count, 25);
    EXPECT_THROW(subtract_background(rec, -1.0), InvalidArgument);
}

TEST(count_records, file_round_trip) {
    RandomStream rng(3, RngDomain::test, 0);
    const auto rec = simulate_counts(TwoQubitState::maximally_mixed(), six_state_settings(), 50, 0.1, 2.5, rng);
    std::stringstream buf;
    write_count_records(buf, rec);
    const auto back = read_count_records(buf);
    ASSERT_EQ(back.size(), rec.size());
    for (std::size_t i = 0; i < rec.size(); ++i) {
        EXPECT_EQ(back[i].count, rec[i].count);
        EXPECT_EQ(back[i].duration, rec[i].duration);
        EXPECT_LT((back[i].setting.psi - rec[i].setting.psi).norm(), 1e-12);
    }
    std::stringstream again;
    write_count_records(again, back);
    std::stringstream first;
    write_count_records(first, rec);
    EXPECT_EQ(first.str(), again.str());
    std::stringstream bad("0,0,0,0,5\n");
    EXPECT_THROW(read_count_records(bad), InvalidArgument);
}
