// Two-qubit polarization tomography: wave-plate settings, the Poisson forward
// model, background subtraction and iterative maximum-likelihood (R rho R)
// reconstruction.

#pragma once

#include "qfc/encodings.hpp"
#include "qfc/events.hpp"
#include "qfc/linalg.hpp"
#include "qfc/metrics.hpp"
#include "qfc/rng.hpp"
#include "qfc/state.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <vector>

namespace qfc {

inline constexpr double deg = pi / 180.0;

struct MeasurementSetting {
    double qwp_a = 0.0, hwp_a = 0.0, qwp_b = 0.0, hwp_b = 0.0;  // radians
    Vector4c psi = Vector4c::Zero();                             // projector = |psi><psi|

    static MeasurementSetting from_angles(double qwp_a, double hwp_a, double qwp_b, double hwp_b) {
        require(finite(qwp_a) && finite(hwp_a) && finite(qwp_b) && finite(hwp_b), "wave-plate angles must be finite");
        MeasurementSetting s{qwp_a, hwp_a, qwp_b, hwp_b, Vector4c::Zero()};
        s.psi = kron(analyzer_state(qwp_a, hwp_a), analyzer_state(qwp_b, hwp_b));
        return s;
    }

    Matrix4c projector() const { return psi * psi.adjoint(); }
    double probability(const TwoQubitState& rho) const { return (psi.adjoint() * rho.matrix() * psi)(0, 0).real(); }
};

/// (QWP, HWP) analyzer angles for H, V, D = (H+V)/sqrt2, R = (H+iV)/sqrt2, A, L.
struct AnalyzerAngles {
    double qwp, hwp;
};
inline constexpr AnalyzerAngles analyzer_h{0.0, 0.0};
inline constexpr AnalyzerAngles analyzer_v{0.0, 45.0 * deg};
inline constexpr AnalyzerAngles analyzer_d{45.0 * deg, 22.5 * deg};
inline constexpr AnalyzerAngles analyzer_r{0.0, 22.5 * deg};
inline constexpr AnalyzerAngles analyzer_a{45.0 * deg, -22.5 * deg};
inline constexpr AnalyzerAngles analyzer_l{0.0, -22.5 * deg};

inline std::vector<MeasurementSetting> settings_from(const std::vector<AnalyzerAngles>& single) {
    std::vector<MeasurementSetting> out;
    for (const auto& a : single)
        for (const auto& b : single) out.push_back(MeasurementSetting::from_angles(a.qwp, a.hwp, b.qwp, b.hwp));
    return out;
}

/// {H, V, D, R} (x) {H, V, D, R}.
inline std::vector<MeasurementSetting> standard_settings() {
    return settings_from({analyzer_h, analyzer_v, analyzer_d, analyzer_r});
}

/// All six polarization states on each side (36 settings).
inline std::vector<MeasurementSetting> six_state_settings() {
    return settings_from({analyzer_h, analyzer_v, analyzer_d, analyzer_a, analyzer_r, analyzer_l});
}

/// Rank of the Gram matrix Tr(P_i P_j); 16 means informationally complete.
inline int settings_rank(const std::vector<MeasurementSetting>& settings) {
    const auto n = static_cast<Eigen::Index>(settings.size());
    Eigen::MatrixXd gram(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            gram(i, j) = std::norm(settings[i].psi.dot(settings[j].psi));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
    int rank = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        if (es.eigenvalues()(i) > 1e-9 * es.eigenvalues().maxCoeff()) ++rank;
    return rank;
}

struct CountRecord {
    MeasurementSetting setting;
    std::int64_t count = 0;
    double duration = 1.0;  // s
};

/// count ~ Poisson(n_per_setting Tr(P rho) + bg_rate duration).
inline std::vector<CountRecord> simulate_counts(const TwoQubitState& rho, const std::vector<MeasurementSetting>& settings,
                                                double n_per_setting, double bg_rate, double duration,
                                                RandomStream& rng) {
    require(finite(n_per_setting) && n_per_setting >= 0.0, "expected counts per setting must be non-negative");
    require(finite(bg_rate) && bg_rate >= 0.0, "background rate must be non-negative");
    require(finite(duration) && duration > 0.0, "duration must be positive");
    std::vector<CountRecord> out;
    out.reserve(settings.size());
    for (const auto& s : settings) {
        const double mean = n_per_setting * std::max(0.0, s.probability(rho)) + bg_rate * duration;
        out.push_back({s, rng.poisson(mean), duration});
    }
    return out;
}

/// count' = max(0, count - round(bg_rate duration)).
inline std::vector<CountRecord> subtract_background(std::vector<CountRecord> records, double bg_rate) {
    require(finite(bg_rate) && bg_rate >= 0.0, "background rate must be non-negative");
    for (auto& r : records) {
        const auto bg = static_cast<std::int64_t>(std::llround(bg_rate * r.duration));
        r.count = std::max<std::int64_t>(0, r.count - bg);
    }
    return records;
}

struct MleOptions {
    double tol = 1e-10;          // stop when the log-likelihood gains less than this
    int max_iter = 100000;
    double probability_floor = 1e-12;
    bool record_trace = false;
    bool newton_polish = true;  // finish with likelihood-increasing Newton steps
};

struct MleResult {
    TwoQubitState state = TwoQubitState::maximally_mixed();
    int iterations = 0;
    bool converged = false;
    double log_likelihood = 0.0;
    std::vector<double> log_likelihood_trace;
};

/// Iterative maximum likelihood, rho <- N[R rho R], R = sum_i f_i / p_i P_i,
/// on relative frequencies f_i (they need not be normalized).
///
/// The settings need not sum to the identity, so the iteration runs on
/// sigma = G^{-1/2}-transformed projectors (G = sum_i P_i), where they form a
/// proper POVM and f_i is matched to p_i / sum_j p_j. When a full step would
/// lower the likelihood it is diluted, sigma <- N[(1 + e R) sigma (1 + e R)],
/// halving e until it does not.
inline MleResult mle_reconstruct_frequencies(const std::vector<MeasurementSetting>& settings,
                                             const std::vector<double>& frequencies, const MleOptions& opt = {}) {
    require(!settings.empty() && settings.size() == frequencies.size(), "one frequency per setting is required");
    double total = 0.0;
    for (double x : frequencies) {
        require(finite(x) && x >= 0.0, "frequencies must be non-negative");
        total += x;
    }
    require(total > 0.0, "tomography needs a non-zero total count");
    require(settings_rank(settings) == 16, "measurement settings are not informationally complete");

    const std::size_t m = settings.size();
    Matrix4c g = Matrix4c::Zero();
    for (const auto& s : settings) g += s.projector();
    Eigen::SelfAdjointEigenSolver<Matrix4c> es_g(g);
    const Matrix4c g_inv_half = es_g.eigenvectors() *
                                es_g.eigenvalues().cwiseSqrt().cwiseInverse().cast<cplx>().asDiagonal() *
                                es_g.eigenvectors().adjoint();

    std::vector<Vector4c> phi(m);
    std::vector<double> f(m);
    for (std::size_t i = 0; i < m; ++i) {
        phi[i] = g_inv_half * settings[i].psi;
        f[i] = frequencies[i] / total;
    }

    auto probs = [&](const Matrix4c& sigma, std::vector<double>& p) {
        for (std::size_t i = 0; i < m; ++i)
            p[i] = std::max(opt.probability_floor, (phi[i].adjoint() * sigma * phi[i])(0, 0).real());
    };
    auto loglik = [&](const std::vector<double>& p) {
        double l = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            if (f[i] > 0.0) l += f[i] * std::log(p[i]);
        return l;
    };
    // l(p_new) - l(p) without the cancellation of subtracting two sums.
    auto gain_of = [&](const std::vector<double>& p_new, const std::vector<double>& p_old) {
        double d = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            if (f[i] > 0.0) d += f[i] * std::log1p((p_new[i] - p_old[i]) / p_old[i]);
        return d;
    };
    auto normalize = [](Matrix4c s) {
        s = 0.5 * (s + s.adjoint());
        return Matrix4c(s / s.trace().real());
    };

    Matrix4c sigma = normalize(g);  // rho = I/4
    std::vector<double> p(m), p_new(m), p_try(m);
    probs(sigma, p);
    double ll = loglik(p);

    MleResult result;
    if (opt.record_trace) result.log_likelihood_trace.push_back(ll);
    for (int it = 0; it < opt.max_iter; ++it) {
        result.iterations = it + 1;
        Matrix4c r = Matrix4c::Zero();
        for (std::size_t i = 0; i < m; ++i)
            if (f[i] > 0.0) r += (f[i] / p[i]) * (phi[i] * phi[i].adjoint());

        Matrix4c candidate = normalize(r * sigma * r);
        probs(candidate, p_new);
        double gain = gain_of(p_new, p);
        for (double eps = 1.0; gain < 0.0 && eps > 1e-12; eps *= 0.5) {
            const Matrix4c step = Matrix4c::Identity() + eps * r;
            candidate = normalize(step * sigma * step.adjoint());
            probs(candidate, p_new);
            gain = gain_of(p_new, p);
        }
        if (gain < 0.0) {  // no ascent left at double precision
            result.converged = true;
            break;
        }
        // Over-relaxation: extend the accepted step while it stays positive
        // and keeps raising the likelihood.
        const Matrix4c delta = candidate - sigma;
        for (double beta = 2.0; beta <= 64.0; beta *= 2.0) {
            const Matrix4c trial = normalize(sigma + beta * delta);
            Eigen::SelfAdjointEigenSolver<Matrix4c> es_t(trial, Eigen::EigenvaluesOnly);
            if (es_t.eigenvalues().minCoeff() <= 0.0) break;
            probs(trial, p_try);
            const double g_try = gain_of(p_try, p);
            if (!(g_try > gain)) break;
            candidate = trial;
            gain = g_try;
            std::swap(p_new, p_try);
        }
        sigma = candidate;
        std::swap(p, p_new);
        ll += gain;
        if (opt.record_trace) result.log_likelihood_trace.push_back(ll);
        if (gain < opt.tol) {
            result.converged = true;
            break;
        }
    }

    // R rho R slows down once small eigenvalues are involved and its per-step
    // gain drops below double-precision resolution. Finish with Newton steps on
    // the 15 traceless directions, accepted only when they raise the likelihood.
    if (opt.newton_polish) {
        std::array<Matrix4c, 15> basis;
        const std::array<Matrix2c, 4> pauli_set{pauli::id(), pauli::x(), pauli::y(), pauli::z()};
        for (int k = 1; k < 16; ++k) basis[k - 1] = kron(pauli_set[k / 4], pauli_set[k % 4]);
        Eigen::MatrixXd a(m, 15);
        for (std::size_t i = 0; i < m; ++i)
            for (int k = 0; k < 15; ++k) a(i, k) = (phi[i].adjoint() * basis[k] * phi[i])(0, 0).real();
        for (int step = 0; step < 20; ++step) {
            Eigen::VectorXd grad = Eigen::VectorXd::Zero(15);
            Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(15, 15);
            for (std::size_t i = 0; i < m; ++i) {
                if (f[i] <= 0.0) continue;
                grad += (f[i] / p[i]) * a.row(i).transpose();
                hess += (f[i] / (p[i] * p[i])) * a.row(i).transpose() * a.row(i);
            }
            const Eigen::VectorXd x = hess.ldlt().solve(grad);
            if (!x.allFinite()) break;
            double gain = -1.0;
            Matrix4c candidate;
            for (double t = 1.0; t > 1e-6; t *= 0.5) {
                candidate = sigma;
                for (int k = 0; k < 15; ++k) candidate += t * x(k) * basis[k];
                Eigen::SelfAdjointEigenSolver<Matrix4c> es_c(candidate, Eigen::EigenvaluesOnly);
                if (es_c.eigenvalues().minCoeff() <= 0.0) continue;
                probs(candidate, p_new);
                gain = gain_of(p_new, p);
                if (gain > 0.0) break;
            }
            if (!(gain > 0.0)) break;
            sigma = candidate;
            std::swap(p, p_new);
            ll += gain;
            ++result.iterations;
            if (opt.record_trace) result.log_likelihood_trace.push_back(ll);
        }
    }

    Matrix4c rho = g_inv_half * sigma * g_inv_half;
    rho = 0.5 * (rho + rho.adjoint());
    // Clip round-off below zero so the result satisfies the state invariants.
    Eigen::SelfAdjointEigenSolver<Matrix4c> es(rho);
    const Eigen::Vector4d ev = es.eigenvalues().cwiseMax(0.0);
    rho = es.eigenvectors() * ev.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
    result.state = TwoQubitState::normalized(rho);
    result.log_likelihood = ll;
    return result;
}

inline MleResult mle_reconstruct(const std::vector<CountRecord>& records, const MleOptions& opt = {}) {
    require(!records.empty(), "tomography needs count records");
    std::vector<MeasurementSetting> settings;
    std::vector<double> counts;
    for (const auto& r : records) {
        require(r.count >= 0, "counts must be non-negative");
        require(r.duration > 0.0, "record duration must be positive");
        settings.push_back(r.setting);
        counts.push_back(static_cast<double>(r.count) / r.duration);
    }
    return mle_reconstruct_frequencies(settings, counts, opt);
}

// --------------------------------------------------------------------------
// Count-record file: qwp_a_deg,hwp_a_deg,qwp_b_deg,hwp_b_deg,count,duration_s

inline void write_count_records(std::ostream& os, const std::vector<CountRecord>& records) {
    os << "qwp_a_deg,hwp_a_deg,qwp_b_deg,hwp_b_deg,count,duration_s\n";
    for (const auto& r : records) {
        const auto& s = r.setting;
        os << detail::format_double(s.qwp_a / deg) << ',' << detail::format_double(s.hwp_a / deg) << ','
           << detail::format_double(s.qwp_b / deg) << ',' << detail::format_double(s.hwp_b / deg) << ',' << r.count
           << ',' << detail::format_double(r.duration) << '\n';
    }
}

inline std::vector<CountRecord> read_count_records(std::istream& is) {
    std::vector<CountRecord> out;
    std::string line;
    while (std::getline(is, line)) {
        line = detail::trim(line);
        if (line.empty() || line[0] == '#' || line.rfind("qwp_a_deg", 0) == 0) continue;
        const auto cols = detail::split(line, ',');
        require(cols.size() == 6, "count record must have 6 columns: " + line);
        const double qa = detail::parse_number<double>(cols[0], "qwp_a_deg") * deg;
        const double ha = detail::parse_number<double>(cols[1], "hwp_a_deg") * deg;
        const double qb = detail::parse_number<double>(cols[2], "qwp_b_deg") * deg;
        const double hb = detail::parse_number<double>(cols[3], "hwp_b_deg") * deg;
        CountRecord r;
        r.setting = MeasurementSetting::from_angles(qa, ha, qb, hb);
        r.count = detail::parse_number<std::int64_t>(cols[4], "count");
        r.duration = detail::parse_number<double>(cols[5], "duration_s");
        require(r.count >= 0, "count must be non-negative");
        require(r.duration > 0.0, "duration must be positive");
        out.push_back(r);
    }
    require(!out.empty(), "count-record file holds no records");
    return out;
}

}  // namespace qfc
