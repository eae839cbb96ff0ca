// Frequency conversion as a two-mode beamsplitter between the signal and the
// converted frequency, plus the pump-power efficiency law, pump-linewidth
// dephasing and pump-linear noise.

#pragma once

#include "qfc/linalg.hpp"
#include "qfc/rng.hpp"
#include "qfc/units.hpp"

#include <algorithm>
#include <cstddef>
#include <limits>
#include <set>
#include <vector>

namespace qfc {

/// Interaction strength theta = |xi| tau, pump phase phi and per-mode Fock cutoff.
struct ConversionParams {
    double theta = 0.0;
    double phi = 0.0;
    int n_max = 2;

    void validate() const {
        require(finite(theta) && finite(phi), "conversion parameters must be finite");
        require(theta >= 0.0, "theta must be non-negative");
        require(phi >= 0.0 && phi < 2.0 * pi, "phi must lie in [0, 2pi)");
        require(n_max >= 1, "photon-number cutoff n_max must be >= 1");
    }
};

/// State-space unitary on the truncated space span{|n_s, n_c>}, 0 <= n_s, n_c <= n_max,
/// ordered lexicographically (index = n_s * (n_max + 1) + n_c).
class TwoModeUnitary {
public:
    TwoModeUnitary(int n_max, MatrixXc matrix) : n_max_(n_max), matrix_(std::move(matrix)) {}

    int n_max() const { return n_max_; }
    int dim() const { return static_cast<int>(matrix_.rows()); }
    const MatrixXc& matrix() const { return matrix_; }
    int index(int n_signal, int n_converted) const { return n_signal * (n_max_ + 1) + n_converted; }

private:
    int n_max_;
    MatrixXc matrix_;
};

inline int fock_index(int n_max, int n_signal, int n_converted) {
    return n_signal * (n_max + 1) + n_converted;
}

/// |n_s, n_c><n_s, n_c| on the truncated two-mode space.
inline MatrixXc fock_density(int n_max, int n_signal, int n_converted) {
    require(n_signal >= 0 && n_signal <= n_max && n_converted >= 0 && n_converted <= n_max,
            "Fock occupation outside the cutoff");
    const int dim = (n_max + 1) * (n_max + 1);
    MatrixXc rho = MatrixXc::Zero(dim, dim);
    const int k = fock_index(n_max, n_signal, n_converted);
    rho(k, k) = 1.0;
    return rho;
}

/// exp(theta (e^{-i phi} a_c^dag a_s - e^{i phi} a_s^dag a_c)), i.e. exp(-i H tau / hbar).
///
/// A signal photon picks up amplitude e^{-i phi} sin(theta) in the converted
/// mode, so the Heisenberg-picture operators transform as
///   a_s -> cos(theta) a_s - e^{i phi} sin(theta) a_c,
///   a_c -> e^{-i phi} sin(theta) a_s + cos(theta) a_c.
/// Built block by block in total photon number. Blocks with n_s + n_c > n_max
/// are cut by the per-mode cutoff; there the truncated generator is
/// exponentiated, which keeps U unitary but is only approximate physically.
inline TwoModeUnitary build_conversion_unitary(const ConversionParams& params) {
    params.validate();
    const int n_max = params.n_max;
    const int dim = (n_max + 1) * (n_max + 1);
    MatrixXc u = MatrixXc::Zero(dim, dim);
    const cplx e_minus = std::polar(1.0, -params.phi);

    for (int total = 0; total <= 2 * n_max; ++total) {
        std::vector<int> ns;  // signal occupations present in this block
        for (int n_s = std::max(0, total - n_max); n_s <= std::min(total, n_max); ++n_s) ns.push_back(n_s);
        const int b = static_cast<int>(ns.size());

        // Hermitian K with generator G = i K.
        MatrixXc k = MatrixXc::Zero(b, b);
        for (int j = 0; j < b; ++j) {
            const int n_s = ns[j];
            const int n_c = total - n_s;
            // a_c^dag a_s |n_s, n_c> = sqrt(n_s (n_c + 1)) |n_s - 1, n_c + 1>
            if (j > 0) {
                const double amp = std::sqrt(static_cast<double>(n_s) * (n_c + 1));
                const cplx g = params.theta * e_minus * amp;  // <j-1| G |j>
                k(j - 1, j) += -I_unit * g;
                k(j, j - 1) += std::conj(-I_unit * g);
            }
        }
        Eigen::SelfAdjointEigenSolver<MatrixXc> es(k);
        const VectorXc phases = (I_unit * es.eigenvalues().cast<cplx>()).array().exp();
        const MatrixXc block = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
        for (int r = 0; r < b; ++r)
            for (int c = 0; c < b; ++c)
                u(fock_index(n_max, ns[r], total - ns[r]), fock_index(n_max, ns[c], total - ns[c])) = block(r, c);
    }
    return TwoModeUnitary(n_max, std::move(u));
}

inline void validate_density(const MatrixXc& rho, double tol = 1e-9) {
    require(rho.rows() == rho.cols(), "density matrix must be square");
    for (Eigen::Index i = 0; i < rho.size(); ++i)
        require(std::isfinite(rho.data()[i].real()) && std::isfinite(rho.data()[i].imag()),
                "density matrix has non-finite entries");
    require(max_abs(rho - rho.adjoint()) <= tol, "density matrix is not Hermitian");
    require(std::abs(rho.trace() - 1.0) <= tol, "density matrix does not have unit trace");
    Eigen::SelfAdjointEigenSolver<MatrixXc> es(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
    require(es.eigenvalues().minCoeff() >= -tol, "density matrix is not positive semidefinite");
}

/// U rho U^dag.
inline MatrixXc apply_conversion(const MatrixXc& rho_in, const TwoModeUnitary& u) {
    require(rho_in.rows() == u.dim() && rho_in.cols() == u.dim(), "density matrix dimension does not match unitary");
    validate_density(rho_in);
    return u.matrix() * rho_in * u.matrix().adjoint();
}

/// Marginal photon-number distribution of the converted mode.
inline std::vector<double> converted_number_distribution(const MatrixXc& rho, int n_max) {
    std::vector<double> p(n_max + 1, 0.0);
    for (int n_s = 0; n_s <= n_max; ++n_s)
        for (int n_c = 0; n_c <= n_max; ++n_c) {
            const int k = fock_index(n_max, n_s, n_c);
            p[n_c] += rho(k, k).real();
        }
    return p;
}

// --------------------------------------------------------------------------
// Efficiency law  eta(P) = A sin^2(sqrt(B P))

enum class BUnit { per_mW, per_W };

struct EfficiencyModel {
    double peak = 0.62;        // A
    double b_per_watt = 3.6;   // B, always held per watt

    static EfficiencyModel from_fit(double a, double b, BUnit unit) {
        EfficiencyModel m{a, unit == BUnit::per_W ? b : b * 1e3};
        m.validate();
        return m;
    }

    void validate() const {
        require(finite(peak) && peak >= 0.0 && peak <= 1.0, "efficiency peak A must lie in [0, 1]");
        require(finite(b_per_watt) && b_per_watt > 0.0, "efficiency coefficient B must be positive");
    }

    /// Smallest pump power reaching the first maximum, B P = (pi/2)^2.
    Power first_peak() const { return Power::watts(pi * pi / 4.0 / b_per_watt); }

    /// Single-photon mixing angle theta = sqrt(B P) implied by the law.
    double mixing_angle(Power p) const { return std::sqrt(b_per_watt * p.in_watts()); }
};

inline double conversion_efficiency(Power pump, const EfficiencyModel& model) {
    require(finite(pump.in_watts()) && pump.in_watts() >= 0.0, "pump power must be non-negative");
    model.validate();
    const double s = std::sin(model.mixing_angle(pump));
    return model.peak * s * s;
}

struct EfficiencySample {
    Power power;
    double efficiency = 0.0;
};

struct EfficiencyFit {
    double peak = 0.0;         // A
    double b_per_watt = 0.0;   // B
    double residual = 0.0;     // sum of squared residuals
    int iterations = 0;
    bool converged = false;
    bool b_identifiable = true;
};

namespace detail {

struct LmRun {
    double a = 0.0, b = 0.0, ssr = 0.0;
    int iterations = 0;
    bool converged = false;
};

inline double efficiency_ssr(const std::vector<EfficiencySample>& s, double a, double b) {
    double ssr = 0.0;
    for (const auto& x : s) {
        const double sn = std::sin(std::sqrt(b * x.power.in_watts()));
        const double r = x.efficiency - a * sn * sn;
        ssr += r * r;
    }
    return ssr;
}

inline double best_peak_for(const std::vector<EfficiencySample>& s, double b) {
    double num = 0.0, den = 0.0;
    for (const auto& x : s) {
        const double sn = std::sin(std::sqrt(b * x.power.in_watts()));
        num += x.efficiency * sn * sn;
        den += sn * sn * sn * sn;
    }
    return den > 0.0 ? num / den : 0.0;
}

// Damped Gauss-Newton (Levenberg-Marquardt) on (A, B).
inline LmRun levenberg_marquardt(const std::vector<EfficiencySample>& s, double a, double b, double tol,
                                 int max_iter) {
    LmRun run{a, b, efficiency_ssr(s, a, b), 0, false};
    double lambda = 1e-3;
    for (int it = 0; it < max_iter; ++it) {
        run.iterations = it + 1;
        Eigen::Matrix2d jtj = Eigen::Matrix2d::Zero();
        Eigen::Vector2d jtr = Eigen::Vector2d::Zero();
        for (const auto& x : s) {
            const double p = x.power.in_watts();
            const double u = std::sqrt(run.b * p);
            const double sn = std::sin(u);
            const double da = sn * sn;
            const double db = u > 0.0 ? run.a * std::sin(2.0 * u) * p / (2.0 * u) : 0.0;
            const double r = x.efficiency - run.a * da;
            jtj(0, 0) += da * da;
            jtj(0, 1) += da * db;
            jtj(1, 1) += db * db;
            jtr(0) += da * r;
            jtr(1) += db * r;
        }
        jtj(1, 0) = jtj(0, 1);
        bool stepped = false;
        for (int tries = 0; tries < 60; ++tries) {
            Eigen::Matrix2d damped = jtj;
            damped(0, 0) += lambda * std::max(jtj(0, 0), 1e-300);
            damped(1, 1) += lambda * std::max(jtj(1, 1), 1e-300);
            const Eigen::Vector2d step = damped.ldlt().solve(jtr);
            if (!step.allFinite()) { lambda *= 10.0; continue; }
            const double na = run.a + step(0);
            const double nb = std::max(run.b + step(1), 1e-300);
            const double nssr = efficiency_ssr(s, na, nb);
            if (nssr <= run.ssr) {
                const double change = std::max(std::abs(na - run.a) / std::max(1.0, std::abs(run.a)),
                                               std::abs(nb - run.b) / std::max(1.0, std::abs(run.b)));
                run.a = na;
                run.b = nb;
                run.ssr = nssr;
                lambda = std::max(lambda / 10.0, 1e-15);
                stepped = true;
                if (change < tol) {
                    run.converged = true;
                    return run;
                }
                break;
            }
            lambda *= 10.0;
        }
        if (!stepped) {
            // No descent direction left: we sit at a (local) minimum.
            run.converged = true;
            return run;
        }
    }
    return run;
}

}  // namespace detail

/// Least-squares fit of eta = A sin^2(sqrt(B P)) with multi-start over B.
inline EfficiencyFit fit_efficiency_curve(const std::vector<EfficiencySample>& samples, double tol = 1e-10,
                                          int max_iter = 500) {
    require(samples.size() >= 3, "efficiency fit needs at least 3 samples");
    std::set<double> powers;
    double p_max = 0.0;
    bool all_zero = true;
    for (const auto& s : samples) {
        require(finite(s.power.in_watts()) && s.power.in_watts() >= 0.0 && finite(s.efficiency),
                "efficiency samples must be finite with non-negative power");
        powers.insert(s.power.in_watts());
        p_max = std::max(p_max, s.power.in_watts());
        if (s.efficiency != 0.0) all_zero = false;
    }
    require(powers.size() >= 2 && p_max > 0.0, "efficiency samples are degenerate (powers not distinct)");

    if (all_zero) {
        EfficiencyFit fit;
        fit.converged = true;
        fit.b_identifiable = false;
        return fit;
    }

    // Starting points spread sqrt(B P_max) over (0, 4 pi].
    detail::LmRun best;
    best.ssr = std::numeric_limits<double>::infinity();
    bool any_converged = false;
    for (int k = 1; k <= 64; ++k) {
        const double u_max = 4.0 * pi * k / 64.0;
        const double b0 = u_max * u_max / p_max;
        const double a0 = detail::best_peak_for(samples, b0);
        auto run = detail::levenberg_marquardt(samples, a0, b0, tol, max_iter);
        any_converged = any_converged || run.converged;
        if (run.converged && run.ssr < best.ssr) best = run;
    }
    if (!any_converged) throw NumericalError("efficiency fit did not converge within the iteration cap");

    EfficiencyFit fit;
    fit.peak = best.a;
    fit.b_per_watt = best.b;
    fit.residual = best.ssr;
    fit.iterations = best.iterations;
    fit.converged = true;
    return fit;
}

struct EfficiencyFitSpread {
    double peak_std = 0.0;
    double b_std = 0.0;
};

/// Parametric bootstrap: resample residual noise around the fitted curve and refit.
inline EfficiencyFitSpread bootstrap_efficiency_fit(const std::vector<EfficiencySample>& samples,
                                                    const EfficiencyFit& fit, int replicas, std::uint64_t seed) {
    require(replicas >= 2, "bootstrap needs at least two replicas");
    const double dof = std::max<double>(1.0, static_cast<double>(samples.size()) - 2.0);
    const double sigma = std::sqrt(fit.residual / dof);
    const EfficiencyModel model{std::clamp(fit.peak, 0.0, 1.0), std::max(fit.b_per_watt, 1e-300)};
    std::vector<double> as, bs;
    for (int r = 0; r < replicas; ++r) {
        RandomStream rng(seed, RngDomain::fit_bootstrap, static_cast<std::uint64_t>(r));
        std::vector<EfficiencySample> resampled = samples;
        for (auto& s : resampled) s.efficiency = conversion_efficiency(s.power, model) + rng.normal(0.0, sigma);
        const auto refit = fit_efficiency_curve(resampled);
        as.push_back(refit.peak);
        bs.push_back(refit.b_per_watt);
    }
    auto stdev = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m += x;
        m /= static_cast<double>(v.size());
        double s2 = 0.0;
        for (double x : v) s2 += (x - m) * (x - m);
        return std::sqrt(s2 / static_cast<double>(v.size() - 1));
    };
    return {stdev(as), stdev(bs)};
}

// --------------------------------------------------------------------------
// Pump noise and coherence

struct NoiseModel {
    double c_noise = 0.0;   // mean noise photons per pulse per watt of pump
    double delta_f = 150e3; // pump linewidth, Hz (0 = ideal monochromatic pump)
    double t1 = 1e-9;       // MZI path delay, s

    void validate() const {
        require(finite(c_noise) && c_noise >= 0.0, "noise coefficient must be non-negative");
        require(finite(delta_f) && delta_f >= 0.0, "pump linewidth must be non-negative");
        require(finite(t1) && t1 > 0.0, "MZI delay t1 must be positive");
    }
};

/// exp(-t1 / tau_c) with coherence time tau_c = 1 / (2 pi delta_f) (Lorentzian line).
inline double pump_dephasing_factor(const NoiseModel& noise) {
    noise.validate();
    return std::exp(-2.0 * pi * noise.delta_f * noise.t1);
}

/// Mean noise photons per pulse in the converted band; linear in pump power.
inline double noise_mean_photons(Power pump, double c_noise) {
    require(finite(pump.in_watts()) && pump.in_watts() >= 0.0, "pump power must be non-negative");
    require(finite(c_noise) && c_noise >= 0.0, "noise coefficient must be non-negative");
    return c_noise * pump.in_watts();
}

}  // namespace qfc
