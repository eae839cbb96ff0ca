// Fidelity, Wootters concurrence / entanglement of formation and the CHSH
// maximum from the correlation matrix.

#pragma once

#include "qfc/linalg.hpp"
#include "qfc/state.hpp"

#include <algorithm>
#include <array>

namespace qfc {

/// <psi| rho |psi> for a (normalized internally) pure target.
inline double fidelity(const TwoQubitState& rho, const Vector4c& target) {
    require(target.norm() > 0.0, "fidelity target must be non-zero");
    const Vector4c t = target / target.norm();
    return std::clamp((t.adjoint() * rho.matrix() * t)(0, 0).real(), 0.0, 1.0);
}

inline double concurrence(const TwoQubitState& state) {
    const Matrix4c& rho = state.matrix();
    const Matrix4c yy = kron(pauli::y(), pauli::y());
    const Matrix4c flipped = yy * rho.conjugate() * yy;

    // Eigenvalues of rho * flipped equal those of sqrt(rho) flipped sqrt(rho), which is Hermitian.
    Eigen::SelfAdjointEigenSolver<Matrix4c> es_rho(rho);
    const Eigen::Vector4d ev = es_rho.eigenvalues().cwiseMax(0.0);
    const Matrix4c sqrt_rho = es_rho.eigenvectors() * ev.cwiseSqrt().cast<cplx>().asDiagonal() *
                              es_rho.eigenvectors().adjoint();
    Matrix4c r = sqrt_rho * flipped * sqrt_rho;
    r = 0.5 * (r + r.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix4c> es(r, Eigen::EigenvaluesOnly);
    std::array<double, 4> lambda{};
    for (int i = 0; i < 4; ++i) lambda[i] = std::sqrt(std::max(0.0, es.eigenvalues()(i)));
    std::sort(lambda.begin(), lambda.end(), std::greater<>());
    return std::clamp(lambda[0] - lambda[1] - lambda[2] - lambda[3], 0.0, 1.0);
}

/// Binary entropy in bits.
inline double binary_entropy(double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

inline double eof_from_concurrence(double c) {
    require(finite(c) && c >= 0.0 && c <= 1.0, "concurrence must lie in [0, 1]");
    return binary_entropy(0.5 * (1.0 + std::sqrt(std::max(0.0, 1.0 - c * c))));
}

inline double entanglement_of_formation(const TwoQubitState& rho) {
    return eof_from_concurrence(concurrence(rho));
}

/// T_ij = Tr(rho sigma_i (x) sigma_j), i, j in {x, y, z}.
inline Eigen::Matrix3d correlation_matrix(const TwoQubitState& rho) {
    const std::array<Matrix2c, 3> s{pauli::x(), pauli::y(), pauli::z()};
    Eigen::Matrix3d t;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) t(i, j) = (rho.matrix() * kron(s[i], s[j])).trace().real();
    return t;
}

struct ChshAssessment {
    double s_max = 0.0;
    bool violates = false;         // s_max > 2
    bool fidelity_witness = false; // F(phi+) > 1/sqrt(2)
};

inline ChshAssessment chsh_assessment(const TwoQubitState& rho) {
    const Eigen::Matrix3d t = correlation_matrix(rho);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(t.transpose() * t, Eigen::EigenvaluesOnly);
    const auto& m = es.eigenvalues();  // ascending
    ChshAssessment out;
    out.s_max = 2.0 * std::sqrt(std::max(0.0, m(1) + m(2)));
    out.violates = out.s_max > 2.0;
    out.fidelity_witness = fidelity(rho, bell_phi_plus()) > 1.0 / std::sqrt(2.0);
    return out;
}

}  // namespace qfc
