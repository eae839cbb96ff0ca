// Two-qubit density matrices, ordered A (x) B with |0> = H (or S), |1> = V (or L).

#pragma once

#include "qfc/linalg.hpp"

namespace qfc {

class TwoQubitState {
public:
    /// Validates Hermiticity, unit trace and eigenvalues >= -tol.
    explicit TwoQubitState(const Matrix4c& rho, double tol = 1e-9) : rho_(rho) {
        for (int i = 0; i < 16; ++i)
            require(std::isfinite(rho.data()[i].real()) && std::isfinite(rho.data()[i].imag()),
                    "two-qubit state has non-finite entries");
        require(max_abs(rho - rho.adjoint()) <= tol, "two-qubit state is not Hermitian");
        require(std::abs(rho.trace() - 1.0) <= tol, "two-qubit state does not have unit trace");
        Eigen::SelfAdjointEigenSolver<Matrix4c> es(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
        require(es.eigenvalues().minCoeff() >= -tol, "two-qubit state has negative eigenvalues");
        rho_ = 0.5 * (rho + rho.adjoint());
    }

    static TwoQubitState pure(const Vector4c& psi) {
        require(psi.norm() > 0.0, "pure state vector must be non-zero");
        const Vector4c n = psi / psi.norm();
        return TwoQubitState(n * n.adjoint());
    }

    /// Normalizes a positive operator to unit trace first.
    static TwoQubitState normalized(const Matrix4c& unnormalized) {
        const double tr = unnormalized.trace().real();
        if (!(tr > 0.0)) throw NumericalError("cannot normalize a zero-trace operator");
        return TwoQubitState(unnormalized / tr);
    }

    static TwoQubitState maximally_mixed() { return TwoQubitState(Matrix4c::Identity() / 4.0); }

    const Matrix4c& matrix() const { return rho_; }
    cplx operator()(int r, int c) const { return rho_(r, c); }

private:
    Matrix4c rho_;
};

inline Vector4c bell_phi_plus() {
    Vector4c v;
    v << 1, 0, 0, 1;
    return v / std::sqrt(2.0);
}

inline Vector4c bell_phi_minus() {
    Vector4c v;
    v << 1, 0, 0, -1;
    return v / std::sqrt(2.0);
}

inline Matrix2c partial_trace_b(const Matrix4c& rho) {
    Matrix2c out;
    for (int a = 0; a < 2; ++a)
        for (int a2 = 0; a2 < 2; ++a2) out(a, a2) = rho(2 * a, 2 * a2) + rho(2 * a + 1, 2 * a2 + 1);
    return out;
}

inline Matrix2c partial_trace_a(const Matrix4c& rho) {
    Matrix2c out;
    for (int b = 0; b < 2; ++b)
        for (int b2 = 0; b2 < 2; ++b2) out(b, b2) = rho(b, b2) + rho(2 + b, 2 + b2);
    return out;
}

}  // namespace qfc
