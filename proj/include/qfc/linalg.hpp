// Shared complex linear-algebra aliases and small helpers.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qfc {

using cplx = std::complex<double>;
using MatrixXc = Eigen::MatrixXcd;
using VectorXc = Eigen::VectorXcd;
using Matrix2c = Eigen::Matrix2cd;
using Vector2c = Eigen::Vector2cd;
using Matrix4c = Eigen::Matrix4cd;
using Vector4c = Eigen::Vector4cd;

inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I_unit{0.0, 1.0};

/// Raised for invalid inputs and configuration (CLI exit code 2).
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when an iterative or numerical routine cannot produce a result (CLI exit code 3).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw InvalidArgument(what);
}

inline bool finite(double x) { return std::isfinite(x); }

inline Matrix4c kron(const Matrix2c& a, const Matrix2c& b) {
    Matrix4c out;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
    return out;
}

inline Vector4c kron(const Vector2c& a, const Vector2c& b) {
    Vector4c out;
    out << a(0) * b(0), a(0) * b(1), a(1) * b(0), a(1) * b(1);
    return out;
}

namespace pauli {
inline Matrix2c id() { return Matrix2c::Identity(); }
inline Matrix2c x() { Matrix2c m; m << 0, 1, 1, 0; return m; }
inline Matrix2c y() { Matrix2c m; m << 0, -I_unit, I_unit, 0; return m; }
inline Matrix2c z() { Matrix2c m; m << 1, 0, 0, -1; return m; }
}  // namespace pauli

/// Trace distance ½‖a − b‖₁ for Hermitian matrices.
template <typename Derived>
double trace_distance(const Eigen::MatrixBase<Derived>& a, const Eigen::MatrixBase<Derived>& b) {
    using Mat = Eigen::Matrix<cplx, Derived::RowsAtCompileTime, Derived::ColsAtCompileTime>;
    Mat diff = a - b;
    Mat herm = 0.5 * (diff + diff.adjoint());
    Eigen::SelfAdjointEigenSolver<Mat> es(herm, Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

/// Largest entry-wise modulus.
template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
    return m.cwiseAbs().maxCoeff();
}

}  // namespace qfc
