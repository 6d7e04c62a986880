#pragma once

// Truncated Fock-space core. Quadratures follow the hbar = 2 convention:
// x = a + a^dagger, so the vacuum has unit quadrature variance.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <utility>

#include "cubic/errors.hpp"

namespace cubic {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;

inline constexpr double kPi = 3.14159265358979323846;

namespace detail {

inline void require_dim_at_least(std::size_t dim, std::size_t min, const char* what) {
    if (dim < min) {
        throw InvalidDimension(std::string(what) + ": dim must be >= " + std::to_string(min) +
                               ", got " + std::to_string(dim));
    }
}

inline void require_same_dim(std::size_t lhs, std::size_t rhs) {
    if (lhs != rhs) throw DimensionMismatch(lhs, rhs);
}

inline double max_abs(const Mat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace detail

/// Pure state over the Fock basis |0>..|dim-1>.
class StateVector {
public:
    explicit StateVector(Vec amps) : amps_(std::move(amps)) {
        if (amps_.size() == 0) throw InvalidDimension("StateVector: empty amplitude list");
    }

    static StateVector zero(std::size_t dim) {
        return StateVector(Vec::Zero(static_cast<Eigen::Index>(dim)));
    }

    [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(amps_.size()); }
    [[nodiscard]] const Vec& amps() const noexcept { return amps_; }
    [[nodiscard]] cplx operator[](std::size_t n) const { return amps_(static_cast<Eigen::Index>(n)); }
    [[nodiscard]] double squared_norm() const { return amps_.squaredNorm(); }

private:
    Vec amps_;
};

/// Dense operator on the truncated Fock space.
class FockOperator {
public:
    explicit FockOperator(Mat mat) : mat_(std::move(mat)) {
        if (mat_.rows() == 0 || mat_.rows() != mat_.cols()) {
            throw InvalidDimension("FockOperator: matrix must be square and non-empty");
        }
    }

    [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(mat_.rows()); }
    [[nodiscard]] const Mat& mat() const noexcept { return mat_; }
    [[nodiscard]] cplx operator()(std::size_t row, std::size_t col) const {
        return mat_(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
    }

    [[nodiscard]] bool is_hermitian(double tol = 1e-12) const {
        return detail::max_abs(mat_ - mat_.adjoint()) < tol;
    }
    [[nodiscard]] bool is_unitary(double tol = 1e-10) const {
        return detail::max_abs(mat_.adjoint() * mat_ - Mat::Identity(mat_.rows(), mat_.cols())) < tol;
    }

    friend FockOperator operator*(const FockOperator& lhs, const FockOperator& rhs) {
        detail::require_same_dim(lhs.dim(), rhs.dim());
        return FockOperator(lhs.mat_ * rhs.mat_);
    }
    friend FockOperator operator+(const FockOperator& lhs, const FockOperator& rhs) {
        detail::require_same_dim(lhs.dim(), rhs.dim());
        return FockOperator(lhs.mat_ + rhs.mat_);
    }
    friend FockOperator operator-(const FockOperator& lhs, const FockOperator& rhs) {
        detail::require_same_dim(lhs.dim(), rhs.dim());
        return FockOperator(lhs.mat_ - rhs.mat_);
    }
    friend FockOperator operator*(cplx scale, const FockOperator& op) { return FockOperator(scale * op.mat_); }

private:
    Mat mat_;
};

/// Hermitian, positive-semidefinite, unit-trace matrix over the Fock basis.
/// Construction validates all three properties.
class DensityMatrix {
public:
    static constexpr double kHermitianTol = 1e-10;
    static constexpr double kTraceTol = 1e-9;
    static constexpr double kEigenTol = 1e-9;

    explicit DensityMatrix(Mat mat) : mat_(std::move(mat)) {
        if (mat_.rows() == 0 || mat_.rows() != mat_.cols()) {
            throw InvalidDimension("DensityMatrix: matrix must be square and non-empty");
        }
        if (detail::max_abs(mat_ - mat_.adjoint()) > kHermitianTol) {
            throw ContractViolation("DensityMatrix: not Hermitian");
        }
        const double tr = mat_.trace().real();
        if (std::abs(tr - 1.0) > kTraceTol) {
            throw ContractViolation("DensityMatrix: trace " + std::to_string(tr) + " != 1");
        }
        const Mat herm = 0.5 * (mat_ + mat_.adjoint());
        const Eigen::SelfAdjointEigenSolver<Mat> es(herm, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -kEigenTol) {
            throw ContractViolation("DensityMatrix: negative eigenvalue " +
                                    std::to_string(es.eigenvalues().minCoeff()));
        }
    }

    /// |psi><psi| for a unit-norm state.
    static DensityMatrix pure(const StateVector& psi) { return DensityMatrix(psi.amps() * psi.amps().adjoint()); }

    [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(mat_.rows()); }
    [[nodiscard]] const Mat& mat() const noexcept { return mat_; }
    [[nodiscard]] cplx operator()(std::size_t row, std::size_t col) const {
        return mat_(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
    }

private:
    Mat mat_;
};

// ---------------------------------------------------------------------------
// Ladder and quadrature operators

/// a with <n-1|a|n> = sqrt(n).
inline FockOperator annihilation(std::size_t dim) {
    detail::require_dim_at_least(dim, 2, "annihilation");
    Mat a = Mat::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (Eigen::Index n = 1; n < a.rows(); ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return FockOperator(std::move(a));
}

inline FockOperator creation(std::size_t dim) { return FockOperator(annihilation(dim).mat().adjoint()); }

inline FockOperator number_op(std::size_t dim) {
    detail::require_dim_at_least(dim, 2, "number_op");
    Vec diag(static_cast<Eigen::Index>(dim));
    for (Eigen::Index n = 0; n < diag.size(); ++n) diag(n) = static_cast<double>(n);
    return FockOperator(diag.asDiagonal());
}

/// x_theta = a e^{-i theta} + a^dagger e^{i theta}; theta = 0 is x, theta = pi/2 is p.
inline FockOperator quadrature(double theta, std::size_t dim) {
    const Mat a = annihilation(dim).mat();
    const cplx ph = std::polar(1.0, theta);
    Mat x = a * std::conj(ph) + a.adjoint() * ph;
    return FockOperator(std::move(x));
}

/// Diagonal rotation R(t) = exp(-i t n); R(t)^dagger a R(t) = a e^{-i t}.
inline FockOperator rotation_op(double angle, std::size_t dim) {
    detail::require_dim_at_least(dim, 1, "rotation_op");
    Vec diag(static_cast<Eigen::Index>(dim));
    for (Eigen::Index n = 0; n < diag.size(); ++n) diag(n) = std::polar(1.0, -angle * static_cast<double>(n));
    return FockOperator(diag.asDiagonal());
}

// ---------------------------------------------------------------------------
// Matrix exponentials of Hermitian generators

/// Eigendecomposition of a Hermitian generator, reusable for exp(i s H) at many s.
class HermitianExp {
public:
    explicit HermitianExp(const FockOperator& gen) {
        if (!gen.is_hermitian(1e-10 * std::max(1.0, detail::max_abs(gen.mat())))) {
            throw ContractViolation("expm_hermitian: generator is not Hermitian");
        }
        const Mat herm = 0.5 * (gen.mat() + gen.mat().adjoint());
        const Eigen::SelfAdjointEigenSolver<Mat> es(herm);
        values_ = es.eigenvalues();
        vectors_ = es.eigenvectors();
    }

    [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(values_.size()); }
    [[nodiscard]] const Eigen::VectorXd& eigenvalues() const noexcept { return values_; }
    [[nodiscard]] const Mat& eigenvectors() const noexcept { return vectors_; }

    /// exp(i * scale * H) as a dense matrix.
    [[nodiscard]] Mat exp_i(double scale) const { return vectors_ * phases(scale).asDiagonal() * vectors_.adjoint(); }

    /// exp(i * scale * H) v without forming the matrix.
    [[nodiscard]] Vec apply_exp_i(double scale, const Vec& v) const {
        return vectors_ * phases(scale).cwiseProduct(vectors_.adjoint() * v);
    }

private:
    [[nodiscard]] Vec phases(double scale) const {
        Vec ph(values_.size());
        for (Eigen::Index k = 0; k < values_.size(); ++k) ph(k) = std::polar(1.0, scale * values_(k));
        return ph;
    }

    Eigen::VectorXd values_;
    Mat vectors_;
};

/// exp(i * scale * gen) via diagonalization of the Hermitian generator.
inline FockOperator expm_hermitian(const FockOperator& gen, double scale) {
    return FockOperator(HermitianExp(gen).exp_i(scale));
}

// ---------------------------------------------------------------------------
// State algebra

/// <a|b>, antilinear in the first argument.
inline cplx inner(const StateVector& a, const StateVector& b) {
    detail::require_same_dim(a.dim(), b.dim());
    return a.amps().dot(b.amps());
}

inline StateVector apply(const FockOperator& op, const StateVector& state) {
    detail::require_same_dim(op.dim(), state.dim());
    return StateVector(op.mat() * state.amps());
}

inline FockOperator dagger(const FockOperator& op) { return FockOperator(op.mat().adjoint()); }

inline cplx expect(const StateVector& state, const FockOperator& op) {
    detail::require_same_dim(op.dim(), state.dim());
    return state.amps().dot(op.mat() * state.amps());
}

inline cplx expect(const DensityMatrix& rho, const FockOperator& op) {
    detail::require_same_dim(op.dim(), rho.dim());
    return (rho.mat() * op.mat()).trace();
}

inline StateVector normalize(const StateVector& state) {
    const double nrm = state.amps().norm();
    if (nrm < 1e-14) throw DegenerateState("normalize: vector norm " + std::to_string(nrm) + " below 1e-14");
    return StateVector(state.amps() / nrm);
}

/// Keep the first `dim` amplitudes, or zero-pad up to `dim`. No renormalization.
inline StateVector resize(const StateVector& state, std::size_t dim) {
    const auto d = static_cast<Eigen::Index>(dim);
    Vec out = Vec::Zero(d);
    const Eigen::Index keep = std::min(d, static_cast<Eigen::Index>(state.dim()));
    out.head(keep) = state.amps().head(keep);
    return StateVector(std::move(out));
}

}  // namespace cubic
