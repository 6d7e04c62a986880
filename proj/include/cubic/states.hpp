#pragma once

// Constructors for the named states: vacuum, Fock, coherent, photon-added
// coherent, perturbative cubic and the exact cubic phase state.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "cubic/fock.hpp"

namespace cubic {

/// Coherent states must keep at least this much Poisson mass inside the truncation.
inline constexpr double kCoherentTailBudget = 1e-10;
inline constexpr double kCubicTailBudget = 1e-6;
inline constexpr std::size_t kCubicMinWorkDim = 512;

/// Mass of Poisson(mean) at n >= dim, summed directly (no 1 - cdf cancellation).
inline double poisson_tail(double mean, std::size_t dim) {
    if (mean == 0.0) return 0.0;
    double tail = 0.0;
    for (std::size_t n = dim;; ++n) {
        const double nd = static_cast<double>(n);
        const double term = std::exp(nd * std::log(mean) - mean - std::lgamma(nd + 1.0));
        tail += term;
        if (nd > mean && term < 1e-18 * std::max(tail, 1e-300)) break;
        if (n > dim + 100000) break;
    }
    return tail;
}

/// Smallest truncation keeping the coherent-state tail below `budget`.
inline std::size_t coherent_min_dim(cplx alpha, double budget = kCoherentTailBudget) {
    const double mean = std::norm(alpha);
    std::size_t dim = 1;
    while (poisson_tail(mean, dim) >= budget) ++dim;
    return dim;
}

inline StateVector fock(std::size_t n, std::size_t dim) {
    detail::require_dim_at_least(dim, 1, "fock");
    if (n >= dim) {
        throw OutOfRange("fock: level " + std::to_string(n) + " outside truncation dim " + std::to_string(dim));
    }
    Vec amps = Vec::Zero(static_cast<Eigen::Index>(dim));
    amps(static_cast<Eigen::Index>(n)) = 1.0;
    return StateVector(std::move(amps));
}

inline StateVector vacuum(std::size_t dim) { return fock(0, dim); }

namespace detail {

/// e^{-|alpha|^2/2} alpha^n / sqrt(n!) for n < dim, no truncation check and no
/// renormalization. Also the POVM element <n|beta> used by tomography.
inline Vec coherent_amplitudes(cplx alpha, std::size_t dim) {
    Vec amps = Vec::Zero(static_cast<Eigen::Index>(dim));
    if (dim == 0) return amps;
    cplx c = std::exp(-0.5 * std::norm(alpha));
    amps(0) = c;
    for (Eigen::Index n = 1; n < amps.size(); ++n) {
        c *= alpha / std::sqrt(static_cast<double>(n));
        amps(n) = c;
    }
    return amps;
}

}  // namespace detail

/// |alpha>, truncated at dim and renormalized. Throws when the truncated
/// Poisson tail exceeds 1e-10.
inline StateVector coherent(cplx alpha, std::size_t dim) {
    detail::require_dim_at_least(dim, 1, "coherent");
    if (poisson_tail(std::norm(alpha), dim) >= kCoherentTailBudget) {
        throw TruncationTooSmall("coherent: tail mass beyond dim " + std::to_string(dim) + " exceeds 1e-10",
                                 coherent_min_dim(alpha));
    }
    return normalize(StateVector(detail::coherent_amplitudes(alpha, dim)));
}

/// Squared norm of (a^dagger)^k |alpha>, equal to k! L_k(-|alpha|^2).
/// The series k! sum_j C(k, j) y^j / j! with y = |alpha|^2 has only positive
/// terms; std::laguerre rejects the negative argument.
inline double photon_added_norm2(cplx alpha, unsigned k) {
    const double y = std::norm(alpha);
    double term = 1.0;  // C(k, j) y^j / j!
    double sum = 1.0;
    for (unsigned j = 1; j <= k; ++j) {
        term *= y * static_cast<double>(k - j + 1) / (static_cast<double>(j) * static_cast<double>(j));
        sum += term;
    }
    return std::tgamma(static_cast<double>(k) + 1.0) * sum;
}

/// normalize((a^dagger)^k |alpha>).
inline StateVector photon_added_coherent(cplx alpha, unsigned k, std::size_t dim) {
    if (dim <= k) {
        throw InvalidDimension("photon_added_coherent: dim " + std::to_string(dim) + " must exceed k = " +
                               std::to_string(k));
    }
    const std::size_t base_dim = dim - k;
    if (poisson_tail(std::norm(alpha), base_dim) >= kCoherentTailBudget) {
        throw TruncationTooSmall("photon_added_coherent: coherent seed truncated too early",
                                 coherent_min_dim(alpha) + k);
    }
    const Vec seed = detail::coherent_amplitudes(alpha, base_dim);
    Vec amps = Vec::Zero(static_cast<Eigen::Index>(dim));
    for (Eigen::Index m = 0; m < seed.size(); ++m) {
        // sqrt((m+k)! / m!)
        double lift = 1.0;
        for (unsigned j = 1; j <= k; ++j) lift *= std::sqrt(static_cast<double>(m + j));
        amps(m + k) = seed(m) * lift;
    }
    return normalize(StateVector(std::move(amps)));
}

/// Normalized |0> + 3i gamma |1> + sqrt(6) i gamma |3>.
inline StateVector perturbative_cubic(double gamma, std::size_t dim) {
    detail::require_dim_at_least(dim, 4, "perturbative_cubic");
    Vec amps = Vec::Zero(static_cast<Eigen::Index>(dim));
    amps(0) = 1.0;
    amps(1) = cplx(0.0, 3.0 * gamma);
    amps(3) = cplx(0.0, std::sqrt(6.0) * gamma);
    return normalize(StateVector(std::move(amps)));
}

/// Cubic phase state projected onto the output truncation. The state is not
/// renormalized; `tail_mass` is what the projection discarded.
struct CubicState {
    StateVector state;
    double tail_mass = 0.0;
    std::size_t work_dim = 0;
};

/// The truncated x^3 spectrum distorts the top of the workspace; at gamma = 0.4
/// the first 64 amplitudes change by ~2e-2 going from 128 to 256 levels and by
/// ~2e-4 going from 512 to 1024.
inline std::size_t cubic_work_dim(std::size_t dim) { return std::max(4 * dim, kCubicMinWorkDim); }

/// exp(i gamma x_theta^3)|0> evaluated at a working dimension of max(4 dim, 512)
/// and projected to dim.
inline CubicState cubic_phase_state(double gamma, double theta, std::size_t dim,
                                    double tail_budget = kCubicTailBudget) {
    detail::require_dim_at_least(dim, 2, "cubic_phase_state");
    const std::size_t work = cubic_work_dim(dim);
    const Mat x = quadrature(theta, work).mat();
    const Mat x3 = x * x * x;
    // x^3 of a truncated Hermitian x is Hermitian up to rounding
    const FockOperator gen(0.5 * (x3 + x3.adjoint()));
    Vec e0 = Vec::Zero(static_cast<Eigen::Index>(work));
    e0(0) = 1.0;
    const Vec full = gamma == 0.0 ? e0 : HermitianExp(gen).apply_exp_i(gamma, e0);

    // Tail beyond every candidate cut, accumulated from the top.
    Eigen::VectorXd tail_from(full.size() + 1);
    tail_from(full.size()) = 0.0;
    for (Eigen::Index n = full.size() - 1; n >= 0; --n) tail_from(n) = tail_from(n + 1) + std::norm(full(n));

    const double tail = tail_from(static_cast<Eigen::Index>(dim));
    if (tail > tail_budget) {
        std::size_t required = work;
        for (Eigen::Index d = static_cast<Eigen::Index>(dim); d <= full.size(); ++d) {
            if (tail_from(d) <= tail_budget) {
                required = static_cast<std::size_t>(d);
                break;
            }
        }
        throw TruncationTooSmall("cubic_phase_state: tail mass " + std::to_string(tail) + " beyond dim " +
                                     std::to_string(dim) + " exceeds budget",
                                 required);
    }
    return CubicState{StateVector(full.head(static_cast<Eigen::Index>(dim))), tail, work};
}

}  // namespace cubic
