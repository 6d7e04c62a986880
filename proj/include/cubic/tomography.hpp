#pragma once

// Maximum-likelihood state reconstruction from heterodyne samples using the
// R rho R iteration with coherent-state projectors as POVM.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "cubic/fock.hpp"
#include "cubic/measurement.hpp"
#include "cubic/states.hpp"

namespace cubic {

struct MaxLikOptions {
    double bin_width = 0.1;
    /// Stop once the relative log-likelihood gain of one iteration drops below this.
    double tol = 1e-9;
    int max_iters = 2000;
    bool record_trace = false;
};

struct Reconstruction {
    DensityMatrix rho;
    int iterations = 0;
    double loglik = 0.0;
    bool converged = false;
    std::size_t bins = 0;
    std::size_t samples_used = 0;
    /// Log-likelihood after each iteration (index 0 is the starting point).
    std::vector<double> loglik_trace{};
};

/// Heterodyne outcomes coalesced on a square (x, p) grid; `beta` holds the
/// bin centres and `weight` the sample counts.
struct BinnedOutcomes {
    std::vector<cplx> beta;
    std::vector<double> weight;
    std::size_t total = 0;
};

inline BinnedOutcomes bin_outcomes(const SampleBatch& batch, double bin_width, bool accepted_only = true) {
    if (!(bin_width > 0.0) || !std::isfinite(bin_width)) throw ConfigError("bin width must be positive");
    std::map<std::pair<std::int64_t, std::int64_t>, double> counts;
    std::size_t total = 0;
    for (const auto& s : batch.samples) {
        if (accepted_only && !s.accepted) continue;
        const auto ix = static_cast<std::int64_t>(std::floor(s.x / bin_width));
        const auto ip = static_cast<std::int64_t>(std::floor(s.p / bin_width));
        counts[{ix, ip}] += 1.0;
        ++total;
    }
    BinnedOutcomes out;
    out.total = total;
    out.beta.reserve(counts.size());
    out.weight.reserve(counts.size());
    for (const auto& [key, w] : counts) {
        const double x = (static_cast<double>(key.first) + 0.5) * bin_width;
        const double p = (static_cast<double>(key.second) + 0.5) * bin_width;
        out.beta.emplace_back(0.5 * x, 0.5 * p);
        out.weight.push_back(w);
    }
    return out;
}

namespace detail {

inline constexpr double kProbFloor = 1e-300;

/// Columns <n|beta_j> for every bin.
inline Mat povm_columns(const BinnedOutcomes& bins, std::size_t dim) {
    Mat c(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(bins.beta.size()));
    for (std::size_t j = 0; j < bins.beta.size(); ++j)
        c.col(static_cast<Eigen::Index>(j)) = coherent_amplitudes(bins.beta[j], dim);
    return c;
}

/// p_j = <beta_j|rho|beta_j> / pi.
inline Eigen::VectorXd bin_probabilities(const Mat& rho, const Mat& povm) {
    const Mat rc = rho * povm;
    Eigen::VectorXd p(povm.cols());
    for (Eigen::Index j = 0; j < povm.cols(); ++j)
        p(j) = std::max(povm.col(j).dot(rc.col(j)).real() / kPi, kProbFloor);
    return p;
}

inline double weighted_loglik(const Eigen::VectorXd& p, const std::vector<double>& w) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < p.size(); ++j) acc += w[static_cast<std::size_t>(j)] * std::log(p(j));
    return acc;
}

}  // namespace detail

/// sum_j w_j log(<beta_j|rho|beta_j> / pi), probabilities floored at 1e-300.
inline double loglikelihood(const DensityMatrix& rho, const BinnedOutcomes& bins) {
    const Mat povm = detail::povm_columns(bins, rho.dim());
    return detail::weighted_loglik(detail::bin_probabilities(rho.mat(), povm), bins.weight);
}

inline double loglikelihood(const DensityMatrix& rho, const SampleBatch& batch, double bin_width = 0.1) {
    return loglikelihood(rho, bin_outcomes(batch, bin_width));
}

/// Reconstructs rho from the accepted samples, starting from I/dim and
/// iterating rho <- N[R rho R], R = sum_j w_j |beta_j><beta_j| / (pi p_j).
inline Reconstruction maxlik_reconstruct(const SampleBatch& batch, std::size_t dim, const MaxLikOptions& opts = {}) {
    detail::require_dim_at_least(dim, 1, "maxlik_reconstruct");
    if (opts.max_iters < 1) throw ConfigError("max_iters must be >= 1");
    if (!(opts.tol > 0.0)) throw ConfigError("tol must be positive");
    const BinnedOutcomes bins = bin_outcomes(batch, opts.bin_width);
    if (bins.total == 0) throw SamplingError("maxlik_reconstruct: no accepted samples");

    const auto d = static_cast<Eigen::Index>(dim);
    const Mat povm = detail::povm_columns(bins, dim);
    Mat rho = Mat::Identity(d, d) / static_cast<double>(dim);
    Eigen::VectorXd p = detail::bin_probabilities(rho, povm);
    double ll = detail::weighted_loglik(p, bins.weight);

    Reconstruction out{.rho = DensityMatrix(rho)};
    out.bins = bins.beta.size();
    out.samples_used = bins.total;
    if (opts.record_trace) out.loglik_trace.push_back(ll);

    Mat scaled(povm.rows(), povm.cols());
    for (int it = 1; it <= opts.max_iters; ++it) {
        // R = C diag(w / (pi p)) C^dagger, built as (C s)(C s)^dagger
        for (Eigen::Index j = 0; j < povm.cols(); ++j)
            scaled.col(j) = povm.col(j) * std::sqrt(bins.weight[static_cast<std::size_t>(j)] / (kPi * p(j)));
        Mat r = Mat::Zero(d, d);
        r.selfadjointView<Eigen::Lower>().rankUpdate(scaled);
        r.triangularView<Eigen::StrictlyUpper>() = r.adjoint();
        Mat next = r * rho * r;
        next = 0.5 * (next + next.adjoint()).eval();
        next /= next.trace().real();
        rho = std::move(next);

        p = detail::bin_probabilities(rho, povm);
        const double ll_next = detail::weighted_loglik(p, bins.weight);
        const double gain = (ll_next - ll) / std::abs(ll);
        ll = ll_next;
        out.iterations = it;
        if (opts.record_trace) out.loglik_trace.push_back(ll);
        if (gain < opts.tol) {
            out.converged = true;
            break;
        }
    }

    // clear rounding-level negative eigenvalues before validation
    const Eigen::SelfAdjointEigenSolver<Mat> es(rho);
    Eigen::VectorXd lam = es.eigenvalues();
    for (Eigen::Index k = 0; k < lam.size(); ++k)
        if (lam(k) < 0.0 && lam(k) > -1e-12) lam(k) = 0.0;
    Mat clean = es.eigenvectors() * lam.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
    clean = 0.5 * (clean + clean.adjoint()).eval();
    clean /= clean.trace().real();

    out.rho = DensityMatrix(std::move(clean));
    out.loglik = ll;
    return out;
}

}  // namespace cubic
