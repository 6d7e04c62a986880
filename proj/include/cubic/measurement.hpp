#pragma once

// Simulated measurement chain: heterodyne sampling from the Husimi Q-function,
// the k-photon postselection rule, and homodyne marginal sampling.
//
// Heterodyne outcomes are reported as (x, p) = (2 Re beta, 2 Im beta), so
// x^2 + p^2 = 4 |beta|^2 and a vacuum input gives Var(x) = 2.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "cubic/fock.hpp"
#include "cubic/states.hpp"

namespace cubic {

struct HeterodyneSample {
    double x = 0.0;
    double p = 0.0;
    bool accepted = false;

    [[nodiscard]] cplx beta() const { return {0.5 * x, 0.5 * p}; }
    friend bool operator==(const HeterodyneSample&, const HeterodyneSample&) = default;
};

struct SampleBatch {
    std::vector<HeterodyneSample> samples;
    std::uint64_t seed = 0;
    /// Human-readable descriptor of the generating state.
    std::string source;
    /// Photons added by postselection; -1 until postselect() has run.
    int photons_added = -1;
    std::uint64_t postselect_seed = 0;

    [[nodiscard]] std::size_t accepted_count() const {
        return static_cast<std::size_t>(
            std::count_if(samples.begin(), samples.end(), [](const HeterodyneSample& s) { return s.accepted; }));
    }
};

// ---------------------------------------------------------------------------
// Keyed random streams

/// SplitMix64 stream; satisfies UniformRandomBitGenerator. Seeding from
/// (seed, index) gives every sample its own stream, so results do not depend
/// on how an index range is partitioned or ordered.
class KeyedStream {
public:
    using result_type = std::uint64_t;

    KeyedStream(std::uint64_t seed, std::uint64_t index) : state_(mix(seed ^ mix(index + 0x9E3779B97F4A7C15ULL))) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix(state_);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

// ---------------------------------------------------------------------------
// Q-function

namespace detail {

/// rho = sum_i w_i |v_i><v_i| with negligible weights dropped; lets Q be
/// evaluated by Horner sums instead of a full quadratic form.
struct SpectralForm {
    std::vector<double> weights;
    /// Columns v_i(n) / sqrt(n!), ready for Horner evaluation in conj(beta).
    Mat scaled;

    explicit SpectralForm(const Mat& rho) {
        const Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (rho + rho.adjoint()));
        const Eigen::VectorXd& lam = es.eigenvalues();
        const double cut = 1e-15 * std::max(lam.maxCoeff(), 1e-300);
        std::vector<Eigen::Index> keep;
        for (Eigen::Index k = lam.size() - 1; k >= 0; --k)
            if (lam(k) > cut) keep.push_back(k);
        scaled.resize(rho.rows(), static_cast<Eigen::Index>(keep.size()));
        for (std::size_t j = 0; j < keep.size(); ++j) {
            weights.push_back(lam(keep[j]));
            scaled.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(keep[j]);
        }
        double inv_sqrt_fact = 1.0;
        for (Eigen::Index n = 0; n < scaled.rows(); ++n) {
            if (n > 0) inv_sqrt_fact /= std::sqrt(static_cast<double>(n));
            scaled.row(n) *= inv_sqrt_fact;
        }
    }

    explicit SpectralForm(const StateVector& psi) {
        weights.push_back(1.0);
        scaled = psi.amps();
        double inv_sqrt_fact = 1.0;
        for (Eigen::Index n = 0; n < scaled.rows(); ++n) {
            if (n > 0) inv_sqrt_fact /= std::sqrt(static_cast<double>(n));
            scaled(n, 0) *= inv_sqrt_fact;
        }
    }

    /// <beta|rho|beta> for the truncated rho (exact; no coherent-state cutoff).
    [[nodiscard]] double overlap(cplx beta) const {
        const cplx z = std::conj(beta);
        double acc = 0.0;
        for (Eigen::Index j = 0; j < scaled.cols(); ++j) {
            cplx s = 0.0;
            for (Eigen::Index n = scaled.rows() - 1; n >= 0; --n) s = s * z + scaled(n, j);
            acc += weights[static_cast<std::size_t>(j)] * std::norm(s);
        }
        return acc * std::exp(-std::norm(beta));
    }
};

inline void check_q_truncation(cplx beta, std::size_t dim) {
    if (poisson_tail(std::norm(beta), dim) >= kCoherentTailBudget) {
        throw TruncationTooSmall("q_function: coherent probe |beta> not representable at dim " + std::to_string(dim),
                                 coherent_min_dim(beta));
    }
}

}  // namespace detail

/// Q(beta) = <beta|rho|beta> / pi.
inline double q_function(const DensityMatrix& rho, cplx beta) {
    detail::check_q_truncation(beta, rho.dim());
    const Vec b = detail::coherent_amplitudes(beta, rho.dim());
    return std::max(0.0, b.dot(rho.mat() * b).real()) / kPi;
}

inline double q_function(const StateVector& psi, cplx beta) {
    detail::check_q_truncation(beta, psi.dim());
    const Vec b = detail::coherent_amplitudes(beta, psi.dim());
    return std::norm(b.dot(psi.amps())) / kPi;
}

// ---------------------------------------------------------------------------
// Postselection

/// ((x^2 + p^2) / 6)^k inside x^2 + p^2 <= 6, exactly 1 outside.
inline double acceptance_probability(double x, double p, unsigned k) {
    const double s = x * x + p * p;
    if (s > 6.0) return 1.0;
    return std::pow(s / 6.0, static_cast<double>(k));
}

/// Bernoulli acceptance per sample, keyed by (seed, sample index).
inline SampleBatch postselect(const SampleBatch& batch, unsigned k, std::uint64_t seed) {
    SampleBatch out = batch;
    out.photons_added = static_cast<int>(k);
    out.postselect_seed = seed;
    for (std::size_t i = 0; i < out.samples.size(); ++i) {
        auto& s = out.samples[i];
        KeyedStream rng(seed, i);
        s.accepted = rng.uniform() < acceptance_probability(s.x, s.p, k);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Heterodyne sampling

struct SamplingOptions {
    /// Envelope safety factor over the scanned density ratio.
    double envelope_margin = 1.2;
    std::size_t max_tries_per_sample = 1'000'000;
    /// Scan resolution per axis for the envelope constant.
    int scan_points = 241;
    /// Key of the first sample; lets a run be extended in chunks with the
    /// same outcome as one long run.
    std::uint64_t first_index = 0;
};

namespace detail {

struct QuadratureMoments {
    double mean_x = 0.0;
    double mean_p = 0.0;
    double mean_n = 0.0;
    /// Largest eigenvalue of the heterodyne-outcome covariance in (x, p).
    double max_q_variance = 2.0;
};

inline QuadratureMoments moments(const Mat& rho) {
    const auto dim = static_cast<std::size_t>(rho.rows());
    const Mat a = annihilation(std::max<std::size_t>(dim, 2)).mat().topLeftCorner(rho.rows(), rho.cols());
    const cplx ea = (rho * a).trace();
    const cplx ea2 = (rho * a * a).trace();
    const double en = (rho * a.adjoint() * a).trace().real();
    QuadratureMoments m;
    m.mean_x = 2.0 * ea.real();
    m.mean_p = 2.0 * ea.imag();
    m.mean_n = en;
    // Q covariance in (x, p) has eigenvalues 2 (<n> + 1 - |<a>|^2) +- 2 |<a^2> - <a>^2|
    const double sym = 2.0 * (en - std::norm(ea)) + 2.0;
    const cplx c2 = ea2 - ea * ea;
    const double aniso = 2.0 * std::abs(c2);
    m.max_q_variance = sym + aniso;
    return m;
}

}  // namespace detail

/// Draws heterodyne outcomes from Q(beta) by rejection sampling against an
/// isotropic Gaussian proposal centred on (<x>, <p>).
inline SampleBatch sample_heterodyne(const DensityMatrix& rho, std::size_t n, std::uint64_t seed,
                                     std::string source = {}, const SamplingOptions& opts = {}) {
    if (n < 1) throw SamplingError("sample_heterodyne: sample count must be >= 1");
    const detail::SpectralForm form(rho.mat());
    const auto mom = detail::moments(rho.mat());
    const double var = std::max(2.0 * (1.0 + mom.mean_n), 2.0 * mom.max_q_variance);
    const double sd = std::sqrt(var);

    // density of (x, p) is Q(beta) / 4; proposal is N(mean, var I)
    auto target = [&](double x, double p) { return form.overlap(cplx(0.5 * x, 0.5 * p)) / (4.0 * kPi); };
    auto proposal = [&](double x, double p) {
        const double dx = x - mom.mean_x;
        const double dp = p - mom.mean_p;
        return std::exp(-(dx * dx + dp * dp) / (2.0 * var)) / (2.0 * kPi * var);
    };

    double ratio_max = 0.0;
    const double half = 6.0 * sd;
    for (int i = 0; i < opts.scan_points; ++i) {
        for (int j = 0; j < opts.scan_points; ++j) {
            const double x = mom.mean_x - half + 2.0 * half * i / (opts.scan_points - 1);
            const double p = mom.mean_p - half + 2.0 * half * j / (opts.scan_points - 1);
            ratio_max = std::max(ratio_max, target(x, p) / proposal(x, p));
        }
    }
    const double envelope = opts.envelope_margin * ratio_max;

    SampleBatch batch;
    batch.seed = seed;
    batch.source = std::move(source);
    batch.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        KeyedStream rng(seed, opts.first_index + i);
        std::normal_distribution<double> normal;
        std::size_t tries = 0;
        while (true) {
            if (++tries > opts.max_tries_per_sample) {
                throw SamplingError("sample_heterodyne: no acceptance after " +
                                    std::to_string(opts.max_tries_per_sample) + " proposals");
            }
            const double x = mom.mean_x + sd * normal(rng);
            const double p = mom.mean_p + sd * normal(rng);
            const double ratio = target(x, p) / (envelope * proposal(x, p));
            if (ratio > 1.0) {
                throw SamplingError("sample_heterodyne: proposal envelope violated at (" + std::to_string(x) + ", " +
                                    std::to_string(p) + ")");
            }
            if (rng.uniform() < ratio) {
                batch.samples[i] = HeterodyneSample{x, p, false};
                break;
            }
        }
    }
    return batch;
}

inline SampleBatch sample_heterodyne(const StateVector& psi, std::size_t n, std::uint64_t seed,
                                     std::string source = {}, const SamplingOptions& opts = {}) {
    return sample_heterodyne(DensityMatrix::pure(normalize(psi)), n, seed, std::move(source), opts);
}

// ---------------------------------------------------------------------------
// Homodyne

/// Position-representation Fock wavefunctions psi_n(x) in hbar = 2 units,
/// psi_0 = (2 pi)^{-1/4} e^{-x^2/4}, by the three-term recurrence
/// psi_{n+1} = (x psi_n - sqrt(n) psi_{n-1}) / sqrt(n+1).
inline Eigen::VectorXd fock_wavefunctions(double x, std::size_t dim) {
    Eigen::VectorXd psi(static_cast<Eigen::Index>(dim));
    if (dim == 0) return psi;
    psi(0) = std::pow(2.0 * kPi, -0.25) * std::exp(-0.25 * x * x);
    if (dim > 1) psi(1) = x * psi(0);
    for (Eigen::Index n = 1; n + 1 < psi.size(); ++n) {
        const double nd = static_cast<double>(n);
        psi(n + 1) = (x * psi(n) - std::sqrt(nd) * psi(n - 1)) / std::sqrt(nd + 1.0);
    }
    return psi;
}

/// <x|rho|x>, the amplitude-quadrature marginal.
inline double homodyne_marginal(const DensityMatrix& rho, double x) {
    const Eigen::VectorXd psi = fock_wavefunctions(x, rho.dim());
    const Vec v = psi.cast<cplx>();
    return std::max(0.0, v.dot(rho.mat() * v).real());
}

/// Samples of x_theta: rho is rotated by R(theta) and its x marginal sampled.
inline std::vector<double> sample_homodyne(const DensityMatrix& rho, double theta, std::size_t n, std::uint64_t seed,
                                           const SamplingOptions& opts = {}) {
    if (n < 1) throw SamplingError("sample_homodyne: sample count must be >= 1");
    const Mat rot = rotation_op(theta, rho.dim()).mat();
    const Mat turned = rot * rho.mat() * rot.adjoint();
    const auto mom = detail::moments(turned);
    const Mat x_op = quadrature(0.0, std::max<std::size_t>(rho.dim(), 2)).mat().topLeftCorner(turned.rows(), turned.cols());
    const double ex2 = (turned * x_op * x_op).trace().real();
    const double var_x = std::max(ex2 - mom.mean_x * mom.mean_x, 0.0);
    const double var = std::max(2.0 * (1.0 + mom.mean_n), 2.0 * var_x);
    const double sd = std::sqrt(var);

    const detail::SpectralForm form(turned);
    auto target = [&](double x) {
        const Eigen::VectorXd psi = fock_wavefunctions(x, static_cast<std::size_t>(turned.rows()));
        double acc = 0.0;
        // form.scaled carries 1/sqrt(n!); undo it for the position overlap
        double fact = 1.0;
        Vec col_overlap = Vec::Zero(form.scaled.cols());
        for (Eigen::Index k = 0; k < psi.size(); ++k) {
            if (k > 0) fact *= std::sqrt(static_cast<double>(k));
            col_overlap += psi(k) * fact * form.scaled.row(k).transpose();
        }
        for (Eigen::Index j = 0; j < col_overlap.size(); ++j)
            acc += form.weights[static_cast<std::size_t>(j)] * std::norm(col_overlap(j));
        return acc;
    };
    auto proposal = [&](double x) {
        const double d = x - mom.mean_x;
        return std::exp(-d * d / (2.0 * var)) / std::sqrt(2.0 * kPi * var);
    };

    double ratio_max = 0.0;
    const int pts = opts.scan_points * 8;
    for (int i = 0; i < pts; ++i) {
        const double x = mom.mean_x - 6.0 * sd + 12.0 * sd * i / (pts - 1);
        ratio_max = std::max(ratio_max, target(x) / proposal(x));
    }
    const double envelope = opts.envelope_margin * ratio_max;

    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        KeyedStream rng(seed, i);
        std::normal_distribution<double> normal;
        std::size_t tries = 0;
        while (true) {
            if (++tries > opts.max_tries_per_sample) throw SamplingError("sample_homodyne: no acceptance");
            const double x = mom.mean_x + sd * normal(rng);
            const double ratio = target(x) / (envelope * proposal(x));
            if (ratio > 1.0) throw SamplingError("sample_homodyne: proposal envelope violated");
            if (rng.uniform() < ratio) {
                out[i] = x;
                break;
            }
        }
    }
    return out;
}

}  // namespace cubic
