#pragma once

// Single-mode Gaussian unitaries G = D(disp) S(r, phi) R(rot) and the
// coarse-to-fine grid search over the Gaussian orbit of a reference state.
//
// All three factors are built from two eigendecompositions plus diagonal
// phases:
//   S(r, phi)       = R(-phi/2) S(r, 0) R(phi/2),   S(r, 0) = exp(i r K),
//                     K = -i (a^2 - a^dagger^2) / 2
//   D(u e^{i chi})  = R(-chi) D(u) R(chi),          D(u) = exp(-i u p)
// with R(t) = exp(-i t n).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "cubic/fock.hpp"
#include "cubic/states.hpp"

namespace cubic {

/// Wrap an angle into (-pi, pi].
inline double wrap_angle(double angle) {
    double w = std::remainder(angle, 2.0 * kPi);
    if (w <= -kPi) w += 2.0 * kPi;
    return w;
}

struct GaussianParams {
    cplx disp{0.0, 0.0};
    double squeeze_r = 0.0;
    double squeeze_phi = 0.0;
    double rot = 0.0;

    /// Enforces squeeze_r >= 0 and angles in (-pi, pi]. S(-r, phi) = S(r, phi + pi).
    [[nodiscard]] GaussianParams canonical() const {
        GaussianParams out = *this;
        if (out.squeeze_r < 0.0) {
            out.squeeze_r = -out.squeeze_r;
            out.squeeze_phi += kPi;
        }
        out.squeeze_phi = wrap_angle(out.squeeze_phi);
        out.rot = wrap_angle(out.rot);
        return out;
    }

    [[nodiscard]] auto tuple() const {
        return std::make_tuple(disp.real(), disp.imag(), squeeze_r, squeeze_phi, rot);
    }

    friend bool operator==(const GaussianParams&, const GaussianParams&) = default;
};

// ---------------------------------------------------------------------------
// Truncation preconditions

/// Mass of the squeezed vacuum S(r)|0> at Fock levels >= dim.
inline double squeezed_vacuum_tail(double r, std::size_t dim) {
    const double t = std::tanh(std::abs(r));
    if (t == 0.0) return 0.0;
    const double log_c = -std::log(std::cosh(r));
    double tail = 0.0;
    for (std::size_t m = 0;; ++m) {
        const double n = 2.0 * static_cast<double>(m);
        const double md = static_cast<double>(m);
        // (tanh r)^{2m} (2m)! / (4^m (m!)^2) / cosh r
        const double term = std::exp(log_c + n * std::log(t) + std::lgamma(n + 1.0) - md * std::log(4.0) -
                                     2.0 * std::lgamma(md + 1.0));
        if (2 * m >= dim) {
            tail += term;
            if (term < 1e-20) break;
        }
        if (m > 200000) break;
    }
    return tail;
}

inline void check_displacement_truncation(cplx alpha, std::size_t dim) {
    if (poisson_tail(std::norm(alpha), dim) >= kCoherentTailBudget) {
        throw TruncationTooSmall("displacement: coherent tail beyond dim " + std::to_string(dim) + " exceeds 1e-10",
                                 coherent_min_dim(alpha));
    }
}

inline void check_squeeze_truncation(double r, std::size_t dim) {
    constexpr double budget = 1e-8;
    if (squeezed_vacuum_tail(r, dim) >= budget) {
        std::size_t need = dim;
        while (squeezed_vacuum_tail(r, need) >= budget) need += 2;
        throw TruncationTooSmall("squeeze: squeezed-vacuum tail beyond dim " + std::to_string(dim) + " exceeds 1e-8",
                                 need);
    }
}

// ---------------------------------------------------------------------------
// Gaussian unitaries on a fixed truncation

/// Caches the two eigendecompositions behind D and S at one truncation.
class GaussianEngine {
public:
    explicit GaussianEngine(std::size_t dim)
        : dim_(dim), momentum_(quadrature(kPi / 2.0, dim)), squeeze_(squeeze_generator(dim)) {}

    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }

    /// R(angle) v, diagonal.
    [[nodiscard]] Vec rotate(double angle, const Vec& v) const {
        Vec out(v.size());
        for (Eigen::Index n = 0; n < v.size(); ++n) out(n) = v(n) * std::polar(1.0, -angle * static_cast<double>(n));
        return out;
    }

    [[nodiscard]] Vec squeeze(double r, double phi, const Vec& v) const {
        if (r == 0.0) return v;
        return rotate(-phi / 2.0, squeeze_.apply_exp_i(r, rotate(phi / 2.0, v)));
    }

    [[nodiscard]] Vec displace(cplx alpha, const Vec& v) const {
        if (alpha == cplx(0.0, 0.0)) return v;
        const double u = std::abs(alpha);
        const double chi = std::arg(alpha);
        return rotate(-chi, momentum_.apply_exp_i(-u, rotate(chi, v)));
    }

    /// D(disp) S(r, phi) R(rot) v
    [[nodiscard]] Vec apply(const GaussianParams& g, const Vec& v) const {
        return displace(g.disp, squeeze(g.squeeze_r, g.squeeze_phi, rotate(g.rot, v)));
    }

    /// G^dagger v = R(-rot) S(r, phi + pi) D(-disp) v
    [[nodiscard]] Vec apply_adjoint(const GaussianParams& g, const Vec& v) const {
        return rotate(-g.rot, squeeze(g.squeeze_r, g.squeeze_phi + kPi, displace(-g.disp, v)));
    }

    /// D(disp)^dagger M for a block of columns (each column displaced by -disp).
    [[nodiscard]] Mat displace_adjoint_cols(cplx alpha, const Mat& cols) const {
        if (alpha == cplx(0.0, 0.0)) return cols;
        const double u = std::abs(alpha);
        const double chi = std::arg(alpha);
        const Vec pre = phase_diag(chi);
        const Vec post = phase_diag(-chi);
        const Eigen::VectorXd& lam = momentum_.eigenvalues();
        Vec ph(lam.size());
        for (Eigen::Index k = 0; k < lam.size(); ++k) ph(k) = std::polar(1.0, u * lam(k));
        const Mat& vecs = momentum_.eigenvectors();
        Mat tmp = vecs.adjoint() * (pre.asDiagonal() * cols);
        tmp = ph.asDiagonal() * tmp;
        return post.asDiagonal() * (vecs * tmp);
    }

    [[nodiscard]] Mat unitary(const GaussianParams& g) const {
        Mat out(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
        for (Eigen::Index c = 0; c < out.cols(); ++c) {
            Vec e = Vec::Zero(out.rows());
            e(c) = 1.0;
            out.col(c) = apply(g, e);
        }
        return out;
    }

private:
    static FockOperator squeeze_generator(std::size_t dim) {
        const Mat a = annihilation(dim).mat();
        const Mat a2 = a * a;
        const Mat ad2 = a2.adjoint();
        return FockOperator(cplx(0.0, -0.5) * (a2 - ad2));
    }

    [[nodiscard]] Vec phase_diag(double angle) const {
        Vec d(static_cast<Eigen::Index>(dim_));
        for (Eigen::Index n = 0; n < d.size(); ++n) d(n) = std::polar(1.0, -angle * static_cast<double>(n));
        return d;
    }

    std::size_t dim_;
    HermitianExp momentum_;
    HermitianExp squeeze_;
};

/// D(alpha) = exp(alpha a^dagger - alpha^* a).
inline FockOperator displacement_op(cplx alpha, std::size_t dim) {
    detail::require_dim_at_least(dim, 2, "displacement_op");
    check_displacement_truncation(alpha, dim);
    const Mat a = annihilation(dim).mat();
    const Mat gen = cplx(0.0, -1.0) * (alpha * a.adjoint() - std::conj(alpha) * a);
    return expm_hermitian(FockOperator(gen), 1.0);
}

/// S(r, phi) = exp((zeta^* a^2 - zeta a^dagger^2) / 2), zeta = r e^{i phi}.
inline FockOperator squeeze_op(double r, double phi, std::size_t dim) {
    detail::require_dim_at_least(dim, 2, "squeeze_op");
    check_squeeze_truncation(r, dim);
    const Mat a = annihilation(dim).mat();
    const Mat a2 = a * a;
    const cplx zeta = std::polar(r, phi);
    const Mat gen = cplx(0.0, -0.5) * (std::conj(zeta) * a2 - zeta * a2.adjoint());
    return expm_hermitian(FockOperator(gen), 1.0);
}

/// D(disp) S(r, phi) R(rot) as a unitary on the truncated space.
inline FockOperator gaussian_unitary(const GaussianParams& g, std::size_t dim) {
    return FockOperator(GaussianEngine(dim).unitary(g));
}

/// D(disp) S(r, phi) R(rot) |state>, evaluated with the truncated unitaries
/// at the state's own dimension.
inline StateVector apply_gaussian(const GaussianParams& g, const StateVector& state) {
    detail::require_dim_at_least(state.dim(), 2, "apply_gaussian");
    check_displacement_truncation(g.disp, state.dim());
    check_squeeze_truncation(g.squeeze_r, state.dim());
    return StateVector(GaussianEngine(state.dim()).apply(g, state.amps()));
}

/// G^dagger rho G on a truncation of max(out_dim, rho.dim); rho is zero-padded
/// when out_dim is larger.
inline DensityMatrix unwind(const DensityMatrix& rho, const GaussianParams& g, std::size_t out_dim = 0) {
    detail::require_dim_at_least(rho.dim(), 2, "unwind");
    const std::size_t dim = std::max(out_dim, rho.dim());
    const auto d = static_cast<Eigen::Index>(dim);
    Mat padded = Mat::Zero(d, d);
    padded.topLeftCorner(rho.mat().rows(), rho.mat().cols()) = rho.mat();
    const Mat u = GaussianEngine(dim).unitary(g);
    Mat out = u.adjoint() * padded * u;
    out = 0.5 * (out + out.adjoint()).eval();
    return DensityMatrix(std::move(out));
}

// ---------------------------------------------------------------------------
// Orbit grid search

/// Inclusive uniform axis lo, lo + step, ..., <= hi. A zero step or lo == hi
/// gives the single value lo.
struct GridAxis {
    double lo = 0.0;
    double hi = 0.0;
    double step = 0.0;

    [[nodiscard]] bool fixed() const noexcept { return step == 0.0 || lo == hi; }

    [[nodiscard]] std::vector<double> values() const {
        if (!std::isfinite(lo) || !std::isfinite(hi) || !std::isfinite(step)) {
            throw ConfigError("grid axis has non-finite bounds");
        }
        if (fixed()) return {lo};
        if (step < 0.0 || hi < lo) throw ConfigError("grid axis is empty (lo > hi or negative step)");
        std::vector<double> out;
        const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
        out.reserve(count);
        for (std::size_t i = 0; i < count; ++i) out.push_back(lo + static_cast<double>(i) * step);
        return out;
    }

    static GridAxis single(double value) { return GridAxis{value, value, 0.0}; }
};

struct SearchConfig {
    GridAxis disp_re{-3.0, 3.0, 0.25};
    GridAxis disp_im{-3.0, 3.0, 0.25};
    GridAxis squeeze_r{0.0, 1.5, 0.1};
    GridAxis squeeze_phi{-kPi + kPi / 8.0, kPi, kPi / 8.0};
    GridAxis rot{-kPi + kPi / 8.0, kPi, kPi / 8.0};
    int refinements = 4;
    /// Half-width of each refinement window, in units of the refined step.
    int refine_halfwidth = 2;

    /// Same grid with the rotation pinned at zero.
    [[nodiscard]] SearchConfig without_rotation() const {
        SearchConfig out = *this;
        out.rot = GridAxis::single(0.0);
        return out;
    }
};

struct OrbitResult {
    double fidelity = 0.0;
    GaussianParams params;
    /// Incumbent after the coarse pass and after each refinement.
    std::vector<double> pass_best;
    std::size_t evaluations = 0;
    /// Cubic-reference mass above the target truncation.
    double reference_tail = 0.0;
};

namespace detail {

/// Maximizes || target^dagger P G ref ||^2 over product grids of Gaussian
/// parameters, where target is a (dim x rank) factor with rho = target
/// target^dagger and ref lives on the engine's working truncation.
class OrbitSearch {
public:
    OrbitSearch(Mat target, Vec reference, std::size_t work_dim)
        : engine_(work_dim), reference_(std::move(reference)) {
        const auto w = static_cast<Eigen::Index>(work_dim);
        if (target.rows() > w || reference_.size() != w) throw DimensionMismatch(target.rows(), work_dim);
        target_ = Mat::Zero(w, target.cols());
        target_.topRows(target.rows()) = target;
    }

    OrbitResult run(const SearchConfig& cfg) {
        if (cfg.refinements < 0) throw ConfigError("refinements must be >= 0");
        std::array<GridAxis, 5> axes{cfg.disp_re, cfg.disp_im, cfg.squeeze_r, cfg.squeeze_phi, cfg.rot};
        std::array<std::vector<double>, 5> grid;
        for (std::size_t i = 0; i < 5; ++i) {
            grid[i] = axes[i].values();
            if (grid[i].empty()) throw ConfigError("search grid is empty");
        }
        OrbitResult res;
        res.fidelity = -std::numeric_limits<double>::infinity();
        evaluate(grid, res);
        res.pass_best.push_back(res.fidelity);

        std::array<double, 5> step{};
        for (std::size_t i = 0; i < 5; ++i) step[i] = axes[i].fixed() ? 0.0 : axes[i].step;
        for (int pass = 0; pass < cfg.refinements; ++pass) {
            const auto center = res.params.tuple();
            const std::array<double, 5> c{std::get<0>(center), std::get<1>(center), std::get<2>(center),
                                          std::get<3>(center), std::get<4>(center)};
            for (std::size_t i = 0; i < 5; ++i) {
                step[i] *= 0.5;
                grid[i].clear();
                if (step[i] == 0.0) {
                    grid[i].push_back(c[i]);
                    continue;
                }
                for (int j = -cfg.refine_halfwidth; j <= cfg.refine_halfwidth; ++j) {
                    const double v = c[i] + j * step[i];
                    if (i == 2 && v < 0.0) continue;  // squeeze magnitude stays non-negative
                    grid[i].push_back(v);
                }
            }
            evaluate(grid, res);
            res.pass_best.push_back(res.fidelity);
        }
        res.params = res.params.canonical();
        return res;
    }

private:
    void evaluate(const std::array<std::vector<double>, 5>& grid, OrbitResult& res) {
        const auto& re = grid[0];
        const auto& im = grid[1];
        const auto& rs = grid[2];
        const auto& phis = grid[3];
        const auto& rots = grid[4];

        // Columns S(r, phi) R(rot) ref for every non-displacement node.
        const auto ncol = static_cast<Eigen::Index>(rs.size() * phis.size() * rots.size());
        Mat shaped(reference_.size(), ncol);
        std::vector<std::array<double, 3>> labels;
        labels.reserve(static_cast<std::size_t>(ncol));
        Eigen::Index col = 0;
        for (double r : rs) {
            for (double phi : phis) {
                for (double rot : rots) {
                    shaped.col(col++) = engine_.squeeze(r, phi, engine_.rotate(rot, reference_));
                    labels.push_back({r, phi, rot});
                }
            }
        }

        for (double dr : re) {
            for (double di : im) {
                const cplx d(dr, di);
                // (D^dagger P^dagger target)^dagger (S R ref) = target^dagger P D S R ref
                const Mat pulled = engine_.displace_adjoint_cols(d, target_);
                const Mat overlaps = pulled.adjoint() * shaped;
                const Eigen::RowVectorXd fid = overlaps.cwiseAbs2().colwise().sum();
                for (Eigen::Index k = 0; k < fid.size(); ++k) {
                    const auto& lab = labels[static_cast<std::size_t>(k)];
                    GaussianParams g{d, lab[0], lab[1], lab[2]};
                    consider(fid(k), g, res);
                }
                res.evaluations += static_cast<std::size_t>(fid.size());
            }
        }
    }

    // Ties go to the lexicographically smallest parameter tuple.
    static void consider(double f, const GaussianParams& g, OrbitResult& res) {
        if (f > res.fidelity || (f == res.fidelity && g.tuple() < res.params.tuple())) {
            res.fidelity = f;
            res.params = g;
        }
    }

    GaussianEngine engine_;
    Mat target_;
    Vec reference_;
};

/// rho = L L^dagger with negligible eigenvalues dropped.
inline Mat density_factor(const DensityMatrix& rho) {
    const Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (rho.mat() + rho.mat().adjoint()));
    const Eigen::VectorXd& lam = es.eigenvalues();
    const double cut = 1e-14 * std::max(lam.maxCoeff(), 1e-300);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index k = lam.size() - 1; k >= 0; --k)
        if (lam(k) > cut) keep.push_back(k);
    Mat factor(rho.mat().rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j)
        factor.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(keep[j]) * std::sqrt(lam(keep[j]));
    return factor;
}

}  // namespace detail

/// Working truncation used for Gaussian operations inside the orbit search.
inline std::size_t orbit_work_dim(std::size_t dim) { return std::max<std::size_t>(2 * dim, 128); }

namespace detail {

/// exp(i gamma x_theta^3)|0> on the orbit workspace; no tail budget, the
/// discarded mass beyond `dim` is returned alongside.
inline std::pair<Vec, double> cubic_reference(double gamma, double theta, std::size_t dim) {
    const std::size_t work = orbit_work_dim(dim);
    CubicState c = cubic_phase_state(gamma, theta, work, 1.0);
    return {c.state.amps(), c.state.amps().tail(c.state.amps().size() - static_cast<Eigen::Index>(dim)).squaredNorm() +
                                c.tail_mass};
}

inline OrbitResult search_orbit(const DensityMatrix& rho, const Vec& reference, const SearchConfig& search) {
    OrbitSearch s(density_factor(rho), reference, static_cast<std::size_t>(reference.size()));
    return s.run(search);
}

}  // namespace detail

/// max over G of <psi_G|rho|psi_G>, psi_G = G exp(i gamma x_theta^3)|0>.
/// The cubic reference is built on the search workspace rather than at
/// rho.dim, so its tail above rho.dim does not limit the search.
inline OrbitResult orbit_fidelity(const DensityMatrix& rho, double gamma, double theta,
                                  const SearchConfig& search = {}) {
    const auto [ref, tail] = detail::cubic_reference(gamma, theta, rho.dim());
    OrbitResult res = detail::search_orbit(rho, ref, search);
    res.reference_tail = tail;
    return res;
}

/// max over pure Gaussian states D(alpha) S(r, phi)|0> of |<psi_G|psi_cubic>|^2.
inline OrbitResult best_gaussian_fidelity(double gamma, double theta, std::size_t dim,
                                          const SearchConfig& search = {}) {
    auto [ref, tail] = detail::cubic_reference(gamma, theta, dim);
    const auto work = static_cast<Eigen::Index>(ref.size());
    Vec vac = Vec::Zero(work);
    vac(0) = 1.0;
    detail::OrbitSearch s(ref, std::move(vac), static_cast<std::size_t>(work));
    // R(rot)|0> = |0>
    OrbitResult res = s.run(search.without_rotation());
    res.reference_tail = tail;
    return res;
}

}  // namespace cubic
