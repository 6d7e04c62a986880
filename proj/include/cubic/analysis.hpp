#pragma once

// Derived quantities: Wigner grids, fidelities, photon statistics and their
// island structure, Wigner negativity, and the cubic phase-angle fit.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "cubic/fock.hpp"
#include "cubic/gaussian.hpp"
#include "cubic/states.hpp"

namespace cubic {

// ---------------------------------------------------------------------------
// Wigner function

struct WignerGrid {
    std::vector<double> x_axis;
    std::vector<double> p_axis;
    /// values(i, j) = W(x_axis[i], p_axis[j])
    Eigen::MatrixXd values;

    [[nodiscard]] double cell_area() const {
        const double dx = x_axis.size() > 1 ? x_axis[1] - x_axis[0] : 1.0;
        const double dp = p_axis.size() > 1 ? p_axis[1] - p_axis[0] : 1.0;
        return dx * dp;
    }
    [[nodiscard]] double integral() const { return values.sum() * cell_area(); }
};

struct WignerSpec {
    double x_lo = -6.0;
    double x_hi = 6.0;
    double p_lo = -6.0;
    double p_hi = 6.0;
    double step = 0.06;
};

namespace detail {

inline std::vector<double> axis_points(double lo, double hi, double step) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !std::isfinite(step)) throw ConfigError("grid bounds must be finite");
    if (!(step > 0.0)) throw ConfigError("grid step must be positive");
    if (hi < lo) throw ConfigError("grid upper bound below lower bound");
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = lo + static_cast<double>(i) * step;
    return out;
}

/// W(x, p) of a Hermitian rho. With alpha = (x + i p) / 2 and y = 4|alpha|^2,
///   W = e^{-y/2} / (2 pi) sum_{m,d} c_d Re[rho_{m,m+d} (-1)^m (2 alpha)^d
///       sqrt(m! / (m+d)!) L_m^d(y)],  c_0 = 1, c_d = 2.
/// h_m = e^{-y/2} (2 alpha)^d sqrt(m!/(m+d)!) L_m^d(y) is carried by the
/// three-term recurrence
///   h_{m+1} = ((2m+1+d-y) h_m - sqrt(m (m+d)) h_{m-1}) / sqrt((m+1)(m+1+d)),
/// started from h_0 = e^{-y/2} (2 alpha)^d / sqrt(d!) evaluated in logs.
inline double wigner_point(const Mat& rho, double x, double p) {
    const auto dim = rho.rows();
    const cplx two_alpha(x, p);
    const double y = std::norm(two_alpha);
    const double log_r = y > 0.0 ? 0.5 * std::log(y) : 0.0;
    const double arg = std::arg(two_alpha);
    double total = 0.0;
    for (Eigen::Index d = 0; d < dim; ++d) {
        const double dd = static_cast<double>(d);
        cplx h0;
        if (d == 0) {
            h0 = std::exp(-0.5 * y);
        } else if (y == 0.0) {
            continue;  // (2 alpha)^d vanishes
        } else {
            const double mag = std::exp(-0.5 * y + dd * log_r - 0.5 * std::lgamma(dd + 1.0));
            h0 = std::polar(mag, dd * arg);
        }
        // rho_{m,m+d} h_m, real part; the (-1)^m sign folded in
        cplx h_prev = 0.0;
        cplx h = h0;
        double acc = 0.0;
        for (Eigen::Index m = 0; m + d < dim; ++m) {
            const double md = static_cast<double>(m);
            const double sign = (m % 2 == 0) ? 1.0 : -1.0;
            acc += sign * (rho(m, m + d) * h).real();
            const cplx h_next = ((2.0 * md + 1.0 + dd - y) * h - std::sqrt(md * (md + dd)) * h_prev) /
                                std::sqrt((md + 1.0) * (md + 1.0 + dd));
            h_prev = h;
            h = h_next;
        }
        total += (d == 0 ? 1.0 : 2.0) * acc;
    }
    return total / (2.0 * kPi);
}

}  // namespace detail

inline WignerGrid wigner(const DensityMatrix& rho, const WignerSpec& spec = {}) {
    WignerGrid g;
    g.x_axis = detail::axis_points(spec.x_lo, spec.x_hi, spec.step);
    g.p_axis = detail::axis_points(spec.p_lo, spec.p_hi, spec.step);
    g.values.resize(static_cast<Eigen::Index>(g.x_axis.size()), static_cast<Eigen::Index>(g.p_axis.size()));
    for (std::size_t i = 0; i < g.x_axis.size(); ++i)
        for (std::size_t j = 0; j < g.p_axis.size(); ++j)
            g.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                detail::wigner_point(rho.mat(), g.x_axis[i], g.p_axis[j]);
    return g;
}

inline WignerGrid wigner(const StateVector& psi, const WignerSpec& spec = {}) {
    return wigner(DensityMatrix::pure(normalize(psi)), spec);
}

inline double wigner_at(const DensityMatrix& rho, double x, double p) { return detail::wigner_point(rho.mat(), x, p); }

struct Negativity {
    double min_value = 0.0;
    double negative_volume = 0.0;
};

inline Negativity negativity(const WignerGrid& grid) {
    Negativity n;
    n.min_value = grid.values.size() ? grid.values.minCoeff() : 0.0;
    n.negative_volume = grid.values.cwiseMin(0.0).cwiseAbs().sum() * grid.cell_area();
    return n;
}

// ---------------------------------------------------------------------------
// Fidelity and photon statistics

/// <psi|rho|psi>. psi is used as given, so a truncated cubic state with
/// tail mass t caps the result at 1 - t.
inline double fidelity(const DensityMatrix& rho, const StateVector& psi) {
    detail::require_same_dim(rho.dim(), psi.dim());
    return std::max(0.0, psi.amps().dot(rho.mat() * psi.amps()).real());
}

inline double fidelity(const StateVector& a, const StateVector& b) { return std::norm(inner(a, b)); }

inline std::vector<double> photon_statistics(const DensityMatrix& rho, std::size_t n_max) {
    if (n_max >= rho.dim()) {
        throw OutOfRange("photon_statistics: n_max " + std::to_string(n_max) + " must be below dim " +
                         std::to_string(rho.dim()));
    }
    std::vector<double> p(n_max + 1);
    for (std::size_t n = 0; n <= n_max; ++n) p[n] = std::max(0.0, rho(n, n).real());
    return p;
}

inline std::vector<double> photon_statistics(const StateVector& psi, std::size_t n_max) {
    if (n_max >= psi.dim()) {
        throw OutOfRange("photon_statistics: n_max " + std::to_string(n_max) + " must be below dim " +
                         std::to_string(psi.dim()));
    }
    std::vector<double> p(n_max + 1);
    for (std::size_t n = 0; n <= n_max; ++n) p[n] = std::norm(psi[n]);
    return p;
}

struct Island {
    std::size_t start = 0;
    std::size_t end = 0;  // inclusive
    friend bool operator==(const Island&, const Island&) = default;
};

inline constexpr double kIslandThreshold = 1e-4;

/// Maximal runs of p_n above rel_threshold * max(p).
inline std::vector<Island> islands(const std::vector<double>& probs, double rel_threshold = kIslandThreshold) {
    if (!(rel_threshold > 0.0)) throw ConfigError("island threshold must be positive");
    std::vector<Island> out;
    if (probs.empty()) return out;
    const double cut = rel_threshold * *std::max_element(probs.begin(), probs.end());
    bool open = false;
    for (std::size_t n = 0; n < probs.size(); ++n) {
        if (probs[n] > cut) {
            if (!open) out.push_back({n, n});
            out.back().end = n;
            open = true;
        } else {
            open = false;
        }
    }
    return out;
}

/// Same island count and every start and end within `tol` indices.
inline bool islands_match(const std::vector<Island>& a, const std::vector<Island>& b, std::size_t tol = 1) {
    if (a.size() != b.size()) return false;
    auto close = [tol](std::size_t u, std::size_t v) { return (u > v ? u - v : v - u) <= tol; };
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!close(a[i].start, b[i].start) || !close(a[i].end, b[i].end)) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Phase fit

struct PhaseFit {
    /// Quadrature angle in [0, pi); (theta + pi, sign) is the same unitary as (theta, -sign).
    double theta = 0.0;
    int sign = 1;
    double fidelity = 0.0;
    GaussianParams params;
};

/// Best orbit fidelity over exp(i sign gamma x_theta^3), theta = k pi / 8.
/// The rotation factor is pinned to zero, since R(rot) would otherwise
/// absorb theta and leave the angle undetermined.
inline PhaseFit phase_fit(const DensityMatrix& rho, double gamma, const SearchConfig& search = {}) {
    const SearchConfig pinned = search.without_rotation();
    const auto [base, tail] = detail::cubic_reference(gamma, 0.0, rho.dim());
    (void)tail;
    PhaseFit best;
    best.fidelity = -1.0;
    for (int sign : {1, -1}) {
        const Vec signed_base = sign > 0 ? base : Vec(base.conjugate());
        for (int k = 0; k < 8; ++k) {
            const double theta = k * kPi / 8.0;
            // exp(i g x_theta^3)|0> = R(-theta) exp(i g x^3)|0>
            Vec ref(signed_base.size());
            for (Eigen::Index n = 0; n < ref.size(); ++n)
                ref(n) = signed_base(n) * std::polar(1.0, theta * static_cast<double>(n));
            const OrbitResult r = detail::search_orbit(rho, ref, pinned);
            if (r.fidelity > best.fidelity) best = PhaseFit{theta, sign, r.fidelity, r.params};
        }
    }
    return best;
}

}  // namespace cubic
