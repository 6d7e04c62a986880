#pragma once

// Histogram test of postselected heterodyne samples against the Q-function
// of the photon-added state, inside the region x^2 + p^2 <= 6 where the
// acceptance rule is the pure |beta|^{2k} weight.

#include <cmath>
#include <cstdint>
#include <vector>

#include "cubic/measurement.hpp"
#include "cubic/pipeline.hpp"
#include "cubic/states.hpp"

namespace check {

struct ChiSquare {
    double chi2 = 0.0;
    int dof = 0;
    double z = 0.0;  // (chi2 - dof) / sqrt(2 dof)
    std::size_t in_region = 0;
};

inline ChiSquare postselected_histogram(cubic::cplx alpha, unsigned k, std::size_t raw, std::uint64_t seed,
                                        double bin = 0.25, double range = 5.0, int sub = 20) {
    using namespace cubic;
    const std::size_t dim = 64;
    const SampleBatch batch = simulate_raw(alpha, k, dim, raw, seed);
    const int nb = static_cast<int>(std::lround(2.0 * range / bin));
    std::vector<double> observed(static_cast<std::size_t>(nb * nb), 0.0);
    std::size_t in_region = 0;
    for (const auto& s : batch.samples) {
        if (!s.accepted || s.x * s.x + s.p * s.p > 6.0) continue;
        const int i = static_cast<int>(std::floor((s.x + range) / bin));
        const int j = static_cast<int>(std::floor((s.p + range) / bin));
        if (i < 0 || j < 0 || i >= nb || j >= nb) continue;
        observed[static_cast<std::size_t>(i * nb + j)] += 1.0;
        ++in_region;
    }

    // expected mass per bin: midpoint rule on sub x sub cells, restricted to the region
    const StateVector target = photon_added_coherent(alpha, k, dim);
    std::vector<double> mass(observed.size(), 0.0);
    double total = 0.0;
    const double h = bin / sub;
    for (int i = 0; i < nb; ++i) {
        for (int j = 0; j < nb; ++j) {
            double acc = 0.0;
            for (int a = 0; a < sub; ++a) {
                for (int b = 0; b < sub; ++b) {
                    const double x = -range + i * bin + (a + 0.5) * h;
                    const double p = -range + j * bin + (b + 0.5) * h;
                    if (x * x + p * p > 6.0) continue;
                    const Vec c = cubic::detail::coherent_amplitudes(cplx(0.5 * x, 0.5 * p), dim);
                    acc += std::norm(c.dot(target.amps()));
                }
            }
            mass[static_cast<std::size_t>(i * nb + j)] = acc;
            total += acc;
        }
    }

    ChiSquare out;
    out.in_region = in_region;
    double pooled_o = 0.0;
    double pooled_e = 0.0;
    int used = 0;
    for (std::size_t b = 0; b < observed.size(); ++b) {
        const double e = static_cast<double>(in_region) * mass[b] / total;
        if (e <= 0.0) continue;
        if (e < 5.0) {
            pooled_o += observed[b];
            pooled_e += e;
            continue;
        }
        out.chi2 += (observed[b] - e) * (observed[b] - e) / e;
        ++used;
    }
    if (pooled_e > 0.0) {
        out.chi2 += (pooled_o - pooled_e) * (pooled_o - pooled_e) / pooled_e;
        ++used;
    }
    out.dof = used - 1;
    out.z = (out.chi2 - out.dof) / std::sqrt(2.0 * out.dof);
    return out;
}

}  // namespace check
