#pragma once

// End-to-end routes from a coherent input to a photon-added state: the ideal
// analytic construction, and the simulated experiment (heterodyne sampling,
// postselection, MaxLik reconstruction).

#include <cstddef>
#include <cstdint>
#include <string>

#include "cubic/measurement.hpp"
#include "cubic/states.hpp"
#include "cubic/tomography.hpp"

namespace cubic {

/// Independent sub-seed for stream `stream` of a run seeded with `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) { return KeyedStream(seed, stream)(); }

inline DensityMatrix ideal_photon_added(cplx alpha, unsigned k, std::size_t dim) {
    return DensityMatrix::pure(photon_added_coherent(alpha, k, dim));
}

inline std::string coherent_label(cplx alpha) {
    return "coherent:" + std::to_string(alpha.real()) + "," + std::to_string(alpha.imag());
}

/// Heterodyne samples of coherent(alpha) postselected with k, drawn in chunks
/// until `target_accepted` are accepted. The batch is cut right after the
/// sample that reaches the target.
inline SampleBatch simulate_until_accepted(cplx alpha, unsigned k, std::size_t dim, std::size_t target_accepted,
                                           std::uint64_t seed, std::size_t chunk = 200000,
                                           std::size_t max_raw = 2'000'000'000) {
    if (target_accepted < 1) throw ConfigError("accepted sample target must be >= 1");
    const DensityMatrix input = DensityMatrix::pure(coherent(alpha, dim));
    const std::uint64_t sample_seed = derive_seed(seed, 0);
    const std::uint64_t select_seed = derive_seed(seed, 1);
    SampleBatch all;
    all.seed = sample_seed;
    all.source = coherent_label(alpha);
    all.photons_added = static_cast<int>(k);
    all.postselect_seed = select_seed;
    std::size_t accepted = 0;
    while (accepted < target_accepted) {
        if (all.samples.size() >= max_raw) throw SamplingError("accepted-sample target not reached");
        SamplingOptions opts;
        opts.first_index = all.samples.size();
        const SampleBatch part = sample_heterodyne(input, chunk, sample_seed, {}, opts);
        for (std::size_t i = 0; i < part.samples.size() && accepted < target_accepted; ++i) {
            HeterodyneSample s = part.samples[i];
            KeyedStream rng(select_seed, all.samples.size());
            s.accepted = rng.uniform() < acceptance_probability(s.x, s.p, k);
            accepted += s.accepted ? 1 : 0;
            all.samples.push_back(s);
        }
    }
    return all;
}

/// Heterodyne sampling of coherent(alpha) followed by k-photon postselection
/// on a fixed number of raw samples.
inline SampleBatch simulate_raw(cplx alpha, unsigned k, std::size_t dim, std::size_t raw, std::uint64_t seed) {
    const DensityMatrix input = DensityMatrix::pure(coherent(alpha, dim));
    const SampleBatch batch = sample_heterodyne(input, raw, derive_seed(seed, 0), coherent_label(alpha));
    return postselect(batch, k, derive_seed(seed, 1));
}

struct FullPipelineResult {
    Reconstruction recon;
    std::size_t raw_samples = 0;
    std::size_t accepted = 0;
};

inline FullPipelineResult simulate_and_reconstruct(cplx alpha, unsigned k, std::size_t sample_dim,
                                                   std::size_t recon_dim, std::size_t target_accepted,
                                                   std::uint64_t seed, const MaxLikOptions& opts = {}) {
    const SampleBatch batch = simulate_until_accepted(alpha, k, sample_dim, target_accepted, seed);
    FullPipelineResult out{.recon = maxlik_reconstruct(batch, recon_dim, opts)};
    out.raw_samples = batch.samples.size();
    out.accepted = batch.accepted_count();
    return out;
}

}  // namespace cubic
