#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "cubic/gaussian.hpp"
#include "cubic/measurement.hpp"
#include "cubic/pipeline.hpp"
#include "cubic/states.hpp"
#include "oracles.hpp"
#include "postselection_check.hpp"

using namespace cubic;

namespace {

struct Stats {
    double mean_x = 0.0;
    double mean_p = 0.0;
    double var_x = 0.0;
    double var_p = 0.0;
};

Stats stats(const SampleBatch& b) {
    Stats s;
    const double n = static_cast<double>(b.samples.size());
    for (const auto& v : b.samples) {
        s.mean_x += v.x / n;
        s.mean_p += v.p / n;
    }
    for (const auto& v : b.samples) {
        s.var_x += (v.x - s.mean_x) * (v.x - s.mean_x) / (n - 1.0);
        s.var_p += (v.p - s.mean_p) * (v.p - s.mean_p) / (n - 1.0);
    }
    return s;
}

// E[min(1, (s/6)^k)] for heterodyne outcomes of coherent(alpha): s = x^2 + p^2
// with (x, p) ~ N((2 Re a, 2 Im a), 2 I). Polar midpoint quadrature.
double expected_acceptance(cplx alpha, unsigned k) {
    const double mx = 2.0 * alpha.real();
    const double mp = 2.0 * alpha.imag();
    const int nr = 4000;
    const int nt = 720;
    const double rmax = std::hypot(mx, mp) + 14.0;
    const double dr = rmax / nr;
    const double dt = 2.0 * kPi / nt;
    double acc = 0.0;
    for (int i = 0; i < nr; ++i) {
        const double r = (i + 0.5) * dr;
        for (int j = 0; j < nt; ++j) {
            const double t = (j + 0.5) * dt;
            const double x = r * std::cos(t);
            const double p = r * std::sin(t);
            const double dens = std::exp(-((x - mx) * (x - mx) + (p - mp) * (p - mp)) / 4.0) / (4.0 * kPi);
            acc += dens * std::min(1.0, std::pow(r * r / 6.0, k)) * r * dr * dt;
        }
    }
    return acc;
}

}  // namespace

TEST(QFunction, Examples) {
    EXPECT_NEAR(q_function(vacuum(16), 0.0), 1.0 / kPi, 1e-15);
    EXPECT_NEAR(q_function(vacuum(16), 1.0), std::exp(-1.0) / kPi, 1e-15);
    EXPECT_NEAR(q_function(DensityMatrix::pure(coherent(0.5, 32)), 0.5), 1.0 / kPi, 1e-13);
    EXPECT_NEAR(q_function(fock(1, 16), 0.0), 0.0, 1e-15);
}

TEST(QFunction, IntegratesToOne) {
    const StateVector c = coherent(1.0, 160);
    const double h = 0.05;
    double total = 0.0;
    for (double re = -6.0; re <= 6.0 + 1e-9; re += h)
        for (double im = -6.0; im <= 6.0 + 1e-9; im += h) total += q_function(c, cplx(re, im)) * h * h;
    EXPECT_NEAR(total, 1.0, 1e-3);
}

TEST(QFunction, ProbeTruncationChecked) {
    EXPECT_THROW(q_function(vacuum(8), 3.0), TruncationTooSmall);
}

TEST(QFunction, SpectralFormMatchesQuadraticForm) {
    const DensityMatrix rho = DensityMatrix::pure(photon_added_coherent(cplx(0.2, -0.9), 3, 48));
    const detail::SpectralForm form(rho.mat());
    for (cplx b : {cplx(0.0), cplx(0.4, -1.1), cplx(-1.3, 0.2)})
        EXPECT_NEAR(form.overlap(b) / kPi, q_function(rho, b), 1e-13) << b;
}

TEST(Heterodyne, VacuumStatistics) {
    const SampleBatch b = sample_heterodyne(vacuum(16), 100000, 11);
    const Stats s = stats(b);
    const double se = std::sqrt(2.0 / 1e5);
    EXPECT_NEAR(s.mean_x, 0.0, 3.0 * se);
    EXPECT_NEAR(s.mean_p, 0.0, 3.0 * se);
    EXPECT_NEAR(s.var_x, 2.0, 0.1);
    EXPECT_NEAR(s.var_p, 2.0, 0.1);
    EXPECT_EQ(b.accepted_count(), 0u);
}

TEST(Heterodyne, CoherentMean) {
    const SampleBatch b = sample_heterodyne(coherent(cplx(0.0, -0.97), 40), 100000, 5);
    const Stats s = stats(b);
    const double se = std::sqrt(2.0 / 1e5);
    EXPECT_NEAR(s.mean_x, 0.0, 3.0 * se);
    EXPECT_NEAR(s.mean_p, -1.94, 3.0 * se);
}

TEST(Heterodyne, SqueezedVarianceFollowsQCovariance) {
    // exp(r/2 (a^2 - a^dag^2)) squeezes x; heterodyne adds the vacuum variance 1
    const double r = 0.5;
    const StateVector v = apply(squeeze_op(r, 0.0, 60), vacuum(60));
    const SampleBatch b = sample_heterodyne(v, 100000, 3);
    const Stats s = stats(b);
    const double vx = std::exp(-2.0 * r) + 1.0;
    const double vp = std::exp(2.0 * r) + 1.0;
    EXPECT_NEAR(s.var_x, vx, 0.05 * vx);
    EXPECT_NEAR(s.var_p, vp, 0.05 * vp);
}

TEST(Heterodyne, DeterministicAndSeedDependent) {
    const StateVector c = coherent(cplx(0.3, 0.1), 32);
    const SampleBatch a = sample_heterodyne(c, 500, 42);
    const SampleBatch b = sample_heterodyne(c, 500, 42);
    const SampleBatch d = sample_heterodyne(c, 500, 43);
    EXPECT_EQ(a.samples, b.samples);
    EXPECT_NE(a.samples, d.samples);
}

TEST(Heterodyne, ChunkedRunMatchesSingleRun) {
    const StateVector c = coherent(0.7, 32);
    const SampleBatch whole = sample_heterodyne(c, 300, 9);
    SamplingOptions opts;
    const SampleBatch first = sample_heterodyne(c, 120, 9, {}, opts);
    opts.first_index = 120;
    const SampleBatch second = sample_heterodyne(c, 180, 9, {}, opts);
    for (std::size_t i = 0; i < 120; ++i) EXPECT_EQ(whole.samples[i], first.samples[i]);
    for (std::size_t i = 0; i < 180; ++i) EXPECT_EQ(whole.samples[120 + i], second.samples[i]);
}

TEST(Heterodyne, RejectsZeroCount) { EXPECT_THROW(sample_heterodyne(vacuum(4), 0, 1), SamplingError); }

TEST(Acceptance, Examples) {
    EXPECT_NEAR(acceptance_probability(std::sqrt(6.0), 0.0, 3), 1.0, 1e-14);
    EXPECT_DOUBLE_EQ(acceptance_probability(1.0, 1.0, 3), 1.0 / 27.0);
    EXPECT_EQ(acceptance_probability(3.0, 0.0, 3), 1.0);
    EXPECT_EQ(acceptance_probability(0.0, 0.0, 3), 0.0);
    EXPECT_EQ(acceptance_probability(0.0, 0.0, 0), 1.0);
    EXPECT_EQ(acceptance_probability(1.3, -0.4, 0), 1.0);
}

TEST(Acceptance, BoundedContinuousMonotone) {
    for (unsigned k : {1u, 2u, 3u, 5u}) {
        double prev = -1.0;
        for (int i = 0; i <= 400; ++i) {
            const double r = 0.01 * i;
            const double v = acceptance_probability(r, 0.0, k);
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
            EXPECT_GE(v, prev);
            prev = v;
        }
        const double edge = std::sqrt(6.0);
        EXPECT_NEAR(acceptance_probability(edge - 1e-9, 0.0, k), acceptance_probability(edge + 1e-9, 0.0, k), 1e-8);
    }
}

TEST(Postselect, KZeroAcceptsEverything) {
    const SampleBatch b = sample_heterodyne(vacuum(8), 1000, 2);
    const SampleBatch s = postselect(b, 0, 17);
    EXPECT_EQ(s.accepted_count(), 1000u);
    EXPECT_EQ(s.photons_added, 0);
}

TEST(Postselect, ReproducibleAndPrefixStable) {
    const SampleBatch b = sample_heterodyne(coherent(0.5, 32), 2000, 4);
    const SampleBatch s1 = postselect(b, 3, 99);
    const SampleBatch s2 = postselect(b, 3, 99);
    EXPECT_EQ(s1.samples, s2.samples);
    SampleBatch head = b;
    head.samples.resize(700);
    const SampleBatch sh = postselect(head, 3, 99);
    for (std::size_t i = 0; i < 700; ++i) EXPECT_EQ(sh.samples[i], s1.samples[i]);
    // positions are untouched; only the flags change
    for (std::size_t i = 0; i < b.samples.size(); ++i) {
        EXPECT_EQ(s1.samples[i].x, b.samples[i].x);
        EXPECT_EQ(s1.samples[i].p, b.samples[i].p);
    }
}

TEST(Postselect, VacuumAcceptanceRate) {
    const std::size_t n = 200000;
    const SampleBatch b = postselect(sample_heterodyne(vacuum(16), n, 21), 3, 22);
    const double expect = expected_acceptance(0.0, 3);
    const double rate = static_cast<double>(b.accepted_count()) / n;
    EXPECT_NEAR(rate, expect, 4.0 * std::sqrt(expect * (1.0 - expect) / n));
}

TEST(Postselect, CoherentAcceptanceRateMatchesRule) {
    const cplx alpha(0.0, -0.97);
    const std::size_t n = 200000;
    const SampleBatch b = simulate_raw(alpha, 3, 40, n, 8);
    const double expect = expected_acceptance(alpha, 3);
    const double rate = static_cast<double>(b.accepted_count()) / n;
    EXPECT_NEAR(rate, expect, 4.0 * std::sqrt(expect * (1.0 - expect) / n));
}

TEST(Postselect, AcceptedHistogramFollowsPhotonAddedQ) {
    const check::ChiSquare r = check::postselected_histogram(cplx(0.0, -0.97), 3, 200000, 31);
    EXPECT_GT(r.in_region, 1000u);
    EXPECT_LT(std::abs(r.z), 4.0) << "chi2 " << r.chi2 << " dof " << r.dof;
}

TEST(Pipeline, UntilAcceptedIsPrefixOfRawRun) {
    const cplx alpha(0.2, -0.5);
    const SampleBatch target = simulate_until_accepted(alpha, 2, 32, 150, 77, 64);
    EXPECT_EQ(target.accepted_count(), 150u);
    EXPECT_TRUE(target.samples.back().accepted);
    const SampleBatch raw = simulate_raw(alpha, 2, 32, target.samples.size(), 77);
    EXPECT_EQ(raw.samples, target.samples);
}

TEST(Pipeline, KZeroAcceptsEveryRawSample) {
    const SampleBatch b = simulate_until_accepted(0.4, 0, 32, 500, 3);
    EXPECT_EQ(b.samples.size(), 500u);
    EXPECT_EQ(b.accepted_count(), 500u);
}

TEST(Pipeline, SubSeedsDiffer) {
    EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
    EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
    EXPECT_EQ(derive_seed(5, 3), derive_seed(5, 3));
}

TEST(Homodyne, WavefunctionsMatchHermiteForm) {
    for (double x : {-2.3, 0.0, 0.7, 3.1}) {
        const Eigen::VectorXd psi = fock_wavefunctions(x, 30);
        for (unsigned n = 0; n < 30; ++n) EXPECT_NEAR(psi(n), oracle::fock_wavefunction(n, x), 1e-12) << n << " " << x;
    }
}

TEST(Homodyne, MarginalExamples) {
    const DensityMatrix vac = DensityMatrix::pure(vacuum(16));
    EXPECT_NEAR(homodyne_marginal(vac, 0.0), 1.0 / std::sqrt(2.0 * kPi), 1e-14);
    EXPECT_NEAR(homodyne_marginal(DensityMatrix::pure(fock(1, 16)), 0.0), 0.0, 1e-15);
    // integrates to one
    const DensityMatrix c = DensityMatrix::pure(photon_added_coherent(cplx(0.3, 0.4), 2, 48));
    double total = 0.0;
    for (double x = -12.0; x <= 12.0; x += 0.01) total += homodyne_marginal(c, x) * 0.01;
    EXPECT_NEAR(total, 1.0, 1e-8);
}

TEST(Homodyne, SampleMoments) {
    const std::size_t n = 50000;
    const auto v = sample_homodyne(DensityMatrix::pure(vacuum(16)), 0.0, n, 1);
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double var = 0.0;
    for (double x : v) var += (x - m) * (x - m) / (n - 1.0);
    EXPECT_NEAR(m, 0.0, 3.0 / std::sqrt(static_cast<double>(n)));
    EXPECT_NEAR(var, 1.0, 0.05);

    const auto c = sample_homodyne(DensityMatrix::pure(coherent(1.0, 32)), 0.0, n, 2);
    EXPECT_NEAR(std::accumulate(c.begin(), c.end(), 0.0) / n, 2.0, 3.0 / std::sqrt(static_cast<double>(n)));
    // theta = pi/2 measures p, where coherent(1) has mean 0
    const auto q = sample_homodyne(DensityMatrix::pure(coherent(1.0, 32)), kPi / 2.0, n, 3);
    EXPECT_NEAR(std::accumulate(q.begin(), q.end(), 0.0) / n, 0.0, 3.0 / std::sqrt(static_cast<double>(n)));
}
