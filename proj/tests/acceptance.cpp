// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "cubic/cubic.hpp"
#include "postselection_check.hpp"

using namespace cubic;

namespace {

constexpr std::uint64_t kSeed = 1;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

DensityMatrix pure(const StateVector& s) { return DensityMatrix::pure(normalize(s)); }

Outcome operator_identity() {
    const Mat x = quadrature(0.0, 8).mat();
    const Vec out = x * x * x * vacuum(8).amps();
    Vec expect = Vec::Zero(8);
    expect(1) = 3.0;
    expect(3) = std::sqrt(6.0);
    const double dev = (out - expect).cwiseAbs().maxCoeff();
    return {dev < 1e-12, "max deviation " + num(dev)};
}

double headline_f = 0.0;
double baseline_f = 0.0;

Outcome headline_fidelity() {
    headline_f = orbit_fidelity(pure(photon_added_coherent(cplx(0.0, -0.97), 3, 64)), 0.4, 0.0).fidelity;
    return {headline_f >= 0.943, "F = " + num(headline_f)};
}

Outcome weak_point() {
    const double f = orbit_fidelity(pure(photon_added_coherent(cplx(0.0, -1.47), 3, 64)), 0.1, 0.0).fidelity;
    return {f >= 0.995, "F = " + num(f)};
}

Outcome gaussian_baseline() {
    baseline_f = best_gaussian_fidelity(0.4, 0.0, 64).fidelity;
    return {std::abs(baseline_f - 0.82) <= 0.02, "F_gauss = " + num(baseline_f)};
}

Outcome ordering() {
    return {headline_f > baseline_f, num(headline_f) + " vs " + num(baseline_f)};
}

Outcome success_probability() {
    const cplx alpha(0.0, -0.97);
    const std::size_t raw = 10'000'000;
    const std::size_t chunk = 1'000'000;
    const DensityMatrix input = pure(coherent(alpha, 64));
    const std::uint64_t sample_seed = derive_seed(kSeed, 0);
    const std::uint64_t select_seed = derive_seed(kSeed, 1);
    std::size_t acc3 = 0;
    std::size_t acc4 = 0;
    for (std::size_t start = 0; start < raw; start += chunk) {
        SamplingOptions opts;
        opts.first_index = start;
        const SampleBatch part = sample_heterodyne(input, chunk, sample_seed, {}, opts);
        for (std::size_t i = 0; i < part.samples.size(); ++i) {
            const auto& s = part.samples[i];
            KeyedStream rng(select_seed, start + i);
            const double u = rng.uniform();
            acc3 += u < acceptance_probability(s.x, s.p, 3) ? 1 : 0;
            acc4 += u < acceptance_probability(s.x, s.p, 4) ? 1 : 0;
        }
    }
    const double rate3 = static_cast<double>(acc3) / raw;
    const double ratio = static_cast<double>(acc4) / static_cast<double>(acc3);
    const bool ok = rate3 >= 3e-4 && rate3 <= 3e-3 && ratio >= 1.0 / 30.0 && ratio <= 1.0 / 3.0;
    return {ok, "k=3 fraction " + num(rate3) + ", k=4/k=3 ratio " + num(ratio)};
}

Outcome postselection_equivalence() {
    const check::ChiSquare r = check::postselected_histogram(cplx(0.0, -0.97), 3, 1'000'000, kSeed);
    return {std::abs(r.z) <= 4.0,
            "chi2 " + num(r.chi2) + " on " + std::to_string(r.dof) + " dof, z = " + num(r.z, 3) + ", " +
                std::to_string(r.in_region) + " accepted in region"};
}

Outcome tomography_round_trip() {
    struct Case {
        std::string name;
        StateVector truth;
    };
    const std::vector<Case> cases = {{"vacuum", vacuum(64)},
                                     {"coherent(0.5)", coherent(0.5, 64)},
                                     {"fock(1)", fock(1, 64)},
                                     {"pacs(-0.97i,3)", photon_added_coherent(cplx(0.0, -0.97), 3, 64)}};
    bool ok = true;
    std::string detail;
    std::uint64_t stream = 10;
    for (const auto& c : cases) {
        const auto t0 = std::chrono::steady_clock::now();
        const SampleBatch batch = postselect(sample_heterodyne(c.truth, 100000, derive_seed(kSeed, stream)), 0,
                                             derive_seed(kSeed, stream + 1));
        stream += 2;
        const Reconstruction r = maxlik_reconstruct(batch, 40);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const double f = fidelity(r.rho, resize(c.truth, 40));
        ok = ok && f >= 0.99 && secs <= 300.0;
        detail += (detail.empty() ? "" : ", ") + c.name + " " + num(f) + " (" + num(secs, 3) + " s)";
    }
    return {ok, detail};
}

Outcome phase_correspondence() {
    const std::filesystem::path dir = std::filesystem::temp_directory_path() / "cubic_acceptance_phase";
    std::filesystem::remove_all(dir);
    std::ostringstream err;
    const int code = cli::run({"phase-sweep", "--amplitude", "1", "--seed", std::to_string(kSeed), "--out", dir.string()}, err);
    if (code != 0) return {false, "phase-sweep exited with " + std::to_string(code) + ": " + err.str()};
    const auto man = cli::json::parse(io::read_text(dir / "phase_sweep.manifest.json"));
    bool ok = man["results"]["pattern_ok"].get<bool>();
    std::string detail;
    for (const auto& row : man["results"]["rows"]) {
        const double f = row["F"].get<double>();
        ok = ok && f >= 0.92;
        detail += (detail.empty() ? "" : ", ") + std::string("theta ") + num(row["theta_best"].get<double>(), 4) +
                  " sign " + std::to_string(row["sign"].get<int>()) + " F " + num(f, 4);
    }
    std::filesystem::remove_all(dir);
    return {ok, detail};
}

std::string describe(const std::vector<Island>& list) {
    std::string s;
    for (const auto& i : list) s += "[" + std::to_string(i.start) + "," + std::to_string(i.end) + "]";
    return s;
}

Outcome island_structure() {
    const DensityMatrix rho = pure(photon_added_coherent(cplx(0.0, -0.97), 3, 64));
    const OrbitResult fit = orbit_fidelity(rho, 0.4, 0.0);
    const auto unwound = islands(photon_statistics(unwind(rho, fit.params, 128), 36));
    const auto cubic = islands(photon_statistics(cubic_phase_state(0.4, 0.0, 128, 1.0).state, 36));
    const bool ok = unwound.size() >= 2 && islands_match(unwound, cubic);
    return {ok, "unwound " + describe(unwound) + ", cubic " + describe(cubic)};
}

Outcome fock_limit() {
    const double f = fidelity(pure(photon_added_coherent(0.01, 3, 32)), fock(3, 32));
    return {f >= 0.999, "F = " + num(f, 8)};
}

Outcome wigner_suite() {
    const double w_vac = wigner_at(pure(vacuum(64)), 0.0, 0.0);
    const double w_one = wigner_at(pure(fock(1, 64)), 0.0, 0.0);
    const double target = 1.0 / (2.0 * kPi);
    double marginal_dev = 0.0;
    double norm_dev = 0.0;
    for (const DensityMatrix& rho : {pure(photon_added_coherent(cplx(0.0, -0.97), 3, 64)), pure(fock(3, 64)),
                                     pure(coherent(cplx(1.0, 0.5), 64))}) {
        const WignerGrid g = wigner(rho, WignerSpec{-8.0, 8.0, -8.0, 8.0, 0.05});
        for (std::size_t i = 0; i < g.x_axis.size(); ++i) {
            const double m = g.values.row(static_cast<Eigen::Index>(i)).sum() * 0.05;
            marginal_dev = std::max(marginal_dev, std::abs(m - homodyne_marginal(rho, g.x_axis[i])));
        }
        norm_dev = std::max(norm_dev, std::abs(g.integral() - 1.0));
    }
    const bool ok = std::abs(w_vac - target) <= 1e-6 && std::abs(w_one + target) <= 1e-6 && marginal_dev <= 1e-3 &&
                    norm_dev <= 1e-2;
    return {ok, "W_vac(0) " + num(w_vac, 10) + ", W_1(0) " + num(w_one, 10) + ", marginal dev " + num(marginal_dev, 3) +
                    ", normalization dev " + num(norm_dev, 3)};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"x^3 on vacuum", operator_identity},
        {"headline orbit fidelity >= 0.943", headline_fidelity},
        {"weak point orbit fidelity >= 0.995", weak_point},
        {"Gaussian baseline 0.82 +- 0.02", gaussian_baseline},
        {"orbit fidelity above Gaussian baseline", ordering},
        {"postselection success probability", success_probability},
        {"accepted histogram matches photon-added Q", postselection_equivalence},
        {"tomography round trip >= 0.99", tomography_round_trip},
        {"phase correspondence pattern", phase_correspondence},
        {"island structure", island_structure},
        {"Fock limit", fock_limit},
        {"Wigner invariants", wigner_suite},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
