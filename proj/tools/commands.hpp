#pragma once

// Subcommands of the `cubic` tool. Each command resolves its configuration
// (defaults, then the --config document, then flags), writes its outputs and a
// manifest into --out, and returns a process exit code.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cubic/cubic.hpp"

namespace cubic::cli {

using json = io::json;
namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kConfigError = 2, kNumericalError = 3 };

struct Invocation {
    std::string command;
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> dim;
    std::string out = ".";
    json flags = json::object();
};

// ---------------------------------------------------------------------------
// Configuration

inline json search_defaults() { return io::search_json(SearchConfig{}); }

inline json defaults(const std::string& cmd) {
    if (cmd == "simulate") {
        return json{{"alpha", {0.0, -0.97}}, {"k", 3}, {"n", 100000}, {"seed", 1}, {"dim", 64}};
    }
    if (cmd == "reconstruct") {
        return json{{"samples", ""}, {"dim", 40}, {"bin_width", 0.1}, {"tol", 1e-9}, {"max_iters", 2000}};
    }
    if (cmd == "scan") {
        return json{{"gamma", 0.4},
                    {"theta", 0.0},
                    {"k", 3},
                    {"mode", "ideal"},
                    {"alpha_re", {{"lo", 0.0}, {"hi", 0.0}, {"step", 0.0}}},
                    {"alpha_im", {{"lo", -2.0}, {"hi", -0.2}, {"step", 0.05}}},
                    {"dim", 64},
                    {"recon_dim", 40},
                    {"accepted", 100000},
                    {"seed", 1},
                    {"bin_width", 0.1},
                    {"tol", 1e-9},
                    {"max_iters", 2000},
                    {"search", search_defaults()}};
    }
    if (cmd == "wigner") {
        return json{{"state", "vacuum"}, {"rho", ""},   {"dim", 64},  {"x_lo", -6.0},
                    {"x_hi", 6.0},       {"p_lo", -6.0}, {"p_hi", 6.0}, {"step", 0.06}};
    }
    if (cmd == "phase-sweep") {
        return json{{"gamma", 0.4},
                    {"amplitude", 1.0},
                    {"k", 3},
                    {"phases", {0.0, kPi / 2.0, kPi, 1.5 * kPi}},
                    {"mode", "ideal"},
                    {"dim", 64},
                    {"recon_dim", 40},
                    {"accepted", 100000},
                    {"seed", 1},
                    {"bin_width", 0.1},
                    {"tol", 1e-9},
                    {"max_iters", 2000},
                    {"search", search_defaults()}};
    }
    if (cmd == "photon-stats") {
        return json{{"state", "vacuum"},
                    {"rho", ""},
                    {"dim", 64},
                    {"n_max", 36},
                    {"unwind", false},
                    {"gamma", 0.4},
                    {"theta", 0.0},
                    {"threshold", kIslandThreshold},
                    {"search", search_defaults()}};
    }
    throw ConfigError("unknown command '" + cmd + "'");
}

/// Defaults, overlaid by the config document (or its section named after the
/// command), overlaid by flags.
inline json resolve(const Invocation& inv) {
    json cfg = defaults(inv.command);
    if (inv.config) {
        const json doc = io::parse_json(io::read_text(*inv.config), *inv.config);
        if (!doc.is_object()) throw ConfigError(*inv.config + ": top level must be an object");
        const json& src = doc.contains(inv.command) && doc[inv.command].is_object() ? doc[inv.command] : doc;
        for (const auto& [key, value] : src.items()) {
            if (!cfg.contains(key)) {
                throw ConfigError(*inv.config + ": unknown field '" + key + "' for command " + inv.command);
            }
            if (key == "search") {
                for (const auto& [sk, sv] : value.items()) {
                    if (!cfg["search"].contains(sk)) throw ConfigError(*inv.config + ": unknown field 'search." + sk + "'");
                    cfg["search"][sk] = sv;
                }
            } else {
                cfg[key] = value;
            }
        }
    }
    for (const auto& [key, value] : inv.flags.items()) cfg[key] = value;
    if (inv.seed && cfg.contains("seed")) cfg["seed"] = *inv.seed;
    if (inv.dim) cfg["dim"] = *inv.dim;
    return cfg;
}

template <class T>
T field(const json& cfg, const std::string& key) {
    try {
        return cfg.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("field '" + key + "': " + e.what());
    }
}

inline std::size_t count_field(const json& cfg, const std::string& key, std::size_t min = 1) {
    const auto v = field<std::int64_t>(cfg, key);
    if (v < static_cast<std::int64_t>(min)) {
        throw ConfigError("field '" + key + "' must be >= " + std::to_string(min));
    }
    return static_cast<std::size_t>(v);
}

inline unsigned photons_field(const json& cfg) { return static_cast<unsigned>(count_field(cfg, "k", 0)); }

inline cplx alpha_field(const json& cfg) {
    const auto v = field<std::vector<double>>(cfg, "alpha");
    if (v.size() != 2) throw ConfigError("field 'alpha': expected [re, im]");
    return {v[0], v[1]};
}

inline MaxLikOptions maxlik_fields(const json& cfg) {
    MaxLikOptions o;
    o.bin_width = field<double>(cfg, "bin_width");
    o.tol = field<double>(cfg, "tol");
    o.max_iters = static_cast<int>(count_field(cfg, "max_iters"));
    return o;
}

inline bool full_mode(const json& cfg) {
    const auto mode = field<std::string>(cfg, "mode");
    if (mode != "ideal" && mode != "full") throw ConfigError("field 'mode': expected 'ideal' or 'full'");
    return mode == "full";
}

inline json manifest(const std::string& cmd, const json& cfg) {
    json m;
    m["tool"] = "cubic";
    m["version"] = io::kToolVersion;
    m["command"] = cmd;
    m["config"] = cfg;
    m["seed"] = cfg.contains("seed") ? cfg["seed"] : json(nullptr);
    m["inputs"] = json::object();
    m["outputs"] = json::array();
    m["results"] = json::object();
    return m;
}

inline void emit(const fs::path& dir, const std::string& name, const std::string& text, json& man) {
    io::write_text(dir / name, text);
    man["outputs"].push_back(name);
}

/// A state from either `rho` (density JSON path) or `state` (spec string).
struct Source {
    std::optional<StateVector> pure;
    DensityMatrix rho;
    std::string hash;
    std::string label;
};

inline Source load_source(const json& cfg, json& man) {
    const auto rho_path = field<std::string>(cfg, "rho");
    if (!rho_path.empty()) {
        DensityMatrix rho = io::read_density(rho_path);
        const std::string h = io::hash_file(rho_path);
        man["inputs"][rho_path] = h;
        return Source{std::nullopt, std::move(rho), h, rho_path};
    }
    const auto spec = field<std::string>(cfg, "state");
    const std::size_t dim = count_field(cfg, "dim", 2);
    StateVector psi = io::parse_state(spec, dim);
    DensityMatrix rho = DensityMatrix::pure(normalize(psi));
    const std::string h = io::hash_matrix(psi.amps());
    return Source{std::move(psi), std::move(rho), h, spec};
}

// ---------------------------------------------------------------------------
// Commands

inline int cmd_simulate(const json& cfg, const fs::path& out) {
    json man = manifest("simulate", cfg);
    const cplx alpha = alpha_field(cfg);
    const unsigned k = photons_field(cfg);
    const std::size_t n = count_field(cfg, "n");
    const auto seed = field<std::uint64_t>(cfg, "seed");
    const std::size_t dim = count_field(cfg, "dim", 2);

    const SampleBatch batch = simulate_raw(alpha, k, dim, n, seed);
    emit(out, "samples.csv", io::samples_csv(batch), man);
    const std::size_t acc = batch.accepted_count();
    man["results"] = {{"source", batch.source},
                      {"raw_samples", n},
                      {"accepted", acc},
                      {"success_probability", static_cast<double>(acc) / static_cast<double>(n)}};
    io::write_json(out / "samples.manifest.json", man);
    return kOk;
}

inline int cmd_reconstruct(const json& cfg, const fs::path& out) {
    json man = manifest("reconstruct", cfg);
    const auto path = field<std::string>(cfg, "samples");
    if (path.empty()) throw ConfigError("field 'samples': a sample CSV path is required");
    const std::size_t dim = count_field(cfg, "dim");
    const MaxLikOptions opts = maxlik_fields(cfg);

    const std::string text = io::read_text(path);
    man["inputs"][path] = io::hash_string(text);
    const SampleBatch batch = io::parse_samples_csv(text, path);
    if (batch.accepted_count() == 0) throw ConfigError(path + ": no accepted samples");

    const Reconstruction r = maxlik_reconstruct(batch, dim, opts);
    emit(out, "rho.json", io::density_json(r.rho).dump() + "\n", man);
    man["results"] = {{"iterations", r.iterations},
                      {"loglik", r.loglik},
                      {"converged", r.converged},
                      {"bins", r.bins},
                      {"samples_used", r.samples_used}};
    io::write_json(out / "rho.manifest.json", man);
    return r.converged ? kOk : kNumericalError;
}

namespace detail {

struct PointState {
    DensityMatrix rho;
    json info;
    bool converged = true;
};

inline PointState point_state(const json& cfg, cplx alpha, unsigned k, std::uint64_t seed) {
    const std::size_t dim = count_field(cfg, "dim", 2);
    if (!full_mode(cfg)) return PointState{ideal_photon_added(alpha, k, dim), json::object()};
    const FullPipelineResult f = simulate_and_reconstruct(alpha, k, dim, count_field(cfg, "recon_dim", 2),
                                                          count_field(cfg, "accepted"), seed, maxlik_fields(cfg));
    json info = {{"raw_samples", f.raw_samples},
                 {"accepted", f.accepted},
                 {"iterations", f.recon.iterations},
                 {"loglik", f.recon.loglik},
                 {"converged", f.recon.converged}};
    return PointState{f.recon.rho, std::move(info), f.recon.converged};
}

}  // namespace detail

inline int cmd_scan(const json& cfg, const fs::path& out) {
    json man = manifest("scan", cfg);
    const auto gamma = field<double>(cfg, "gamma");
    const auto theta = field<double>(cfg, "theta");
    const unsigned k = photons_field(cfg);
    const auto seed = field<std::uint64_t>(cfg, "seed");
    const std::size_t dim = count_field(cfg, "dim", 2);
    const SearchConfig search = io::search_from_json(cfg.at("search"));
    const auto re = io::axis_from_json(cfg.at("alpha_re"), "alpha_re").values();
    const auto im = io::axis_from_json(cfg.at("alpha_im"), "alpha_im").values();
    (void)full_mode(cfg);

    const OrbitResult base = best_gaussian_fidelity(gamma, theta, dim, search);
    man["results"]["gaussian_baseline"] = {{"fidelity", base.fidelity}, {"params", io::params_json(base.params)}};

    std::string csv = "re_alpha,im_alpha,F\n";
    json points = json::array();
    bool all_converged = true;
    std::uint64_t index = 0;
    for (double a_re : re) {
        for (double a_im : im) {
            const cplx alpha(a_re, a_im);
            auto st = detail::point_state(cfg, alpha, k, derive_seed(seed, index++));
            const OrbitResult r = orbit_fidelity(st.rho, gamma, theta, search);
            all_converged = all_converged && st.converged;
            csv += io::fmt(a_re) + ',' + io::fmt(a_im) + ',' + io::fmt(r.fidelity) + '\n';
            json p = {{"re_alpha", a_re}, {"im_alpha", a_im}, {"F", r.fidelity}, {"params", io::params_json(r.params)}};
            if (!st.info.empty()) p["pipeline"] = st.info;
            points.push_back(std::move(p));
        }
    }
    emit(out, "scan.csv", csv, man);
    man["results"]["points"] = std::move(points);
    io::write_json(out / "scan.manifest.json", man);
    return all_converged ? kOk : kNumericalError;
}

inline int cmd_wigner(const json& cfg, const fs::path& out) {
    json man = manifest("wigner", cfg);
    WignerSpec spec;
    spec.x_lo = field<double>(cfg, "x_lo");
    spec.x_hi = field<double>(cfg, "x_hi");
    spec.p_lo = field<double>(cfg, "p_lo");
    spec.p_hi = field<double>(cfg, "p_hi");
    spec.step = field<double>(cfg, "step");
    const Source src = load_source(cfg, man);
    const WignerGrid grid = wigner(src.rho, spec);
    emit(out, "wigner.csv", io::wigner_csv(grid), man);
    const Negativity neg = negativity(grid);
    man["results"] = {{"source", src.label},
                      {"source_hash", src.hash},
                      {"bounds", {{"x", {spec.x_lo, spec.x_hi}}, {"p", {spec.p_lo, spec.p_hi}}}},
                      {"step", spec.step},
                      {"points", {grid.x_axis.size(), grid.p_axis.size()}},
                      {"integral", grid.integral()},
                      {"min_value", neg.min_value},
                      {"negative_volume", neg.negative_volume}};
    io::write_json(out / "wigner.manifest.json", man);
    return kOk;
}

/// Expected cubic quadrature for input phase phi: exp(i gamma x_theta^3) with
/// theta = phi + pi/2, reported in the canonical form theta in [0, pi).
inline std::pair<double, int> expected_quadrant(double phi) {
    double theta = std::fmod(phi + kPi / 2.0, 2.0 * kPi);
    if (theta < 0.0) theta += 2.0 * kPi;
    int sign = 1;
    if (theta >= kPi - 1e-12) {
        theta -= kPi;
        sign = -1;
    }
    if (std::abs(theta) < 1e-12) theta = 0.0;
    return {theta, sign};
}

inline int cmd_phase_sweep(const json& cfg, const fs::path& out) {
    json man = manifest("phase-sweep", cfg);
    const auto gamma = field<double>(cfg, "gamma");
    const auto amp = field<double>(cfg, "amplitude");
    const unsigned k = photons_field(cfg);
    const auto phases = field<std::vector<double>>(cfg, "phases");
    const auto seed = field<std::uint64_t>(cfg, "seed");
    const SearchConfig search = io::search_from_json(cfg.at("search"));
    if (phases.empty()) throw ConfigError("field 'phases': at least one phase is required");
    (void)full_mode(cfg);

    std::string csv = "phase,theta_best,sign,F\n";
    json rows = json::array();
    bool all_converged = true;
    bool pattern_ok = true;
    for (std::size_t i = 0; i < phases.size(); ++i) {
        const double phi = phases[i];
        auto st = detail::point_state(cfg, std::polar(amp, phi), k, derive_seed(seed, i));
        all_converged = all_converged && st.converged;
        const PhaseFit fit = phase_fit(st.rho, gamma, search);
        const auto [theta_e, sign_e] = expected_quadrant(phi);
        const bool on_grid = std::abs(std::remainder(theta_e, kPi / 8.0)) < 1e-9;
        const bool match = std::abs(fit.theta - theta_e) < 1e-9 && fit.sign == sign_e;
        if (on_grid) pattern_ok = pattern_ok && match;
        csv += io::fmt(phi) + ',' + io::fmt(fit.theta) + ',' + std::to_string(fit.sign) + ',' + io::fmt(fit.fidelity) + '\n';
        json row = {{"phase", phi},
                    {"theta_best", fit.theta},
                    {"sign", fit.sign},
                    {"F", fit.fidelity},
                    {"expected_theta", theta_e},
                    {"expected_sign", sign_e},
                    {"matches_expected", on_grid ? json(match) : json(nullptr)},
                    {"params", io::params_json(fit.params)}};
        if (!st.info.empty()) row["pipeline"] = st.info;
        rows.push_back(std::move(row));
    }
    emit(out, "phase_sweep.csv", csv, man);
    man["results"] = {{"rows", std::move(rows)}, {"pattern_ok", pattern_ok}};
    io::write_json(out / "phase_sweep.manifest.json", man);
    return all_converged ? kOk : kNumericalError;
}

inline int cmd_photon_stats(const json& cfg, const fs::path& out) {
    json man = manifest("photon-stats", cfg);
    const std::size_t n_max = count_field(cfg, "n_max", 0);
    const auto threshold = field<double>(cfg, "threshold");
    const bool do_unwind = field<bool>(cfg, "unwind");
    const Source src = load_source(cfg, man);

    std::vector<double> probs;
    if (do_unwind) {
        const auto gamma = field<double>(cfg, "gamma");
        const auto theta = field<double>(cfg, "theta");
        const SearchConfig search = io::search_from_json(cfg.at("search"));
        const OrbitResult r = orbit_fidelity(src.rho, gamma, theta, search);
        const DensityMatrix unwound = unwind(src.rho, r.params, 2 * src.rho.dim());
        probs = photon_statistics(unwound, n_max);
        man["results"]["unwind"] = {{"fidelity", r.fidelity}, {"params", io::params_json(r.params)}};
    } else if (src.pure) {
        probs = photon_statistics(*src.pure, n_max);
    } else {
        probs = photon_statistics(src.rho, n_max);
    }
    emit(out, "photon_stats.csv", io::photon_csv(probs), man);
    const auto isl = islands(probs, threshold);
    man["results"]["source"] = src.label;
    man["results"]["source_hash"] = src.hash;
    man["results"]["islands"] = io::islands_json(isl);
    man["results"]["island_count"] = isl.size();
    io::write_json(out / "photon_stats.manifest.json", man);
    return kOk;
}

// ---------------------------------------------------------------------------
// Entry point

inline int dispatch(const Invocation& inv) {
    const json cfg = resolve(inv);
    const fs::path out(inv.out);
    fs::create_directories(out);
    static const std::map<std::string, std::function<int(const json&, const fs::path&)>> table = {
        {"simulate", cmd_simulate}, {"reconstruct", cmd_reconstruct},   {"scan", cmd_scan},
        {"wigner", cmd_wigner},     {"phase-sweep", cmd_phase_sweep}, {"photon-stats", cmd_photon_stats}};
    return table.at(inv.command)(cfg, out);
}

/// Parses `args` (without the program name) and runs the selected command.
inline int run(std::vector<std::string> args, std::ostream& err = std::cerr) {
    CLI::App app{"Photon-added coherent states as cubic phase states: simulation and analysis"};
    app.require_subcommand(1);
    Invocation inv;

    auto add_common = [&](CLI::App* sc) {
        sc->add_option_function<std::string>("--config", [&](const std::string& v) { inv.config = v; },
                                             "JSON config document");
        sc->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t v) { inv.seed = v; }, "random seed");
        sc->add_option_function<std::size_t>("--dim", [&](std::size_t v) { inv.dim = v; }, "Fock truncation");
        sc->add_option("--out", inv.out, "output directory");
    };
    auto flag = [&](CLI::App* sc, const std::string& name, const std::string& key, const std::string& help) {
        sc->add_option_function<std::string>(
            name,
            [&inv, key](const std::string& v) {
                // numbers and booleans pass through as JSON; anything else is a string
                try {
                    inv.flags[key] = json::parse(v);
                } catch (const json::parse_error&) {
                    inv.flags[key] = v;
                }
            },
            help);
    };

    auto* sim = app.add_subcommand("simulate", "heterodyne-sample a coherent state and postselect");
    add_common(sim);
    flag(sim, "--alpha", "alpha", "coherent amplitude as [re,im]");
    flag(sim, "--k", "k", "photons added");
    flag(sim, "--n", "n", "raw samples");

    auto* rec = app.add_subcommand("reconstruct", "MaxLik reconstruction from a sample CSV");
    add_common(rec);
    rec->add_option_function<std::string>("--samples", [&](const std::string& v) { inv.flags["samples"] = v; },
                                          "sample CSV");

    auto* scan = app.add_subcommand("scan", "orbit fidelity over a grid of coherent amplitudes");
    add_common(scan);
    flag(scan, "--mode", "mode", "ideal or full");
    flag(scan, "--gamma", "gamma", "cubic strength");
    flag(scan, "--k", "k", "photons added");

    auto* wig = app.add_subcommand("wigner", "Wigner function on a grid");
    add_common(wig);
    wig->add_option_function<std::string>("--state", [&](const std::string& v) { inv.flags["state"] = v; },
                                          "state spec");
    wig->add_option_function<std::string>("--rho", [&](const std::string& v) { inv.flags["rho"] = v; },
                                          "density matrix JSON");

    auto* ps = app.add_subcommand("phase-sweep", "cubic quadrature fit versus the phase of alpha");
    add_common(ps);
    flag(ps, "--mode", "mode", "ideal or full");
    flag(ps, "--gamma", "gamma", "cubic strength");
    flag(ps, "--amplitude", "amplitude", "|alpha|");

    auto* st = app.add_subcommand("photon-stats", "photon-number distribution and islands");
    add_common(st);
    st->add_option_function<std::string>("--state", [&](const std::string& v) { inv.flags["state"] = v; },
                                         "state spec");
    st->add_option_function<std::string>("--rho", [&](const std::string& v) { inv.flags["rho"] = v; },
                                         "density matrix JSON");
    st->add_flag_function("--unwind", [&](std::int64_t) { inv.flags["unwind"] = true; },
                          "undo the orbit-optimal Gaussian first");
    flag(st, "--n-max", "n_max", "largest photon number");
    flag(st, "--threshold", "threshold", "island threshold relative to the largest p_n");
    flag(st, "--gamma", "gamma", "cubic strength for --unwind");

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kConfigError;
    }
    for (auto* sc : app.get_subcommands()) inv.command = sc->get_name();

    try {
        return dispatch(inv);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const InvalidDimension& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const OutOfRange& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const fs::filesystem_error& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const Error& e) {
        err << "numerical error: " << e.what() << "\n";
        return kNumericalError;
    }
}

}  // namespace cubic::cli
