#pragma once

// CSV / JSON serialization and output manifests.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cubic/analysis.hpp"
#include "cubic/fock.hpp"
#include "cubic/measurement.hpp"
#include "cubic/states.hpp"
#include "cubic/tomography.hpp"

namespace cubic::io {

using json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "0.1.0";

/// 17 significant digits: doubles round-trip exactly.
inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Hashing

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string hash_string(const std::string& s) { return hex64(fnv1a(s.data(), s.size())); }

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string hash_file(const std::filesystem::path& path) { return hash_string(read_text(path)); }

inline std::string hash_matrix(const Mat& m) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const std::int64_t dims[2] = {m.rows(), m.cols()};
    h = fnv1a(dims, sizeof dims, h);
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            const double parts[2] = {m(i, j).real(), m(i, j).imag()};
            h = fnv1a(parts, sizeof parts, h);
        }
    return hex64(h);
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
}

inline void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// ---------------------------------------------------------------------------
// Sample batches: x,p,accepted

inline std::string samples_csv(const SampleBatch& batch) {
    std::string out = "x,p,accepted\n";
    out.reserve(batch.samples.size() * 44 + 16);
    for (const auto& s : batch.samples) {
        out += fmt(s.x);
        out += ',';
        out += fmt(s.p);
        out += s.accepted ? ",1\n" : ",0\n";
    }
    return out;
}

inline SampleBatch parse_samples_csv(const std::string& text, const std::string& origin = "samples") {
    SampleBatch batch;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line) || line.rfind("x,p,accepted", 0) != 0)
        throw ConfigError(origin + ":1: expected header 'x,p,accepted'");
    ++lineno;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string fx, fp, fa;
        if (!std::getline(row, fx, ',') || !std::getline(row, fp, ',') || !std::getline(row, fa, ','))
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 3 fields");
        HeterodyneSample s;
        try {
            std::size_t used = 0;
            s.x = std::stod(fx, &used);
            if (used != fx.size()) throw std::invalid_argument("x");
            s.p = std::stod(fp, &used);
            if (used != fp.size()) throw std::invalid_argument("p");
        } catch (const std::exception&) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed number");
        }
        if (fa == "1") {
            s.accepted = true;
        } else if (fa != "0") {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": accepted must be 0 or 1");
        }
        batch.samples.push_back(s);
    }
    return batch;
}

// ---------------------------------------------------------------------------
// Density matrices: {dim, re, im}

inline json density_json(const DensityMatrix& rho) {
    json re = json::array();
    json im = json::array();
    for (std::size_t i = 0; i < rho.dim(); ++i) {
        json rr = json::array();
        json ri = json::array();
        for (std::size_t j = 0; j < rho.dim(); ++j) {
            rr.push_back(rho(i, j).real());
            ri.push_back(rho(i, j).imag());
        }
        re.push_back(std::move(rr));
        im.push_back(std::move(ri));
    }
    json j;
    j["dim"] = rho.dim();
    j["re"] = std::move(re);
    j["im"] = std::move(im);
    return j;
}

inline DensityMatrix density_from_json(const json& j) {
    try {
        const auto dim = j.at("dim").get<std::size_t>();
        const auto& re = j.at("re");
        const auto& im = j.at("im");
        if (dim == 0) throw ConfigError("density matrix: dim must be positive");
        if (re.size() != dim || im.size() != dim) throw ConfigError("density matrix: row count does not match dim");
        Mat m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
        for (std::size_t r = 0; r < dim; ++r) {
            if (re[r].size() != dim || im[r].size() != dim)
                throw ConfigError("density matrix: row " + std::to_string(r) + " has wrong length");
            for (std::size_t c = 0; c < dim; ++c)
                m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    cplx(re[r][c].get<double>(), im[r][c].get<double>());
        }
        return DensityMatrix(std::move(m));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("density matrix: ") + e.what());
    } catch (const ContractViolation& e) {
        throw ConfigError(std::string("density matrix: ") + e.what());
    }
}

inline json parse_json(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(origin + ": " + e.what());
    }
}

inline DensityMatrix read_density(const std::filesystem::path& path) {
    return density_from_json(parse_json(read_text(path), path.string()));
}

// ---------------------------------------------------------------------------
// Grids and tables

inline std::string wigner_csv(const WignerGrid& g) {
    std::string out = "x,p,w\n";
    for (std::size_t i = 0; i < g.x_axis.size(); ++i)
        for (std::size_t j = 0; j < g.p_axis.size(); ++j)
            out += fmt(g.x_axis[i]) + ',' + fmt(g.p_axis[j]) + ',' +
                   fmt(g.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) + '\n';
    return out;
}

inline std::string photon_csv(const std::vector<double>& probs) {
    std::string out = "n,p\n";
    for (std::size_t n = 0; n < probs.size(); ++n) out += std::to_string(n) + ',' + fmt(probs[n]) + '\n';
    return out;
}

inline json islands_json(const std::vector<Island>& list) {
    json out = json::array();
    for (const auto& is : list) out.push_back(json::array({is.start, is.end}));
    return out;
}

inline json params_json(const GaussianParams& g) {
    return json{{"disp_re", g.disp.real()},
                {"disp_im", g.disp.imag()},
                {"squeeze_r", g.squeeze_r},
                {"squeeze_phi", g.squeeze_phi},
                {"rot", g.rot}};
}

inline json axis_json(const GridAxis& a) { return json{{"lo", a.lo}, {"hi", a.hi}, {"step", a.step}}; }

inline GridAxis axis_from_json(const json& j, const std::string& field) {
    try {
        if (j.is_number()) return GridAxis::single(j.get<double>());
        return GridAxis{j.at("lo").get<double>(), j.at("hi").get<double>(), j.value("step", 0.0)};
    } catch (const json::exception& e) {
        throw ConfigError("field '" + field + "': expected number or {lo, hi, step}: " + e.what());
    }
}

inline json search_json(const SearchConfig& s) {
    return json{{"disp_re", axis_json(s.disp_re)},         {"disp_im", axis_json(s.disp_im)},
                {"squeeze_r", axis_json(s.squeeze_r)},     {"squeeze_phi", axis_json(s.squeeze_phi)},
                {"rot", axis_json(s.rot)},                 {"refinements", s.refinements},
                {"refine_halfwidth", s.refine_halfwidth}};
}

inline SearchConfig search_from_json(const json& j) {
    SearchConfig s;
    if (!j.is_object()) throw ConfigError("field 'search': expected an object");
    if (j.contains("disp_re")) s.disp_re = axis_from_json(j["disp_re"], "search.disp_re");
    if (j.contains("disp_im")) s.disp_im = axis_from_json(j["disp_im"], "search.disp_im");
    if (j.contains("squeeze_r")) s.squeeze_r = axis_from_json(j["squeeze_r"], "search.squeeze_r");
    if (j.contains("squeeze_phi")) s.squeeze_phi = axis_from_json(j["squeeze_phi"], "search.squeeze_phi");
    if (j.contains("rot")) s.rot = axis_from_json(j["rot"], "search.rot");
    try {
        if (j.contains("refinements")) s.refinements = j["refinements"].get<int>();
        if (j.contains("refine_halfwidth")) s.refine_halfwidth = j["refine_halfwidth"].get<int>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("field 'search': ") + e.what());
    }
    if (s.refinements < 0 || s.refine_halfwidth < 1) throw ConfigError("field 'search': refinement settings out of range");
    return s;
}

// ---------------------------------------------------------------------------
// State specifications
//
//   vacuum | fock:N | coherent:RE,IM | pacs:RE,IM,K | cubic:GAMMA[,THETA]
//   | perturbative:GAMMA

inline std::vector<double> spec_numbers(const std::string& body, const std::string& text) {
    std::vector<double> out;
    std::istringstream in(body);
    std::string field;
    while (std::getline(in, field, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(field, &used));
            if (used != field.size()) throw std::invalid_argument(field);
        } catch (const std::exception&) {
            throw ConfigError("state '" + text + "': malformed number '" + field + "'");
        }
    }
    return out;
}

inline StateVector parse_state(const std::string& text, std::size_t dim) {
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    const std::string body = colon == std::string::npos ? "" : text.substr(colon + 1);
    const std::vector<double> v = spec_numbers(body, text);
    auto need = [&](std::size_t lo, std::size_t hi) {
        if (v.size() < lo || v.size() > hi) throw ConfigError("state '" + text + "': wrong number of parameters");
    };
    if (kind == "vacuum") {
        need(0, 0);
        return vacuum(dim);
    }
    if (kind == "fock") {
        need(1, 1);
        if (v[0] < 0 || v[0] != std::floor(v[0])) throw ConfigError("state '" + text + "': level must be a whole number");
        return fock(static_cast<std::size_t>(v[0]), dim);
    }
    if (kind == "coherent") {
        need(1, 2);
        return coherent(cplx(v[0], v.size() > 1 ? v[1] : 0.0), dim);
    }
    if (kind == "pacs") {
        need(3, 3);
        if (v[2] < 0 || v[2] != std::floor(v[2])) throw ConfigError("state '" + text + "': k must be a whole number");
        return photon_added_coherent(cplx(v[0], v[1]), static_cast<unsigned>(v[2]), dim);
    }
    if (kind == "cubic") {
        need(1, 2);
        // the projected state is reported as-is; callers see the tail through fidelity
        return cubic_phase_state(v[0], v.size() > 1 ? v[1] : 0.0, dim, 1.0).state;
    }
    if (kind == "perturbative") {
        need(1, 1);
        return perturbative_cubic(v[0], dim);
    }
    throw ConfigError("unknown state kind '" + kind + "'");
}

}  // namespace cubic::io
