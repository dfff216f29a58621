#pragma once

#include <sstream>

#include "ymbar/io.hpp"

namespace ymbar {

// ---------------------------------------------------------------------------
// Run manifest: flat key-value text, one `section.key = value` per line,
// `#` comments and blank lines allowed. Unknown keys are rejected so typos
// surface immediately. Command-line flags override manifest values.
// ---------------------------------------------------------------------------

struct RunManifest {
    std::string command = "verify";

    // geometry
    int n = 2;
    int N = 16;
    double L = 2.0 * kPi;
    bool dealias = true;

    // bundle and data generation
    int rank = 2;
    bool background = false;
    double amplitude = 0.1;
    int band = 2;
    std::uint64_t seed = 1;

    // flow
    FlowConfig flow;

    // verification: flow-behavior checks run on their own desk-scale grid
    int verify_flow_N = 8;

    std::string out_dir = "out";
    double tol_scale = 1.0;

    TorusGeometry geometry() const { return make_torus(n, N, L, dealias); }

    void validate() const {
        if (command != "verify" && command != "flow" && command != "inspect")
            throw ConfigError("unknown command '" + command + "'");
        if (n != 1 && n != 2) throw ConfigError("geometry.n must be 1 or 2");
        if (N < 4 || N % 2 != 0) throw ConfigError("geometry.N must be even and >= 4");
        if (!(L > 0.0)) throw ConfigError("geometry.L must be positive");
        if (rank < 1) throw ConfigError("bundle.rank must be positive");
        if (background && rank != 1)
            throw ConfigError("bundle.background requires rank 1");
        if (background && n != 2)
            throw ConfigError("bundle.background requires complex dimension 2");
        if (amplitude < 0.0) throw ConfigError("bundle.amplitude must be nonnegative");
        if (band < 0 || band >= N / 2)
            throw ConfigError("bundle.band must lie below the Nyquist frequency");
        if (verify_flow_N < 4 || verify_flow_N % 2 != 0)
            throw ConfigError("verify.flow_N must be even and >= 4");
        if (!(tol_scale > 0.0)) throw ConfigError("tolerances.scale must be positive");
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "on" || v == "1") return true;
    if (v == "false" || v == "off" || v == "0") return false;
    throw ConfigError("manifest key '" + key + "' expects a boolean, got '" + v + "'");
}

template <class T>
inline T parse_num(const std::string& v, const std::string& key) {
    std::istringstream ss(v);
    T out{};
    ss >> out;
    const bool bad_head = ss.fail();
    std::string rest;
    ss.clear();
    ss >> rest;
    if (bad_head || !rest.empty())
        throw ConfigError("manifest key '" + key + "' has malformed value '" + v + "'");
    return out;
}

}  // namespace detail

inline void manifest_set(RunManifest& m, const std::string& key, const std::string& val) {
    using detail::parse_bool;
    using detail::parse_num;
    if (key == "command") m.command = val;
    else if (key == "geometry.n") m.n = parse_num<int>(val, key);
    else if (key == "geometry.N") m.N = parse_num<int>(val, key);
    else if (key == "geometry.L") m.L = parse_num<double>(val, key);
    else if (key == "geometry.dealias") m.dealias = parse_bool(val, key);
    else if (key == "bundle.rank") m.rank = parse_num<int>(val, key);
    else if (key == "bundle.background") m.background = parse_bool(val, key);
    else if (key == "bundle.amplitude") m.amplitude = parse_num<double>(val, key);
    else if (key == "bundle.band") m.band = parse_num<int>(val, key);
    else if (key == "bundle.seed") m.seed = parse_num<std::uint64_t>(val, key);
    else if (key == "flow.dt0") m.flow.dt0 = parse_num<double>(val, key);
    else if (key == "flow.safety") m.flow.safety = parse_num<double>(val, key);
    else if (key == "flow.max_steps") m.flow.max_steps = parse_num<long>(val, key);
    else if (key == "flow.stop_grad") m.flow.stop_grad = parse_num<double>(val, key);
    else if (key == "flow.stop_energy") m.flow.stop_energy = parse_num<double>(val, key);
    else if (key == "flow.snapshot_every") m.flow.snapshot_every = parse_num<long>(val, key);
    else if (key == "verify.flow_N") m.verify_flow_N = parse_num<int>(val, key);
    else if (key == "output.dir") m.out_dir = val;
    else if (key == "tolerances.scale") m.tol_scale = parse_num<double>(val, key);
    else throw ConfigError("unknown manifest key '" + key + "'");
}

inline RunManifest parse_manifest(const std::string& text) {
    RunManifest m;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("manifest line " + std::to_string(lineno) +
                              " is not 'key = value'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw ConfigError("manifest line " + std::to_string(lineno) +
                              " has an empty key or value");
        manifest_set(m, key, val);
    }
    return m;
}

inline RunManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open manifest " + path.string());
    std::string text((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
    return parse_manifest(text);
}

}  // namespace ymbar
