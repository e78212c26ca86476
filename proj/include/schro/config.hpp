#pragma once

#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "schro/errors.hpp"
#include "schro/io.hpp"

namespace schro {

using json = nlohmann::json;

// Everything a subcommand run needs. Zero means "derive automatically" for
// sites, d_max, t, and T.
struct RunConfig {
    std::vector<double> potential = {1.0, -1.0};
    double mu = 10.0;
    std::vector<double> mu_list;
    double rho0 = 1.2;
    int nodes = 512;   // quadrature / band grid M
    int sites = 0;     // total lattice sites (odd); 0 = auto from the cone rule
    double t = 0.0;    // 0 = auto, scaled by the group velocity per subcommand
    std::vector<double> t_list;
    int d_max = 0;     // 0 = auto
    double eps = 1e-6;
    double T = 0.0;    // direct-evolution horizon; 0 = auto
    std::string method = "chebyshev";
    double hopping = 1.0;
    bool front = true;
    bool direct = false;
    std::string out_dir = "out";
    unsigned long long seed = 12345;
    int threads = 1;
    bool quiet = false;
    // verify-only knobs
    int p_verify = 0; // 0 = default battery
    int trials = 1000;
    bool perturb_formula = false;

    json echo() const {
        json j;
        j["potential"] = potential;
        j["mu"] = mu;
        j["mu_list"] = mu_list;
        j["rho0"] = rho0;
        j["nodes"] = nodes;
        j["sites"] = sites;
        j["t"] = t;
        j["t_list"] = t_list;
        j["d_max"] = d_max;
        j["eps"] = eps;
        j["T"] = T;
        j["method"] = method;
        j["hopping"] = hopping;
        j["front"] = front;
        j["direct"] = direct;
        j["out_dir"] = out_dir;
        j["seed"] = seed;
        j["threads"] = threads;
        j["quiet"] = quiet;
        j["p_verify"] = p_verify;
        j["trials"] = trials;
        j["perturb_formula"] = perturb_formula;
        return j;
    }
};

namespace detail_cfg {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

// Flat TOML subset: `key = value` lines, # comments, values are numbers,
// booleans, "strings", or [arrays of numbers]. Section headers are rejected
// to keep configs unambiguous.
inline std::map<std::string, std::string> parse_toml_scalars(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::size_t pos = 0;
    int lineno = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) nl = text.size();
        std::string line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            // keep # inside quotes
            bool inq = false;
            std::size_t cut = std::string::npos;
            for (std::size_t i = 0; i < line.size(); ++i) {
                if (line[i] == '"') inq = !inq;
                else if (line[i] == '#' && !inq) { cut = i; break; }
            }
            if (cut != std::string::npos) line = line.substr(0, cut);
        }
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[')
            throw DomainViolation("config: section headers are not supported (line " +
                                  std::to_string(lineno) + ")");
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw DomainViolation("config: expected key = value (line " +
                                  std::to_string(lineno) + ")");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw DomainViolation("config: empty key or value (line " +
                                  std::to_string(lineno) + ")");
        kv[key] = val;
    }
    return kv;
}

inline bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw DomainViolation("config: key '" + key + "' expects true/false, got '" + v + "'");
}

inline double parse_double(const std::string& v, const std::string& key) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw DomainViolation("config: key '" + key + "' expects a number, got '" + v + "'");
    }
}

inline std::vector<double> parse_array(const std::string& v, const std::string& key) {
    if (v.size() < 2 || v.front() != '[' || v.back() != ']')
        throw DomainViolation("config: key '" + key + "' expects [a, b, ...]");
    std::vector<double> out;
    std::string inner = v.substr(1, v.size() - 2);
    std::size_t pos = 0;
    while (pos <= inner.size()) {
        std::size_t comma = inner.find(',', pos);
        if (comma == std::string::npos) comma = inner.size();
        const std::string item = trim(inner.substr(pos, comma - pos));
        if (!item.empty()) out.push_back(parse_double(item, key));
        pos = comma + 1;
    }
    return out;
}

inline std::string parse_string(const std::string& v, const std::string& key) {
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"')
        return v.substr(1, v.size() - 2);
    throw DomainViolation("config: key '" + key + "' expects a \"quoted\" string");
}

inline void assign(RunConfig& cfg, const std::string& key, const std::string& val) {
    if (key == "potential") cfg.potential = parse_array(val, key);
    else if (key == "mu") cfg.mu = parse_double(val, key);
    else if (key == "mu_list") cfg.mu_list = parse_array(val, key);
    else if (key == "rho0") cfg.rho0 = parse_double(val, key);
    else if (key == "nodes") cfg.nodes = static_cast<int>(parse_double(val, key));
    else if (key == "sites") cfg.sites = static_cast<int>(parse_double(val, key));
    else if (key == "t") cfg.t = parse_double(val, key);
    else if (key == "t_list") cfg.t_list = parse_array(val, key);
    else if (key == "d_max") cfg.d_max = static_cast<int>(parse_double(val, key));
    else if (key == "eps") cfg.eps = parse_double(val, key);
    else if (key == "T") cfg.T = parse_double(val, key);
    else if (key == "method") cfg.method = parse_string(val, key);
    else if (key == "hopping") cfg.hopping = parse_double(val, key);
    else if (key == "front") cfg.front = parse_bool(val, key);
    else if (key == "direct") cfg.direct = parse_bool(val, key);
    else if (key == "out_dir") cfg.out_dir = parse_string(val, key);
    else if (key == "seed") cfg.seed = static_cast<unsigned long long>(parse_double(val, key));
    else if (key == "threads") cfg.threads = static_cast<int>(parse_double(val, key));
    else if (key == "quiet") cfg.quiet = parse_bool(val, key);
    else if (key == "p_verify") cfg.p_verify = static_cast<int>(parse_double(val, key));
    else if (key == "trials") cfg.trials = static_cast<int>(parse_double(val, key));
    else if (key == "perturb_formula") cfg.perturb_formula = parse_bool(val, key);
    else throw DomainViolation("config: unknown key '" + key + "'");
}

inline void load_json_config(RunConfig& cfg, const json& j) {
    if (!j.is_object()) throw DomainViolation("config: JSON root must be an object");
    for (const auto& [key, val] : j.items()) {
        if (val.is_string()) assign(cfg, key, "\"" + val.get<std::string>() + "\"");
        else if (val.is_boolean()) assign(cfg, key, val.get<bool>() ? "true" : "false");
        else if (val.is_number()) assign(cfg, key, double_to_string(val.get<double>()));
        else if (val.is_array()) {
            std::string s = "[";
            for (std::size_t i = 0; i < val.size(); ++i) {
                if (i) s += ",";
                s += double_to_string(val[i].get<double>());
            }
            s += "]";
            assign(cfg, key, s);
        } else
            throw DomainViolation("config: unsupported JSON value for key '" + key + "'");
    }
}

} // namespace detail_cfg

inline RunConfig parse_config_text(const std::string& text, bool as_json) {
    RunConfig cfg;
    if (as_json) {
        detail_cfg::load_json_config(cfg, json::parse(text));
    } else {
        for (const auto& [k, v] : detail_cfg::parse_toml_scalars(text))
            detail_cfg::assign(cfg, k, v);
    }
    return cfg;
}

inline RunConfig parse_config(const std::filesystem::path& path) {
    return parse_config_text(read_file(path), path.extension() == ".json");
}

// SCHRO_<KEY> environment variables override file values; strings are taken
// verbatim, arrays use the TOML bracket syntax.
inline void apply_env_overrides(RunConfig& cfg) {
    static const char* keys[] = {"potential", "mu", "mu_list", "rho0", "nodes", "sites",
                                 "t", "t_list", "d_max", "eps", "T", "method", "hopping",
                                 "front", "direct", "out_dir", "seed", "threads", "quiet",
                                 "p_verify", "trials", "perturb_formula"};
    for (const char* key : keys) {
        std::string env = "SCHRO_";
        for (const char* c = key; *c; ++c)
            env += static_cast<char>(std::toupper(static_cast<unsigned char>(*c)));
        const char* val = std::getenv(env.c_str());
        if (!val) continue;
        std::string sval = val;
        if (std::string(key) == "method" || std::string(key) == "out_dir")
            sval = "\"" + sval + "\"";
        detail_cfg::assign(cfg, key, sval);
    }
}

} // namespace schro
