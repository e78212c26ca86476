#pragma once

#include <chrono>
#include <string>
#include <vector>

#include <json.hpp>

#include "schro/config.hpp"
#include "schro/io.hpp"
#include "schro/version.hpp"

namespace schro {

// Machine-readable run record. Every numeric claim carries its tolerance via
// add_check. The "timings" block is wall-clock and therefore the only part of
// a report that varies between identical runs; all CSV outputs and every
// other report field are byte-deterministic given (config, seed, version).
class RunReport {
  public:
    RunReport(const std::string& command, const RunConfig& cfg) {
        j_["version"] = version;
        j_["command"] = command;
        j_["config"] = cfg.echo();
        j_["results"] = json::object();
        j_["checks"] = json::array();
        j_["timings"] = json::object();
    }

    json& results() { return j_["results"]; }

    void add_check(const std::string& name, bool pass, double value, double tolerance,
                   const std::string& relation = "<=") {
        json c;
        c["name"] = name;
        c["pass"] = pass;
        c["value"] = value;
        c["tolerance"] = tolerance;
        c["relation"] = relation;
        j_["checks"].push_back(c);
        all_passed_ = all_passed_ && pass;
    }

    void add_timing(const std::string& stage, double ms) { j_["timings"][stage] = ms; }

    bool all_passed() const { return all_passed_; }

    const json& data() const { return j_; }

    std::string dump() const { return j_.dump(2) + "\n"; }

    void write(const std::filesystem::path& path) const { atomic_write(path, dump()); }

  private:
    json j_;
    bool all_passed_ = true;
};

class StageTimer {
  public:
    explicit StageTimer(RunReport& rep, std::string stage)
        : rep_(rep), stage_(std::move(stage)),
          start_(std::chrono::steady_clock::now()) {}
    ~StageTimer() {
        const auto end = std::chrono::steady_clock::now();
        rep_.add_timing(stage_,
                        std::chrono::duration<double, std::milli>(end - start_).count());
    }

  private:
    RunReport& rep_;
    std::string stage_;
    std::chrono::steady_clock::time_point start_;
};

// Just enough JSON-schema to check the shipped report schema: type, required,
// properties, items, additionalProperties (boolean), enum of strings.
inline bool validate_schema(const json& value, const json& schema, std::string* why = nullptr,
                            const std::string& where = "$") {
    auto fail = [&](const std::string& msg) {
        if (why) *why = where + ": " + msg;
        return false;
    };
    if (schema.contains("type")) {
        const std::string t = schema["type"].get<std::string>();
        const bool ok = (t == "object" && value.is_object()) ||
                        (t == "array" && value.is_array()) ||
                        (t == "string" && value.is_string()) ||
                        (t == "number" && value.is_number()) ||
                        (t == "integer" && value.is_number_integer()) ||
                        (t == "boolean" && value.is_boolean()) ||
                        (t == "null" && value.is_null());
        if (!ok) return fail("expected type " + t);
    }
    if (schema.contains("enum")) {
        bool hit = false;
        for (const auto& e : schema["enum"])
            if (e == value) hit = true;
        if (!hit) return fail("value not in enum");
    }
    if (value.is_object()) {
        if (schema.contains("required"))
            for (const auto& r : schema["required"])
                if (!value.contains(r.get<std::string>()))
                    return fail("missing required key " + r.get<std::string>());
        const json props = schema.value("properties", json::object());
        for (const auto& [k, v] : value.items()) {
            if (props.contains(k)) {
                if (!validate_schema(v, props[k], why, where + "." + k)) return false;
            } else if (schema.contains("additionalProperties") &&
                       schema["additionalProperties"].is_boolean() &&
                       !schema["additionalProperties"].get<bool>()) {
                return fail("unexpected key " + k);
            }
        }
    }
    if (value.is_array() && schema.contains("items")) {
        for (std::size_t i = 0; i < value.size(); ++i)
            if (!validate_schema(value[i], schema["items"], why,
                                 where + "[" + std::to_string(i) + "]"))
                return false;
    }
    return true;
}

} // namespace schro
