#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "procflow/common.hpp"

namespace procflow {

/// Record of one CLI run: enough to reproduce the invocation exactly.
struct RunManifest {
    std::string command;
    nlohmann::json config;  // resolved flag values, seeds included
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::int64_t duration_ms = 0;
    unsigned threads = 0;

    nlohmann::json to_json() const {
        return nlohmann::json{{"tool", "procflow"},
                              {"version", kVersion},
                              {"command", command},
                              {"config", config},
                              {"inputs", inputs},
                              {"outputs", outputs},
                              {"duration_ms", duration_ms},
                              {"threads", threads}};
    }
};

inline void write_json_file(const std::string &path, const nlohmann::json &j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCategory::io, "cannot open \"" + path + "\" for writing");
    out << j.dump(2) << '\n';
    if (!out) fail(ErrorCategory::io, "write to \"" + path + "\" failed");
}

inline nlohmann::json read_json_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCategory::io, "cannot open \"" + path + "\" for reading");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception &e) {
        fail(ErrorCategory::parse, "malformed JSON in \"" + path + "\": " + e.what());
    }
    return j;
}

inline void write_manifest(const std::string &path, const RunManifest &manifest) {
    write_json_file(path, manifest.to_json());
}

}  // namespace procflow
