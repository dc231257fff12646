#pragma once

#include <array>
#include <cstdio>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "procflow/common.hpp"

namespace procflow {

enum class Protocol : int { tcp = 0, udp = 1 };

/// Sensor event kinds. Everything except send/receive is a TCP
/// connection-lifecycle event and never occurs with proto=UDP.
enum class EventKind : int {
    accept = 0,
    connect,
    reconnect,
    disconnect,
    send,
    receive,
    retransmit,
    copy,
};

inline constexpr std::size_t kEventKindCount = 8;

inline constexpr std::array<std::string_view, kEventKindCount> kEventKindNames = {
    "accept", "connect", "reconnect", "disconnect",
    "send",   "receive", "retransmit", "copy",
};

inline std::string_view to_string(EventKind k) {
    return kEventKindNames[static_cast<std::size_t>(k)];
}

inline std::string_view to_string(Protocol p) {
    return p == Protocol::tcp ? "TCP" : "UDP";
}

inline EventKind event_kind_from_string(std::string_view s) {
    for (std::size_t i = 0; i < kEventKindCount; ++i)
        if (kEventKindNames[i] == s) return static_cast<EventKind>(i);
    fail(ErrorCategory::parse, "unknown event kind \"" + std::string(s) + "\"");
}

inline Protocol protocol_from_string(std::string_view s) {
    if (s == "TCP") return Protocol::tcp;
    if (s == "UDP") return Protocol::udp;
    fail(ErrorCategory::parse, "unknown protocol \"" + std::string(s) + "\"");
}

/// Fixed aggregation window: one feature vector per process instance per 10s.
inline constexpr std::int64_t kWindowMs = 10000;

inline bool is_data_kind(EventKind k) {
    return k == EventKind::send || k == EventKind::receive;
}

/// Lifecycle kinds (everything but send/receive) are TCP-only.
inline bool is_tcp_only_kind(EventKind k) { return !is_data_kind(k); }

/// One sensor-observed traffic event, attributed to a process instance.
struct NetworkEvent {
    std::int64_t ts_ms = 0;      // epoch milliseconds
    std::string host;            // host identifier
    std::int64_t pid = 0;        // process-instance identifier
    std::string proc;            // process name, the ground-truth label
    Protocol proto = Protocol::tcp;
    EventKind kind = EventKind::send;
    std::int64_t bytes = 0;      // payload bytes, >= 0
    std::int64_t packets = 0;    // payload packets, >= 0

    void validate() const {
        if (bytes < 0 || packets < 0)
            fail(ErrorCategory::validation, "event byte/packet counts must be >= 0");
        if (proto == Protocol::udp && is_tcp_only_kind(kind))
            fail(ErrorCategory::validation,
                 "UDP event cannot have lifecycle kind \"" +
                     std::string(to_string(kind)) + "\"");
    }
};

namespace detail {

inline void append_json_string(std::string &out, std::string_view s) {
    out += '"';
    for (char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default:
            if (static_cast<unsigned char>(c) < 0x20) {
                char buf[8];
                std::snprintf(buf, sizeof buf, "\\u%04x", c);
                out += buf;
            } else {
                out += c;
            }
        }
    }
    out += '"';
}

}  // namespace detail

/// One JSONL line for an event, keys in the documented order, no newline.
inline std::string to_jsonl(const NetworkEvent &e) {
    std::string out;
    out.reserve(128);
    out += "{\"ts_ms\":";
    out += std::to_string(e.ts_ms);
    out += ",\"host\":";
    detail::append_json_string(out, e.host);
    out += ",\"pid\":";
    out += std::to_string(e.pid);
    out += ",\"proc\":";
    detail::append_json_string(out, e.proc);
    out += ",\"proto\":\"";
    out += to_string(e.proto);
    out += "\",\"kind\":\"";
    out += to_string(e.kind);
    out += "\",\"bytes\":";
    out += std::to_string(e.bytes);
    out += ",\"packets\":";
    out += std::to_string(e.packets);
    out += '}';
    return out;
}

inline NetworkEvent event_from_json(const nlohmann::json &j) {
    NetworkEvent e;
    e.ts_ms = j.at("ts_ms").get<std::int64_t>();
    e.host = j.at("host").get<std::string>();
    e.pid = j.at("pid").get<std::int64_t>();
    e.proc = j.at("proc").get<std::string>();
    e.proto = protocol_from_string(j.at("proto").get<std::string>());
    e.kind = event_kind_from_string(j.at("kind").get<std::string>());
    e.bytes = j.at("bytes").get<std::int64_t>();
    e.packets = j.at("packets").get<std::int64_t>();
    e.validate();
    return e;
}

inline void write_events_jsonl(std::ostream &out, const std::vector<NetworkEvent> &events) {
    for (const auto &e : events) {
        out << to_jsonl(e) << '\n';
    }
}

inline void write_events_jsonl(const std::string &path,
                               const std::vector<NetworkEvent> &events) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCategory::io, "cannot open \"" + path + "\" for writing");
    write_events_jsonl(out, events);
    if (!out) fail(ErrorCategory::io, "write to \"" + path + "\" failed");
}

/// Parses a JSONL event log. Malformed lines are reported with their
/// 1-based line number.
inline std::vector<NetworkEvent> read_events_jsonl(std::istream &in) {
    std::vector<NetworkEvent> events;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded())
            fail(ErrorCategory::parse,
                 "malformed JSON at line " + std::to_string(line_no));
        try {
            events.push_back(event_from_json(j));
        } catch (const nlohmann::json::exception &ex) {
            fail(ErrorCategory::parse, "invalid event at line " +
                                           std::to_string(line_no) + ": " + ex.what());
        } catch (const Error &ex) {
            fail(ErrorCategory::parse, "invalid event at line " +
                                           std::to_string(line_no) + ": " + ex.what());
        }
    }
    return events;
}

inline std::vector<NetworkEvent> read_events_jsonl(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCategory::io, "cannot open \"" + path + "\" for reading");
    return read_events_jsonl(in);
}

}  // namespace procflow
