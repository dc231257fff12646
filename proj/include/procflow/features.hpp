#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "procflow/common.hpp"
#include "procflow/events.hpp"

namespace procflow {

inline constexpr std::size_t kFeatureCount = 26;

/// The 26 aggregate statistics computed per (process instance, window),
/// plus the ground-truth label. Field order is the CSV column order.
struct FeatureVector {
    double protocol = 0;            // dominant protocol, TCP=0 / UDP=1
    double total_bytes_sent = 0;    // tcp_bytes_sent + udp_bytes_sent
    double avg_packet_size = 0;     // bytes/packet over all data events
    double tcp_bytes_sent = 0;
    double tcp_bytes_recv = 0;
    double tcp_pkts_sent = 0;
    double tcp_pkts_recv = 0;
    double avg_tcp_packet_size = 0;
    double tcp_bytes_copied = 0;
    double tcp_pkts_copied = 0;
    double udp_bytes_sent = 0;
    double udp_bytes_recv = 0;
    double udp_pkts_sent = 0;
    double udp_pkts_recv = 0;
    double avg_udp_packet_size = 0;
    double ratio_bytes_sent = 1;    // (tcp+1)/(udp+1), smoothed
    double ratio_bytes_recv = 1;
    double ratio_pkts_sent = 1;
    double ratio_pkts_recv = 1;
    double total_events = 0;
    double n_accept = 0;            // TCP lifecycle event counts
    double n_connect = 0;
    double n_reconnect = 0;
    double n_disconnect = 0;
    double n_receive = 0;           // count of TCP receive *events*
    double n_retransmit = 0;
    std::string label;

    std::array<double, kFeatureCount> to_row() const {
        return {protocol,        total_bytes_sent, avg_packet_size,
                tcp_bytes_sent,  tcp_bytes_recv,   tcp_pkts_sent,
                tcp_pkts_recv,   avg_tcp_packet_size, tcp_bytes_copied,
                tcp_pkts_copied, udp_bytes_sent,   udp_bytes_recv,
                udp_pkts_sent,   udp_pkts_recv,    avg_udp_packet_size,
                ratio_bytes_sent, ratio_bytes_recv, ratio_pkts_sent,
                ratio_pkts_recv, total_events,     n_accept,
                n_connect,       n_reconnect,      n_disconnect,
                n_receive,       n_retransmit};
    }
};

inline const std::array<std::string, kFeatureCount> &feature_names() {
    static const std::array<std::string, kFeatureCount> names = {
        "protocol",        "total_bytes_sent", "avg_packet_size",
        "tcp_bytes_sent",  "tcp_bytes_recv",   "tcp_pkts_sent",
        "tcp_pkts_recv",   "avg_tcp_packet_size", "tcp_bytes_copied",
        "tcp_pkts_copied", "udp_bytes_sent",   "udp_bytes_recv",
        "udp_pkts_sent",   "udp_pkts_recv",    "avg_udp_packet_size",
        "ratio_bytes_sent", "ratio_bytes_recv", "ratio_pkts_sent",
        "ratio_pkts_recv", "total_events",     "n_accept",
        "n_connect",       "n_reconnect",      "n_disconnect",
        "n_receive",       "n_retransmit"};
    return names;
}

/// Identifies one aggregation bucket: a process instance within one window.
struct BucketKey {
    std::string host;
    std::int64_t pid = 0;
    std::int64_t window = 0;  // floor(ts_ms / window_ms)

    auto operator<=>(const BucketKey &) const = default;

    std::string describe() const {
        return "(host=" + host + ", pid=" + std::to_string(pid) +
               ", window=" + std::to_string(window) + ")";
    }
};

/// Groups events into (host, pid, window) buckets. Buckets come back in
/// key order; empty buckets do not exist. Events in one bucket must agree
/// on the process name.
inline std::map<BucketKey, std::vector<NetworkEvent>> windowize(
    const std::vector<NetworkEvent> &events, std::int64_t window_ms = kWindowMs) {
    if (window_ms <= 0)
        fail(ErrorCategory::validation, "window_ms must be > 0");
    std::map<BucketKey, std::vector<NetworkEvent>> buckets;
    for (const auto &e : events) {
        std::int64_t w = e.ts_ms / window_ms;
        if (e.ts_ms < 0 && e.ts_ms % window_ms != 0) --w;  // floor, not trunc
        BucketKey key{e.host, e.pid, w};
        auto &bucket = buckets[key];
        if (!bucket.empty() && bucket.front().proc != e.proc)
            fail(ErrorCategory::data_integrity,
                 "bucket " + key.describe() + " mixes process names \"" +
                     bucket.front().proc + "\" and \"" + e.proc + "\"");
        bucket.push_back(e);
    }
    return buckets;
}

/// Computes the feature vector for one non-empty bucket.
inline FeatureVector aggregate_window(const std::vector<NetworkEvent> &bucket) {
    if (bucket.empty())
        fail(ErrorCategory::validation, "aggregate_window: bucket is empty");

    FeatureVector f;
    f.label = bucket.front().proc;
    std::int64_t tcp_events = 0, udp_events = 0;

    for (const auto &e : bucket) {
        if (e.proc != f.label)
            fail(ErrorCategory::data_integrity,
                 "bucket mixes process names \"" + f.label + "\" and \"" + e.proc +
                     "\"");
        const bool tcp = e.proto == Protocol::tcp;
        (tcp ? tcp_events : udp_events) += 1;
        switch (e.kind) {
        case EventKind::send:
            if (tcp) {
                f.tcp_bytes_sent += static_cast<double>(e.bytes);
                f.tcp_pkts_sent += static_cast<double>(e.packets);
            } else {
                f.udp_bytes_sent += static_cast<double>(e.bytes);
                f.udp_pkts_sent += static_cast<double>(e.packets);
            }
            break;
        case EventKind::receive:
            if (tcp) {
                f.tcp_bytes_recv += static_cast<double>(e.bytes);
                f.tcp_pkts_recv += static_cast<double>(e.packets);
                f.n_receive += 1;
            } else {
                f.udp_bytes_recv += static_cast<double>(e.bytes);
                f.udp_pkts_recv += static_cast<double>(e.packets);
            }
            break;
        case EventKind::copy:
            f.tcp_bytes_copied += static_cast<double>(e.bytes);
            f.tcp_pkts_copied += static_cast<double>(e.packets);
            break;
        case EventKind::accept: f.n_accept += 1; break;
        case EventKind::connect: f.n_connect += 1; break;
        case EventKind::reconnect: f.n_reconnect += 1; break;
        case EventKind::disconnect: f.n_disconnect += 1; break;
        case EventKind::retransmit: f.n_retransmit += 1; break;
        }
    }

    f.total_events = static_cast<double>(bucket.size());
    f.total_bytes_sent = f.tcp_bytes_sent + f.udp_bytes_sent;

    const double tcp_pkts = f.tcp_pkts_sent + f.tcp_pkts_recv;
    const double udp_pkts = f.udp_pkts_sent + f.udp_pkts_recv;
    const double tcp_bytes = f.tcp_bytes_sent + f.tcp_bytes_recv;
    const double udp_bytes = f.udp_bytes_sent + f.udp_bytes_recv;

    // Averages span send+receive events only; zero-packet denominators give 0
    // so feature vectors stay finite.
    f.avg_packet_size =
        (tcp_pkts + udp_pkts) > 0 ? (tcp_bytes + udp_bytes) / (tcp_pkts + udp_pkts) : 0.0;
    f.avg_tcp_packet_size = tcp_pkts > 0 ? tcp_bytes / tcp_pkts : 0.0;
    f.avg_udp_packet_size = udp_pkts > 0 ? udp_bytes / udp_pkts : 0.0;

    // Smoothed TCP:UDP ratios, finite and monotone by construction.
    f.ratio_bytes_sent = (f.tcp_bytes_sent + 1.0) / (f.udp_bytes_sent + 1.0);
    f.ratio_bytes_recv = (f.tcp_bytes_recv + 1.0) / (f.udp_bytes_recv + 1.0);
    f.ratio_pkts_sent = (f.tcp_pkts_sent + 1.0) / (f.udp_pkts_sent + 1.0);
    f.ratio_pkts_recv = (f.tcp_pkts_recv + 1.0) / (f.udp_pkts_recv + 1.0);

    // Dominant protocol: by data packets, then by event count, ties to TCP.
    if (tcp_pkts > 0 || udp_pkts > 0)
        f.protocol = tcp_pkts >= udp_pkts ? 0.0 : 1.0;
    else
        f.protocol = tcp_events >= udp_events ? 0.0 : 1.0;

    return f;
}

/// windowize + aggregate_window over a whole event log.
inline std::vector<FeatureVector> aggregate_events(
    const std::vector<NetworkEvent> &events, std::int64_t window_ms = kWindowMs) {
    std::vector<FeatureVector> rows;
    for (const auto &[key, bucket] : windowize(events, window_ms))
        rows.push_back(aggregate_window(bucket));
    return rows;
}

}  // namespace procflow
