#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "procflow/common.hpp"
#include "procflow/events.hpp"
#include "procflow/rng.hpp"

namespace procflow {

/// Lognormal(mu, sigma) of per-packet payload bytes.
struct SizeDistribution {
    double mu = 6.0;
    double sigma = 0.5;
};

/// Generative description of one synthetic process's traffic. Event counts
/// per 10-second window are Poisson with the per-kind means in `rates`;
/// send/receive events carry lognormal packet sizes.
struct ProcessProfile {
    std::string name;
    double tcp_fraction = 1.0;       // P(data event is TCP)
    SizeDistribution pkt_size_sent;  // bytes per sent packet
    SizeDistribution pkt_size_recv;  // bytes per received packet
    std::map<EventKind, double> rates;  // mean events per window, by kind
    double send_recv_ratio = 0.5;    // declared send share of data events

    double rate(EventKind k) const {
        auto it = rates.find(k);
        return it == rates.end() ? 0.0 : it->second;
    }

    /// Sets rates[send] and rates[receive] from a total data-event mean and
    /// the profile's send share.
    ProcessProfile &with_data_rate(double total_mean) {
        rates[EventKind::send] = total_mean * send_recv_ratio;
        rates[EventKind::receive] = total_mean * (1.0 - send_recv_ratio);
        return *this;
    }

    void validate() const {
        if (name.empty())
            fail(ErrorCategory::validation, "profile name must be non-empty");
        if (!(tcp_fraction >= 0.0 && tcp_fraction <= 1.0))
            fail(ErrorCategory::validation,
                 "profile \"" + name + "\": tcp_fraction must be in [0,1]");
        if (!(send_recv_ratio >= 0.0 && send_recv_ratio <= 1.0))
            fail(ErrorCategory::validation,
                 "profile \"" + name + "\": send_recv_ratio must be in [0,1]");
        if (!(pkt_size_sent.sigma > 0.0) || !(pkt_size_recv.sigma > 0.0))
            fail(ErrorCategory::validation,
                 "profile \"" + name + "\": size sigma must be > 0");
        for (const auto &[kind, mean] : rates) {
            if (!(mean >= 0.0) || !std::isfinite(mean))
                fail(ErrorCategory::validation,
                     "profile \"" + name + "\": rate for " +
                         std::string(to_string(kind)) + " must be >= 0");
        }
    }
};

struct ScenarioConfig {
    std::vector<ProcessProfile> profiles;
    std::size_t windows_per_process = 100;
    std::size_t hosts = 1;
    std::uint64_t seed = 0;

    void validate() const {
        if (profiles.empty())
            fail(ErrorCategory::validation, "scenario needs at least one profile");
        if (windows_per_process < 1)
            fail(ErrorCategory::validation, "windows_per_process must be >= 1");
        if (hosts < 1)
            fail(ErrorCategory::validation, "hosts must be >= 1");
        std::set<std::string> names;
        for (const auto &p : profiles) {
            p.validate();
            if (!names.insert(p.name).second)
                fail(ErrorCategory::validation,
                     "duplicate profile name \"" + p.name + "\"");
        }
    }
};

namespace detail {

// Mean extra packets per data/copy event beyond the first; constant across
// profiles so packet multiplicity itself carries no class signal.
inline constexpr double kExtraPacketsMean = 2.0;

inline std::int64_t sample_payload(Rng &rng, const SizeDistribution &dist,
                                   std::int64_t packets) {
    std::int64_t bytes = 0;
    for (std::int64_t i = 0; i < packets; ++i) {
        double size = rng.lognormal(dist.mu, dist.sigma);
        std::int64_t whole = static_cast<std::int64_t>(std::llround(size));
        bytes += whole < 1 ? 1 : whole;
    }
    return bytes;
}

}  // namespace detail

/// Samples one 10-second window of events for a profile. Deterministic in
/// (profile, window_index, rng state); events come back in timestamp order.
/// Host/pid attribution is the caller's job (generate_scenario fills them).
inline std::vector<NetworkEvent> sample_window(const ProcessProfile &profile,
                                               std::size_t window_index, Rng &rng) {
    profile.validate();
    const std::int64_t window_start = static_cast<std::int64_t>(window_index) * kWindowMs;
    std::vector<NetworkEvent> events;
    for (std::size_t ki = 0; ki < kEventKindCount; ++ki) {
        EventKind kind = static_cast<EventKind>(ki);
        std::uint64_t count = rng.poisson(profile.rate(kind));
        for (std::uint64_t i = 0; i < count; ++i) {
            NetworkEvent e;
            e.ts_ms = window_start + rng.int_range(0, kWindowMs);
            e.proc = profile.name;
            e.kind = kind;
            if (is_data_kind(kind)) {
                e.proto = rng.bernoulli(profile.tcp_fraction) ? Protocol::tcp
                                                              : Protocol::udp;
                e.packets = 1 + static_cast<std::int64_t>(
                                    rng.poisson(detail::kExtraPacketsMean));
                const SizeDistribution &dist = kind == EventKind::send
                                                   ? profile.pkt_size_sent
                                                   : profile.pkt_size_recv;
                e.bytes = detail::sample_payload(rng, dist, e.packets);
            } else {
                e.proto = Protocol::tcp;
                if (kind == EventKind::copy) {
                    e.packets = 1 + static_cast<std::int64_t>(
                                        rng.poisson(detail::kExtraPacketsMean));
                    e.bytes = detail::sample_payload(rng, profile.pkt_size_sent,
                                                     e.packets);
                }
            }
            events.push_back(std::move(e));
        }
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const NetworkEvent &a, const NetworkEvent &b) {
                         return a.ts_ms < b.ts_ms;
                     });
    return events;
}

/// Generates the full labeled event log for a scenario, in timestamp order.
/// Each profile gets `hosts` long-lived process instances; window w of
/// profile p lands on instance w % hosts. Identical configs (seed included)
/// produce bit-identical logs.
inline std::vector<NetworkEvent> generate_scenario(const ScenarioConfig &config) {
    config.validate();
    std::vector<std::vector<NetworkEvent>> per_window(config.profiles.size() *
                                                      config.windows_per_process);
    parallel_for(per_window.size(), [&](std::size_t slot) {
        std::size_t pi = slot / config.windows_per_process;
        std::size_t w = slot % config.windows_per_process;
        Rng rng(derive_seed(config.seed, "window", slot));
        auto events = sample_window(config.profiles[pi], w, rng);
        std::size_t instance = w % config.hosts;
        std::string host = "h" + std::to_string(instance);
        std::int64_t pid =
            1000 + static_cast<std::int64_t>(pi * config.hosts + instance);
        for (auto &e : events) {
            e.host = host;
            e.pid = pid;
        }
        per_window[slot] = std::move(events);
    });
    std::vector<NetworkEvent> log;
    for (auto &chunk : per_window)
        log.insert(log.end(), std::make_move_iterator(chunk.begin()),
                   std::make_move_iterator(chunk.end()));
    std::stable_sort(log.begin(), log.end(),
                     [](const NetworkEvent &a, const NetworkEvent &b) {
                         return a.ts_ms < b.ts_ms;
                     });
    return log;
}

enum class Separability { high, medium, none };

inline Separability separability_from_string(std::string_view s) {
    if (s == "high") return Separability::high;
    if (s == "medium") return Separability::medium;
    if (s == "none") return Separability::none;
    fail(ErrorCategory::validation, "unknown separability \"" + std::string(s) + "\"");
}

inline const char *to_string(Separability s) {
    switch (s) {
    case Separability::high: return "high";
    case Separability::medium: return "medium";
    case Separability::none: return "none";
    }
    return "unknown";
}

namespace detail {

inline std::string builtin_class_name(std::size_t i) {
    // Browsers first so the browser task suites work out of the box.
    static const char *kNames[] = {
        "chrome.exe",    "firefox.exe",  "iexplore.exe",      "msedge.exe",
        "svchost.exe",   "outlook.exe",  "teams.exe",         "onedrive.exe",
        "spoolsv.exe",   "searchindexer.exe", "lsass.exe",    "powershell.exe",
        "explorer.exe",  "winword.exe",  "excel.exe",         "wmiprvse.exe",
    };
    constexpr std::size_t n = sizeof(kNames) / sizeof(kNames[0]);
    if (i < n) return kNames[i];
    char buf[32];
    std::snprintf(buf, sizeof buf, "proc%03zu.exe", i);
    return buf;
}

inline ProcessProfile baseline_profile() {
    ProcessProfile p;
    p.tcp_fraction = 0.6;
    p.pkt_size_sent = {6.2, 0.5};
    p.pkt_size_recv = {6.8, 0.6};
    p.send_recv_ratio = 0.5;
    p.rates[EventKind::accept] = 1.0;
    p.rates[EventKind::connect] = 1.5;
    p.rates[EventKind::reconnect] = 0.2;
    p.rates[EventKind::disconnect] = 1.5;
    p.rates[EventKind::retransmit] = 0.5;
    p.rates[EventKind::copy] = 1.0;
    p.with_data_rate(30.0);
    return p;
}

/// Strongly separated parameters: several independent cycling wheels so any
/// two class indices disagree on at least one high-signal dimension.
inline ProcessProfile high_profile(std::size_t i) {
    ProcessProfile p;
    p.tcp_fraction = (i % 2 == 0) ? 0.95 : 0.10;
    p.pkt_size_sent = {5.0 + 1.1 * static_cast<double>((i / 2) % 5),
                       0.40 + 0.02 * static_cast<double>(i % 3)};
    p.pkt_size_recv = {5.4 + 1.1 * static_cast<double>((i / 2 + 2) % 5),
                       0.50 + 0.02 * static_cast<double>(i % 3)};
    p.send_recv_ratio = 0.20 + 0.15 * static_cast<double>(i % 5);
    p.rates[EventKind::accept] = (i % 3 == 0) ? 8.0 : 0.3;
    p.rates[EventKind::connect] = (i % 3 == 1) ? 10.0 : 0.5;
    p.rates[EventKind::reconnect] = (i % 4 == 2) ? 4.0 : 0.05;
    p.rates[EventKind::disconnect] = 0.5 + 3.0 * static_cast<double>((i + 1) % 3);
    p.rates[EventKind::retransmit] = 1.2 * static_cast<double>(i % 5);
    p.rates[EventKind::copy] = 2.5 * static_cast<double>((i + 2) % 4);
    p.with_data_rate(15.0 * (1.0 + static_cast<double>((i * 3) % 7)));
    return p;
}

inline double lerp(double a, double b, double t) { return a + (b - a) * t; }

inline ProcessProfile blend_profiles(const ProcessProfile &a, const ProcessProfile &b,
                                     double t) {
    ProcessProfile out;
    out.tcp_fraction = lerp(a.tcp_fraction, b.tcp_fraction, t);
    out.pkt_size_sent = {lerp(a.pkt_size_sent.mu, b.pkt_size_sent.mu, t),
                         lerp(a.pkt_size_sent.sigma, b.pkt_size_sent.sigma, t)};
    out.pkt_size_recv = {lerp(a.pkt_size_recv.mu, b.pkt_size_recv.mu, t),
                         lerp(a.pkt_size_recv.sigma, b.pkt_size_recv.sigma, t)};
    out.send_recv_ratio = lerp(a.send_recv_ratio, b.send_recv_ratio, t);
    for (std::size_t ki = 0; ki < kEventKindCount; ++ki) {
        EventKind k = static_cast<EventKind>(ki);
        double rate = lerp(a.rate(k), b.rate(k), t);
        if (rate > 0.0) out.rates[k] = rate;
    }
    return out;
}

}  // namespace detail

/// Deterministic built-in profile families. `high` spreads classes far
/// apart, `none` repeats one profile under different names (chance-level
/// by construction), `medium` is the halfway blend.
inline std::vector<ProcessProfile> builtin_profiles(Separability separability,
                                                    std::size_t n_classes) {
    if (n_classes < 2)
        fail(ErrorCategory::validation, "builtin_profiles needs n_classes >= 2");
    std::vector<ProcessProfile> out;
    out.reserve(n_classes);
    for (std::size_t i = 0; i < n_classes; ++i) {
        ProcessProfile p;
        switch (separability) {
        case Separability::high:
            p = detail::high_profile(i);
            break;
        case Separability::none:
            p = detail::baseline_profile();
            break;
        case Separability::medium:
            p = detail::blend_profiles(detail::baseline_profile(),
                                       detail::high_profile(i), 0.5);
            break;
        }
        p.name = detail::builtin_class_name(i);
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace procflow
