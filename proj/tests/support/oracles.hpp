#pragma once

// Independent re-implementations used as oracles. Deliberately straight-line
// and organized differently from the library code they check.

#include <array>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include <procflow/procflow.hpp>

namespace oracle {

/// Re-sums one bucket field by field, in CSV column order.
inline std::array<double, procflow::kFeatureCount> aggregate(
    const std::vector<procflow::NetworkEvent> &bucket) {
    using procflow::EventKind;
    using procflow::Protocol;

    auto sum_bytes = [&](Protocol proto, EventKind kind) {
        double s = 0;
        for (const auto &e : bucket)
            if (e.proto == proto && e.kind == kind) s += static_cast<double>(e.bytes);
        return s;
    };
    auto sum_pkts = [&](Protocol proto, EventKind kind) {
        double s = 0;
        for (const auto &e : bucket)
            if (e.proto == proto && e.kind == kind)
                s += static_cast<double>(e.packets);
        return s;
    };
    auto count_kind = [&](EventKind kind) {
        double s = 0;
        for (const auto &e : bucket)
            if (e.proto == Protocol::tcp && e.kind == kind) s += 1;
        return s;
    };

    const double tbs = sum_bytes(Protocol::tcp, EventKind::send);
    const double tbr = sum_bytes(Protocol::tcp, EventKind::receive);
    const double tps = sum_pkts(Protocol::tcp, EventKind::send);
    const double tpr = sum_pkts(Protocol::tcp, EventKind::receive);
    const double ubs = sum_bytes(Protocol::udp, EventKind::send);
    const double ubr = sum_bytes(Protocol::udp, EventKind::receive);
    const double ups = sum_pkts(Protocol::udp, EventKind::send);
    const double upr = sum_pkts(Protocol::udp, EventKind::receive);
    const double cb = sum_bytes(Protocol::tcp, EventKind::copy);
    const double cp = sum_pkts(Protocol::tcp, EventKind::copy);

    double protocol;
    if (tps + tpr + ups + upr > 0) {
        protocol = (tps + tpr >= ups + upr) ? 0.0 : 1.0;
    } else {
        double tcp_events = 0, udp_events = 0;
        for (const auto &e : bucket)
            (e.proto == Protocol::tcp ? tcp_events : udp_events) += 1;
        protocol = tcp_events >= udp_events ? 0.0 : 1.0;
    }

    auto avg = [](double bytes, double pkts) { return pkts > 0 ? bytes / pkts : 0.0; };

    return {
        protocol,
        tbs + ubs,
        avg(tbs + tbr + ubs + ubr, tps + tpr + ups + upr),
        tbs,
        tbr,
        tps,
        tpr,
        avg(tbs + tbr, tps + tpr),
        cb,
        cp,
        ubs,
        ubr,
        ups,
        upr,
        avg(ubs + ubr, ups + upr),
        (tbs + 1.0) / (ubs + 1.0),
        (tbr + 1.0) / (ubr + 1.0),
        (tps + 1.0) / (ups + 1.0),
        (tpr + 1.0) / (upr + 1.0),
        static_cast<double>(bucket.size()),
        count_kind(EventKind::accept),
        count_kind(EventKind::connect),
        count_kind(EventKind::reconnect),
        count_kind(EventKind::disconnect),
        count_kind(EventKind::receive),
        count_kind(EventKind::retransmit),
    };
}

/// Straight-line MLP forward pass, one sample and one unit at a time.
inline procflow::Matrix mlp_forward(const procflow::MLPParams &p,
                                    const procflow::Matrix &x, bool train_mode) {
    const std::size_t n = x.rows();
    std::vector<std::vector<double>> cur(n);
    for (std::size_t r = 0; r < n; ++r)
        cur[r].assign(x.row(r).begin(), x.row(r).end());

    for (std::size_t layer = 0; layer < 3; ++layer) {
        const auto &dense = p.layers[layer];
        const auto &norm = p.norms[layer];
        const std::size_t width = dense.bias.size();

        std::vector<std::vector<double>> z(n, std::vector<double>(width));
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t u = 0; u < width; ++u) {
                double acc = dense.bias[u];
                for (std::size_t i = 0; i < cur[r].size(); ++i)
                    acc += dense.weight.at(u, i) * cur[r][i];
                z[r][u] = acc;
            }

        std::vector<double> mean(width), var(width);
        if (train_mode) {
            for (std::size_t u = 0; u < width; ++u) {
                double m = 0;
                for (std::size_t r = 0; r < n; ++r) m += z[r][u];
                m /= static_cast<double>(n);
                double v = 0;
                for (std::size_t r = 0; r < n; ++r)
                    v += (z[r][u] - m) * (z[r][u] - m);
                v /= static_cast<double>(n);
                mean[u] = m;
                var[u] = v;
            }
        } else {
            mean = norm.running_mean;
            var = norm.running_var;
        }

        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t u = 0; u < width; ++u) {
                double xhat = (z[r][u] - mean[u]) /
                              std::sqrt(var[u] + procflow::kBatchNormEps);
                double y = norm.gamma[u] * xhat + norm.beta[u];
                z[r][u] = y > 0 ? y : 0;
            }
        cur = std::move(z);
    }

    const auto &out_layer = p.layers[3];
    const std::size_t k = out_layer.bias.size();
    procflow::Matrix probs(n, k);
    for (std::size_t r = 0; r < n; ++r) {
        std::vector<double> logits(k);
        for (std::size_t u = 0; u < k; ++u) {
            double acc = out_layer.bias[u];
            for (std::size_t i = 0; i < cur[r].size(); ++i)
                acc += out_layer.weight.at(u, i) * cur[r][i];
            logits[u] = acc;
        }
        double mx = logits[0];
        for (double v : logits) mx = std::max(mx, v);
        double denom = 0;
        for (double v : logits) denom += std::exp(v - mx);
        for (std::size_t u = 0; u < k; ++u)
            probs.at(r, u) = std::exp(logits[u] - mx) / denom;
    }
    return probs;
}

/// Scalar Nesterov-Adam, one parameter, for checking the vectorized update.
struct ScalarNadam {
    double m = 0.0;
    double v = 0.0;
    std::size_t t = 0;

    double step(double g, double lr, double b1, double b2, double eps) {
        t += 1;
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        const double td = static_cast<double>(t);
        const double mhat = m / (1.0 - std::pow(b1, td + 1.0));
        const double ghat = g / (1.0 - std::pow(b1, td));
        const double vhat = v / (1.0 - std::pow(b2, td));
        return lr * (b1 * mhat + (1.0 - b1) * ghat) / (std::sqrt(vhat) + eps);
    }
};

/// Recursive forest re-traversal; the library walks iteratively.
inline void tree_accumulate(const procflow::TreeNode &node,
                            std::span<const double> x, std::vector<double> &acc) {
    if (node.is_leaf()) {
        for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += node.histogram[c];
        return;
    }
    tree_accumulate(x[node.feature] <= node.threshold ? *node.left : *node.right, x,
                    acc);
}

inline std::vector<double> forest_probs(const procflow::Forest &forest,
                                        std::span<const double> x) {
    std::vector<double> acc(forest.class_names.size(), 0.0);
    for (const auto &tree : forest.trees) tree_accumulate(*tree, x, acc);
    const double inv = 1.0 / static_cast<double>(forest.trees.size());
    for (double &a : acc) a *= inv;
    return acc;
}

/// Central finite difference of a scalar function at the current value.
inline double fd_gradient(const std::function<double()> &loss_fn, double &param,
                          double step) {
    const double saved = param;
    param = saved + step;
    const double plus = loss_fn();
    param = saved - step;
    const double minus = loss_fn();
    param = saved;
    return (plus - minus) / (2.0 * step);
}

/// Relative error with an absolute floor so near-zero pairs compare sanely.
inline double rel_error(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

}  // namespace oracle
