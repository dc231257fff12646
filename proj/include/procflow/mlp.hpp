#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "procflow/common.hpp"
#include "procflow/rng.hpp"

namespace procflow {

inline constexpr double kBatchNormEps = 1e-5;

/// Five layer sizes: input, three hidden, output.
struct MLPArchitecture {
    std::vector<std::size_t> layer_sizes;

    std::size_t input_dim() const { return layer_sizes.front(); }
    std::size_t n_classes() const { return layer_sizes.back(); }

    void validate() const {
        if (layer_sizes.size() != 5)
            fail(ErrorCategory::shape, "architecture must have 5 layer sizes");
        for (std::size_t s : layer_sizes)
            if (s == 0) fail(ErrorCategory::shape, "layer sizes must be positive");
    }
};

/// Hidden sizes interpolate log-linearly between input and output width:
/// h_i = round(exp(ln(in) + i*(ln(out) - ln(in))/4)), i = 1..3, rounded half
/// away from zero, floored at 1.  When in >= out no hidden layer drops below
/// the output width.
inline MLPArchitecture make_architecture(std::size_t input_dim,
                                         std::size_t n_classes) {
    if (input_dim < 1) fail(ErrorCategory::validation, "input_dim must be >= 1");
    if (n_classes < 2) fail(ErrorCategory::validation, "n_classes must be >= 2");
    MLPArchitecture arch;
    arch.layer_sizes.push_back(input_dim);
    const double lo = std::log(static_cast<double>(input_dim));
    const double hi = std::log(static_cast<double>(n_classes));
    for (int i = 1; i <= 3; ++i) {
        double h = std::exp(lo + i * (hi - lo) / 4.0);
        auto rounded = static_cast<std::size_t>(std::max<long long>(1, std::llround(h)));
        if (input_dim >= n_classes) rounded = std::max(rounded, n_classes);
        arch.layer_sizes.push_back(rounded);
    }
    arch.layer_sizes.push_back(n_classes);
    return arch;
}

struct DenseLayer {
    Matrix weight;  // out x in, row-major
    std::vector<double> bias;
};

struct BatchNormLayer {
    std::vector<double> gamma;
    std::vector<double> beta;
    std::vector<double> running_mean;
    std::vector<double> running_var;
};

struct MLPParams {
    MLPArchitecture arch;
    std::vector<DenseLayer> layers;     // 4 affine layers
    std::vector<BatchNormLayer> norms;  // 3, one per hidden layer
    std::uint64_t revision = 0;         // bumped by every optimizer step
};

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t batch_size = 256;
    std::size_t epochs = 20;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double bn_momentum = 0.9;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(learning_rate > 0))
            fail(ErrorCategory::config, "learning_rate must be > 0");
        if (batch_size < 1) fail(ErrorCategory::config, "batch_size must be >= 1");
        if (epochs < 1) fail(ErrorCategory::config, "epochs must be >= 1");
        if (!(beta1 > 0 && beta1 < 1 && beta2 > 0 && beta2 < 1))
            fail(ErrorCategory::config, "beta1 and beta2 must be in (0,1)");
        if (!(epsilon > 0)) fail(ErrorCategory::config, "epsilon must be > 0");
        if (!(bn_momentum >= 0 && bn_momentum < 1))
            fail(ErrorCategory::config, "bn_momentum must be in [0,1)");
    }
};

/// Weights N(0, sqrt(2/fan_in)), zero biases, identity batch norm.
inline MLPParams init_params(const MLPArchitecture &arch, std::uint64_t seed) {
    arch.validate();
    MLPParams params;
    params.arch = arch;
    Rng rng(derive_seed(seed, "init"));
    for (std::size_t l = 0; l + 1 < arch.layer_sizes.size(); ++l) {
        const std::size_t in = arch.layer_sizes[l];
        const std::size_t out = arch.layer_sizes[l + 1];
        DenseLayer layer;
        layer.weight = Matrix(out, in);
        const double sd = std::sqrt(2.0 / static_cast<double>(in));
        for (double &w : layer.weight.data()) w = rng.normal(0.0, sd);
        layer.bias.assign(out, 0.0);
        params.layers.push_back(std::move(layer));
        if (l + 2 < arch.layer_sizes.size()) {
            BatchNormLayer norm;
            norm.gamma.assign(out, 1.0);
            norm.beta.assign(out, 0.0);
            norm.running_mean.assign(out, 0.0);
            norm.running_var.assign(out, 1.0);
            params.norms.push_back(std::move(norm));
        }
    }
    return params;
}

enum class MlpMode { train, eval };

struct ForwardCache {
    bool train_mode = false;
    std::uint64_t revision = 0;
    Matrix input;
    std::vector<Matrix> xhat;                   // per hidden layer
    std::vector<Matrix> act;                    // post-ReLU per hidden layer
    std::vector<std::vector<double>> inv_std;   // per hidden layer
    std::vector<std::vector<double>> batch_mean;
    std::vector<std::vector<double>> batch_var;
    Matrix probs;
};

namespace detail {

/// z = x * W^T + b, summation order fixed (ascending input index).
inline Matrix affine(const Matrix &x, const DenseLayer &layer) {
    const std::size_t n = x.rows(), in = x.cols(), out = layer.bias.size();
    if (layer.weight.cols() != in)
        fail(ErrorCategory::shape,
             "affine: input width " + std::to_string(in) + " != weight width " +
                 std::to_string(layer.weight.cols()));
    Matrix z(n, out);
    for (std::size_t r = 0; r < n; ++r) {
        auto xr = x.row(r);
        auto zr = z.row(r);
        for (std::size_t o = 0; o < out; ++o) {
            auto wr = layer.weight.row(o);
            double acc = layer.bias[o];
            for (std::size_t i = 0; i < in; ++i) acc += xr[i] * wr[i];
            zr[o] = acc;
        }
    }
    return z;
}

inline ForwardCache run_forward(const MLPParams &params, const Matrix &batch,
                                MlpMode mode) {
    params.arch.validate();
    if (batch.cols() != params.arch.input_dim())
        fail(ErrorCategory::shape,
             "forward: batch has " + std::to_string(batch.cols()) +
                 " features, network expects " +
                 std::to_string(params.arch.input_dim()));
    if (batch.rows() == 0)
        fail(ErrorCategory::validation, "forward: empty batch");

    const std::size_t n = batch.rows();
    const bool train = mode == MlpMode::train;
    ForwardCache cache;
    cache.train_mode = train;
    cache.revision = params.revision;
    cache.input = batch;

    Matrix x = batch;
    for (std::size_t j = 0; j < params.norms.size(); ++j) {
        Matrix z = affine(x, params.layers[j]);
        const std::size_t width = z.cols();
        const BatchNormLayer &norm = params.norms[j];

        std::vector<double> mean(width, 0.0), var(width, 0.0), inv_std(width);
        if (train) {
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t u = 0; u < width; ++u) mean[u] += z.at(r, u);
            for (double &m : mean) m /= static_cast<double>(n);
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t u = 0; u < width; ++u) {
                    const double d = z.at(r, u) - mean[u];
                    var[u] += d * d;
                }
            for (double &v : var) v /= static_cast<double>(n);
        } else {
            mean = norm.running_mean;
            var = norm.running_var;
        }
        for (std::size_t u = 0; u < width; ++u)
            inv_std[u] = 1.0 / std::sqrt(var[u] + kBatchNormEps);

        Matrix xhat(n, width), act(n, width);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t u = 0; u < width; ++u) {
                const double h = (z.at(r, u) - mean[u]) * inv_std[u];
                xhat.at(r, u) = h;
                act.at(r, u) = std::max(0.0, norm.gamma[u] * h + norm.beta[u]);
            }

        cache.xhat.push_back(std::move(xhat));
        cache.inv_std.push_back(std::move(inv_std));
        if (train) {
            cache.batch_mean.push_back(std::move(mean));
            cache.batch_var.push_back(std::move(var));
        }
        cache.act.push_back(act);
        x = std::move(act);
    }

    Matrix logits = affine(x, params.layers.back());
    cache.probs = Matrix(n, logits.cols());
    for (std::size_t r = 0; r < n; ++r) {
        auto lr = logits.row(r);
        auto pr = cache.probs.row(r);
        const double mx = *std::max_element(lr.begin(), lr.end());
        double sum = 0.0;
        for (std::size_t c = 0; c < lr.size(); ++c) {
            pr[c] = std::exp(lr[c] - mx);
            sum += pr[c];
        }
        if (!std::isfinite(sum) || sum <= 0.0)
            fail(ErrorCategory::internal, "non-finite activations in forward pass");
        for (double &p : pr) p /= sum;
    }
    return cache;
}

}  // namespace detail

/// Train mode normalizes by batch statistics and folds them into the running
/// stats; eval mode reads the running stats and leaves params untouched.
inline ForwardCache forward(MLPParams &params, const Matrix &batch, MlpMode mode,
                            double bn_momentum = 0.9) {
    ForwardCache cache = detail::run_forward(params, batch, mode);
    if (mode == MlpMode::train) {
        for (std::size_t j = 0; j < params.norms.size(); ++j) {
            BatchNormLayer &norm = params.norms[j];
            for (std::size_t u = 0; u < norm.running_mean.size(); ++u) {
                norm.running_mean[u] = bn_momentum * norm.running_mean[u] +
                                       (1.0 - bn_momentum) * cache.batch_mean[j][u];
                norm.running_var[u] = bn_momentum * norm.running_var[u] +
                                      (1.0 - bn_momentum) * cache.batch_var[j][u];
            }
        }
    }
    return cache;
}

/// Pure eval-mode class probabilities.
inline Matrix predict_proba(const MLPParams &params, const Matrix &batch) {
    return detail::run_forward(params, batch, MlpMode::eval).probs;
}

/// Per-row argmax class indices, ties to the lowest index.
inline std::vector<std::size_t> predict_mlp(const MLPParams &params,
                                            const Matrix &batch) {
    Matrix probs = predict_proba(params, batch);
    std::vector<std::size_t> out(probs.rows());
    for (std::size_t r = 0; r < probs.rows(); ++r) {
        auto pr = probs.row(r);
        out[r] = static_cast<std::size_t>(
            std::max_element(pr.begin(), pr.end()) - pr.begin());
    }
    return out;
}

/// Mean over the batch of -ln(p[label]), p clamped to >= 1e-12.
inline double loss(const Matrix &probs, std::span<const std::size_t> labels) {
    if (probs.rows() != labels.size())
        fail(ErrorCategory::shape, "loss: probability rows != label count");
    double total = 0.0;
    for (std::size_t r = 0; r < probs.rows(); ++r) {
        if (labels[r] >= probs.cols())
            fail(ErrorCategory::validation, "loss: label index out of range");
        total += -std::log(std::max(probs.at(r, labels[r]), 1e-12));
    }
    return total / static_cast<double>(probs.rows());
}

struct MLPGradients {
    std::vector<Matrix> weight;
    std::vector<std::vector<double>> bias;
    std::vector<std::vector<double>> gamma;
    std::vector<std::vector<double>> beta;
};

/// Gradients of the mean cross-entropy for every weight, bias, gamma, beta.
/// The cache must come from a train-mode forward under the current params.
inline MLPGradients backward(const MLPParams &params, const ForwardCache &cache,
                             std::span<const std::size_t> labels) {
    if (!cache.train_mode)
        fail(ErrorCategory::internal, "backward requires a train-mode cache");
    if (cache.revision != params.revision)
        fail(ErrorCategory::internal,
             "stale forward cache: parameters changed since the forward pass");
    const std::size_t n = cache.input.rows();
    if (labels.size() != n)
        fail(ErrorCategory::shape, "backward: label count != batch rows");

    MLPGradients grads;
    grads.weight.resize(params.layers.size());
    grads.bias.resize(params.layers.size());
    grads.gamma.resize(params.norms.size());
    grads.beta.resize(params.norms.size());

    // softmax with cross-entropy: dlogit = (p - onehot)/n
    Matrix delta(n, cache.probs.cols());
    for (std::size_t r = 0; r < n; ++r) {
        if (labels[r] >= cache.probs.cols())
            fail(ErrorCategory::validation, "backward: label index out of range");
        for (std::size_t c = 0; c < cache.probs.cols(); ++c)
            delta.at(r, c) = cache.probs.at(r, c) / static_cast<double>(n);
        delta.at(r, labels[r]) -= 1.0 / static_cast<double>(n);
    }

    for (std::size_t l = params.layers.size(); l-- > 0;) {
        const DenseLayer &layer = params.layers[l];
        const Matrix &input = l == 0 ? cache.input : cache.act[l - 1];
        const std::size_t out = layer.bias.size(), in = layer.weight.cols();

        Matrix dw(out, in);
        std::vector<double> db(out, 0.0);
        for (std::size_t r = 0; r < n; ++r) {
            auto dr = delta.row(r);
            auto xr = input.row(r);
            for (std::size_t o = 0; o < out; ++o) {
                db[o] += dr[o];
                auto dwr = dw.row(o);
                for (std::size_t i = 0; i < in; ++i) dwr[i] += dr[o] * xr[i];
            }
        }
        grads.weight[l] = std::move(dw);
        grads.bias[l] = std::move(db);
        if (l == 0) break;

        // propagate to the previous activation: dx = delta * W
        Matrix dx(n, in);
        for (std::size_t r = 0; r < n; ++r) {
            auto dr = delta.row(r);
            auto dxr = dx.row(r);
            for (std::size_t i = 0; i < in; ++i) {
                double acc = 0.0;
                for (std::size_t o = 0; o < out; ++o)
                    acc += dr[o] * layer.weight.at(o, i);
                dxr[i] = acc;
            }
        }

        // through ReLU then batch norm of hidden layer l-1
        const std::size_t j = l - 1;
        const BatchNormLayer &norm = params.norms[j];
        const Matrix &xhat = cache.xhat[j];
        const Matrix &act = cache.act[j];
        const std::size_t width = norm.gamma.size();

        std::vector<double> dgamma(width, 0.0), dbeta(width, 0.0);
        std::vector<double> sum_dxhat(width, 0.0), sum_dxhat_xhat(width, 0.0);
        Matrix dy(n, width);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t u = 0; u < width; ++u) {
                const double g = act.at(r, u) > 0.0 ? dx.at(r, u) : 0.0;
                dy.at(r, u) = g;
                dgamma[u] += g * xhat.at(r, u);
                dbeta[u] += g;
                const double dxh = g * norm.gamma[u];
                sum_dxhat[u] += dxh;
                sum_dxhat_xhat[u] += dxh * xhat.at(r, u);
            }

        Matrix dz(n, width);
        const double dn = static_cast<double>(n);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t u = 0; u < width; ++u) {
                const double dxh = dy.at(r, u) * norm.gamma[u];
                dz.at(r, u) = cache.inv_std[j][u] / dn *
                              (dn * dxh - sum_dxhat[u] -
                               xhat.at(r, u) * sum_dxhat_xhat[u]);
            }
        grads.gamma[j] = std::move(dgamma);
        grads.beta[j] = std::move(dbeta);
        delta = std::move(dz);
    }
    return grads;
}

struct NadamState {
    std::size_t t = 0;
    std::vector<Matrix> m_weight, v_weight;
    std::vector<std::vector<double>> m_bias, v_bias;
    std::vector<std::vector<double>> m_gamma, v_gamma;
    std::vector<std::vector<double>> m_beta, v_beta;

    bool initialized() const { return !m_weight.empty(); }

    void init_like(const MLPParams &params) {
        auto zeros_like_vecs = [](const auto &src) {
            std::vector<std::vector<double>> out;
            for (const auto &v : src) out.emplace_back(v.size(), 0.0);
            return out;
        };
        for (const auto &layer : params.layers) {
            m_weight.emplace_back(layer.weight.rows(), layer.weight.cols());
            v_weight.emplace_back(layer.weight.rows(), layer.weight.cols());
            m_bias.emplace_back(layer.bias.size(), 0.0);
            v_bias.emplace_back(layer.bias.size(), 0.0);
        }
        std::vector<std::vector<double>> gammas, betas;
        for (const auto &norm : params.norms) {
            gammas.push_back(norm.gamma);
            betas.push_back(norm.beta);
        }
        m_gamma = zeros_like_vecs(gammas);
        v_gamma = zeros_like_vecs(gammas);
        m_beta = zeros_like_vecs(betas);
        v_beta = zeros_like_vecs(betas);
    }
};

namespace detail {

/// One Nesterov-Adam element: moments updated in place, returns the step.
inline double nadam_element(double g, double &m, double &v, std::size_t t,
                            const TrainConfig &cfg) {
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
    const double td = static_cast<double>(t);
    const double m_hat = m / (1.0 - std::pow(cfg.beta1, td + 1.0));
    const double g_hat = g / (1.0 - std::pow(cfg.beta1, td));
    const double v_hat = v / (1.0 - std::pow(cfg.beta2, td));
    return cfg.learning_rate * (cfg.beta1 * m_hat + (1.0 - cfg.beta1) * g_hat) /
           (std::sqrt(v_hat) + cfg.epsilon);
}

inline void nadam_apply(std::vector<double> &p, const std::vector<double> &g,
                        std::vector<double> &m, std::vector<double> &v,
                        std::size_t t, const TrainConfig &cfg) {
    for (std::size_t i = 0; i < p.size(); ++i)
        p[i] -= nadam_element(g[i], m[i], v[i], t, cfg);
}

}  // namespace detail

inline void nadam_step(MLPParams &params, const MLPGradients &grads,
                       NadamState &state, const TrainConfig &cfg) {
    if (!state.initialized()) state.init_like(params);
    state.t += 1;
    const std::size_t t = state.t;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        detail::nadam_apply(params.layers[l].weight.data(),
                            grads.weight[l].data(), state.m_weight[l].data(),
                            state.v_weight[l].data(), t, cfg);
        detail::nadam_apply(params.layers[l].bias, grads.bias[l],
                            state.m_bias[l], state.v_bias[l], t, cfg);
    }
    for (std::size_t j = 0; j < params.norms.size(); ++j) {
        detail::nadam_apply(params.norms[j].gamma, grads.gamma[j],
                            state.m_gamma[j], state.v_gamma[j], t, cfg);
        detail::nadam_apply(params.norms[j].beta, grads.beta[j],
                            state.m_beta[j], state.v_beta[j], t, cfg);
    }
    params.revision += 1;
}

struct TrainResult {
    MLPParams params;
    std::vector<double> epoch_loss;  // mean batch loss per epoch
};

/// Full training loop: He init, per-epoch reshuffle from one derived stream,
/// Nesterov-Adam on mean cross-entropy, final partial batch kept.
inline TrainResult train_mlp(const Matrix &inputs,
                             std::span<const std::size_t> labels,
                             const MLPArchitecture &arch,
                             const TrainConfig &cfg = {}) {
    cfg.validate();
    arch.validate();
    if (inputs.rows() == 0)
        fail(ErrorCategory::validation, "train_mlp: empty training set");
    if (inputs.rows() != labels.size())
        fail(ErrorCategory::shape, "train_mlp: input rows != label count");
    if (inputs.cols() != arch.input_dim())
        fail(ErrorCategory::shape, "train_mlp: input width != architecture input");
    for (std::size_t l : labels)
        if (l >= arch.n_classes())
            fail(ErrorCategory::validation, "train_mlp: label index out of range");
    for (double v : inputs.data())
        if (!std::isfinite(v))
            fail(ErrorCategory::validation, "train_mlp: non-finite input value");

    TrainResult result;
    result.params = init_params(arch, cfg.seed);
    NadamState state;
    Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));

    const std::size_t n = inputs.rows();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    std::vector<std::size_t> batch_labels;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_total = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t len = std::min(cfg.batch_size, n - start);
            Matrix batch(len, inputs.cols());
            batch_labels.resize(len);
            for (std::size_t i = 0; i < len; ++i) {
                auto src = inputs.row(order[start + i]);
                std::copy(src.begin(), src.end(), batch.row(i).begin());
                batch_labels[i] = labels[order[start + i]];
            }
            ForwardCache cache =
                forward(result.params, batch, MlpMode::train, cfg.bn_momentum);
            const double batch_loss = loss(cache.probs, batch_labels);
            if (!std::isfinite(batch_loss))
                fail(ErrorCategory::internal, "non-finite training loss");
            epoch_total += batch_loss;
            ++batches;
            MLPGradients grads = backward(result.params, cache, batch_labels);
            nadam_step(result.params, grads, state, cfg);
        }
        result.epoch_loss.push_back(epoch_total / static_cast<double>(batches));
    }
    return result;
}

inline nlohmann::json mlp_to_json(const MLPParams &params) {
    auto flatten = [](const Matrix &m) {
        return std::vector<double>(m.data().begin(), m.data().end());
    };
    nlohmann::json weights = nlohmann::json::array();
    nlohmann::json biases = nlohmann::json::array();
    for (const auto &layer : params.layers) {
        weights.push_back(flatten(layer.weight));
        biases.push_back(layer.bias);
    }
    nlohmann::json gamma = nlohmann::json::array(),
                   beta = nlohmann::json::array(),
                   running_mean = nlohmann::json::array(),
                   running_var = nlohmann::json::array();
    for (const auto &norm : params.norms) {
        gamma.push_back(norm.gamma);
        beta.push_back(norm.beta);
        running_mean.push_back(norm.running_mean);
        running_var.push_back(norm.running_var);
    }
    return nlohmann::json{{"version", 1},
                          {"model", "mlp"},
                          {"layer_sizes", params.arch.layer_sizes},
                          {"weights", std::move(weights)},
                          {"biases", std::move(biases)},
                          {"gamma", std::move(gamma)},
                          {"beta", std::move(beta)},
                          {"running_mean", std::move(running_mean)},
                          {"running_var", std::move(running_var)}};
}

inline MLPParams mlp_from_json(const nlohmann::json &j) {
    if (j.at("version").get<int>() != 1)
        fail(ErrorCategory::parse, "unsupported mlp version");
    MLPParams params;
    params.arch.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
    params.arch.validate();
    const auto &weights = j.at("weights");
    const auto &biases = j.at("biases");
    if (weights.size() != 4 || biases.size() != 4)
        fail(ErrorCategory::parse, "mlp JSON must carry 4 affine layers");
    for (std::size_t l = 0; l < 4; ++l) {
        const std::size_t in = params.arch.layer_sizes[l];
        const std::size_t out = params.arch.layer_sizes[l + 1];
        DenseLayer layer;
        auto flat = weights[l].get<std::vector<double>>();
        if (flat.size() != in * out)
            fail(ErrorCategory::parse, "mlp weight array has wrong length");
        layer.weight = Matrix(out, in);
        std::copy(flat.begin(), flat.end(), layer.weight.data().begin());
        layer.bias = biases[l].get<std::vector<double>>();
        if (layer.bias.size() != out)
            fail(ErrorCategory::parse, "mlp bias array has wrong length");
        params.layers.push_back(std::move(layer));
    }
    for (std::size_t n = 0; n < 3; ++n) {
        BatchNormLayer norm;
        norm.gamma = j.at("gamma")[n].get<std::vector<double>>();
        norm.beta = j.at("beta")[n].get<std::vector<double>>();
        norm.running_mean = j.at("running_mean")[n].get<std::vector<double>>();
        norm.running_var = j.at("running_var")[n].get<std::vector<double>>();
        const std::size_t width = params.arch.layer_sizes[n + 1];
        if (norm.gamma.size() != width || norm.beta.size() != width ||
            norm.running_mean.size() != width || norm.running_var.size() != width)
            fail(ErrorCategory::parse, "mlp batch-norm arrays have wrong length");
        for (double v : norm.running_var)
            if (v < 0)
                fail(ErrorCategory::parse, "mlp running variance must be >= 0");
        params.norms.push_back(std::move(norm));
    }
    return params;
}

}  // namespace procflow
