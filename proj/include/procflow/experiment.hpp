#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "procflow/common.hpp"
#include "procflow/dataset.hpp"
#include "procflow/events.hpp"
#include "procflow/features.hpp"
#include "procflow/forest.hpp"
#include "procflow/metrics.hpp"
#include "procflow/mlp.hpp"
#include "procflow/rng.hpp"

namespace procflow {

enum class Suite { browser_binary, browser_fingerprint, browser_combined, top_n_sweep };

inline const char *to_string(Suite s) {
    switch (s) {
    case Suite::browser_binary: return "browser_binary";
    case Suite::browser_fingerprint: return "browser_fingerprint";
    case Suite::browser_combined: return "browser_combined";
    case Suite::top_n_sweep: return "top_n_sweep";
    }
    return "unknown";
}

inline Suite suite_from_string(std::string_view s) {
    if (s == "browser_binary") return Suite::browser_binary;
    if (s == "browser_fingerprint") return Suite::browser_fingerprint;
    if (s == "browser_combined") return Suite::browser_combined;
    if (s == "top_n_sweep") return Suite::top_n_sweep;
    fail(ErrorCategory::config, "unknown suite \"" + std::string(s) + "\"");
}

struct ExperimentConfig {
    Suite suite = Suite::top_n_sweep;
    std::vector<std::size_t> top_n = {5, 10, 50, 100, 300, 500, 1000};
    bool run_rf = true;
    bool run_mlp = true;
    std::size_t cap = 50000;
    std::size_t min_count = 300;
    double train_fraction = 0.8;
    std::size_t bins = 64;
    bool bin_rf = false;  // override: feed bin indices to the forest too
    ForestConfig forest;
    TrainConfig mlp;
    std::uint64_t seed = 0;

    void validate() const {
        if (!run_rf && !run_mlp)
            fail(ErrorCategory::config, "experiment must run at least one model");
        if (suite == Suite::top_n_sweep && top_n.empty())
            fail(ErrorCategory::config, "top_n_sweep needs a non-empty N list");
        if (!(train_fraction > 0.0 && train_fraction < 1.0))
            fail(ErrorCategory::config, "train_fraction must be in (0,1)");
        forest.validate();
        mlp.validate();
    }
};

struct ExperimentCell {
    Suite suite = Suite::top_n_sweep;
    std::size_t top_n = 0;  // 0 when the suite has no N
    std::string model;      // "rf" or "mlp"
    EvalReport report;
};

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<ExperimentCell> cells;
};

namespace detail {

struct ExperimentTask {
    std::size_t top_n = 0;
    LabeledDataset data;
    LabelSpace space;
};

inline BrowserTask browser_mode(Suite suite) {
    switch (suite) {
    case Suite::browser_binary: return BrowserTask::binary;
    case Suite::browser_fingerprint: return BrowserTask::fingerprint;
    case Suite::browser_combined: return BrowserTask::combined;
    default: fail(ErrorCategory::internal, "not a browser suite");
    }
}

}  // namespace detail

/// One pipeline run per (task, model): task labeling, stratified split,
/// binning fit on train only, then each requested model trained and scored
/// on the held-out rows. Sub-seeds derive from (seed, stage, N).
inline ExperimentResult run_experiment(const LabeledDataset &data,
                                       const ExperimentConfig &config) {
    config.validate();
    data.validate();
    if (data.size() == 0)
        fail(ErrorCategory::config, "experiment input dataset is empty");

    std::vector<detail::ExperimentTask> tasks;
    if (config.suite == Suite::top_n_sweep) {
        LabeledDataset filtered = min_count_filter(data, config.min_count);
        Rng cap_rng(derive_seed(config.seed, "cap"));
        LabeledDataset capped = cap_per_class(filtered, config.cap, cap_rng);
        for (std::size_t n : config.top_n) {
            auto [labeled, space] = top_n_relabel(capped, n);
            tasks.push_back({n, std::move(labeled), std::move(space)});
        }
    } else {
        if (config.suite == Suite::browser_fingerprint) {
            std::set<std::string> browsers(default_browsers().begin(),
                                           default_browsers().end());
            bool any = std::any_of(
                data.labels.begin(), data.labels.end(),
                [&](const std::string &l) { return browsers.count(l) > 0; });
            if (!any)
                fail(ErrorCategory::config,
                     "browser_fingerprint needs browser-named classes in the input");
        }
        auto [labeled, space] =
            browser_labeling(data, detail::browser_mode(config.suite));
        tasks.push_back({0, std::move(labeled), std::move(space)});
    }

    ExperimentResult result;
    result.config = config;
    for (const auto &task : tasks) {
        Rng split_rng(derive_seed(config.seed, "split", task.top_n));
        auto [train, test] = split(task.data, config.train_fraction, split_rng);
        BinningModel binning = fit_binning(train.features, config.bins);

        if (config.run_rf) {
            ForestConfig fc = config.forest;
            fc.seed = derive_seed(config.seed, "rf", task.top_n);
            ExperimentCell cell;
            cell.suite = config.suite;
            cell.top_n = task.top_n;
            cell.model = "rf";
            if (config.bin_rf) {
                Forest forest =
                    train_forest(transform(binning, train), task.space, fc);
                cell.report = evaluate(forest, transform(binning, test));
            } else {
                Forest forest = train_forest(train, task.space, fc);
                cell.report = evaluate(forest, test);
            }
            result.cells.push_back(std::move(cell));
        }
        if (config.run_mlp) {
            TrainConfig tc = config.mlp;
            tc.seed = derive_seed(config.seed, "mlp", task.top_n);
            MLPArchitecture arch =
                make_architecture(train.features.cols(), task.space.size());
            Matrix x = transform_scaled(binning, train.features);
            auto y = label_indices(train, task.space);
            TrainResult trained = train_mlp(x, y, arch, tc);
            ExperimentCell cell;
            cell.suite = config.suite;
            cell.top_n = task.top_n;
            cell.model = "mlp";
            cell.report = evaluate(trained.params, binning, test, task.space);
            result.cells.push_back(std::move(cell));
        }
    }
    return result;
}

/// Headline table, one row per (task, model), percentages to two decimals.
inline std::string render_summary(const ExperimentResult &result) {
    std::string out;
    out += detail::pad("suite", 20);
    out += detail::pad("n", 6);
    out += detail::pad("model", 7);
    out += detail::pad("accuracy", 10);
    out += detail::pad("macro_precision", 17);
    out += "macro_recall\n";
    for (const auto &cell : result.cells) {
        out += detail::pad(to_string(cell.suite), 20);
        out += detail::pad(cell.top_n == 0 ? "-" : std::to_string(cell.top_n), 6);
        out += detail::pad(cell.model, 7);
        out += detail::pad(detail::format_percent(cell.report.accuracy), 10);
        out += detail::pad(detail::format_percent(cell.report.macro_precision), 17);
        out += detail::format_percent(cell.report.macro_recall);
        out += '\n';
    }
    return out;
}

inline nlohmann::json summary_to_json(const ExperimentResult &result) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto &cell : result.cells)
        cells.push_back({{"suite", to_string(cell.suite)},
                         {"n", cell.top_n},
                         {"model", cell.model},
                         {"accuracy", cell.report.accuracy},
                         {"macro_precision", cell.report.macro_precision},
                         {"macro_recall", cell.report.macro_recall}});
    return nlohmann::json{{"version", 1},
                          {"suite", to_string(result.config.suite)},
                          {"seed", result.config.seed},
                          {"cells", std::move(cells)}};
}

// ---------------------------------------------------------------------------
// Model bundles: what `train` writes and `eval` consumes. The task spec is
// persisted so evaluation can re-apply the same labeling to raw feature rows.

struct TaskSpec {
    std::string kind = "none";  // none|browser_binary|browser_fingerprint|
                                // browser_combined|top_n
    std::size_t top_n = 0;
    LabelSpace space;
};

inline nlohmann::json task_to_json(const TaskSpec &task) {
    return nlohmann::json{{"kind", task.kind},
                          {"top_n", task.top_n},
                          {"classes", task.space.classes},
                          {"has_other", task.space.has_other}};
}

inline TaskSpec task_from_json(const nlohmann::json &j) {
    TaskSpec task;
    task.kind = j.at("kind").get<std::string>();
    task.top_n = j.at("top_n").get<std::size_t>();
    task.space.classes = j.at("classes").get<std::vector<std::string>>();
    task.space.has_other = j.at("has_other").get<bool>();
    return task;
}

/// Relabels raw feature rows the way this task's training pipeline did.
inline LabeledDataset apply_task(const TaskSpec &task, const LabeledDataset &data) {
    data.validate();
    if (task.kind == "browser_binary")
        return browser_labeling(data, BrowserTask::binary).first;
    if (task.kind == "browser_fingerprint")
        return browser_labeling(data, BrowserTask::fingerprint).first;
    if (task.kind == "browser_combined")
        return browser_labeling(data, BrowserTask::combined).first;
    if (task.kind != "none" && task.kind != "top_n")
        fail(ErrorCategory::config, "unknown task kind \"" + task.kind + "\"");

    std::set<std::string> kept(task.space.classes.begin(), task.space.classes.end());
    if (task.space.has_other) kept.erase(kOtherClass);
    LabeledDataset out = data;
    for (auto &l : out.labels) {
        if (kept.count(l)) continue;
        if (task.space.has_other)
            l = kOtherClass;
        else
            fail(ErrorCategory::validation,
                 "label \"" + l + "\" is outside the model's label space");
    }
    return out;
}

struct ModelBundle {
    std::string model_kind;  // "rf" or "mlp"
    TaskSpec task;
    Forest forest;        // model_kind == rf
    MLPParams mlp;        // model_kind == mlp
    BinningModel binning;  // present for mlp (and binned rf)
    bool has_binning = false;
};

inline nlohmann::json bundle_to_json(const ModelBundle &bundle) {
    nlohmann::json j{{"version", 1},
                     {"model_kind", bundle.model_kind},
                     {"task", task_to_json(bundle.task)}};
    if (bundle.model_kind == "rf")
        j["forest"] = forest_to_json(bundle.forest);
    else if (bundle.model_kind == "mlp")
        j["mlp"] = mlp_to_json(bundle.mlp);
    else
        fail(ErrorCategory::internal, "bundle has unknown model kind");
    if (bundle.has_binning) j["binning"] = binning_to_json(bundle.binning);
    return j;
}

inline ModelBundle bundle_from_json(const nlohmann::json &j) {
    if (j.at("version").get<int>() != 1)
        fail(ErrorCategory::parse, "unsupported model bundle version");
    ModelBundle bundle;
    bundle.model_kind = j.at("model_kind").get<std::string>();
    bundle.task = task_from_json(j.at("task"));
    if (bundle.model_kind == "rf")
        bundle.forest = forest_from_json(j.at("forest"));
    else if (bundle.model_kind == "mlp")
        bundle.mlp = mlp_from_json(j.at("mlp"));
    else
        fail(ErrorCategory::parse, "unknown model kind in bundle");
    if (j.contains("binning")) {
        bundle.binning = binning_from_json(j.at("binning"));
        bundle.has_binning = true;
    }
    return bundle;
}

/// Scores a persisted model on raw labeled features, re-applying its task.
inline EvalReport evaluate_bundle(const ModelBundle &bundle,
                                  const LabeledDataset &raw) {
    LabeledDataset labeled = apply_task(bundle.task, raw);
    if (bundle.model_kind == "rf") {
        const LabeledDataset &input =
            bundle.has_binning ? transform(bundle.binning, labeled) : labeled;
        return evaluate(bundle.forest, input);
    }
    if (!bundle.has_binning)
        fail(ErrorCategory::parse, "mlp bundle is missing its binning model");
    return evaluate(bundle.mlp, bundle.binning, labeled, bundle.task.space);
}

/// Loads experiment input by extension: .jsonl event logs are aggregated,
/// .csv feature tables are read directly.
inline LabeledDataset load_dataset(const std::string &path) {
    if (path.size() >= 6 && path.ends_with(".jsonl"))
        return to_dataset(aggregate_events(read_events_jsonl(path)));
    if (path.ends_with(".csv")) return read_features_csv(path);
    fail(ErrorCategory::config,
         "cannot infer input format of \"" + path + "\" (want .jsonl or .csv)");
}

}  // namespace procflow
