// procflow: synthesize traffic, aggregate flow windows, train and evaluate
// process classifiers, and run the experiment suites end to end.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <procflow/procflow.hpp>

namespace pf = procflow;
namespace fs = std::filesystem;

namespace {

struct GlobalOpts {
    std::uint64_t seed = 0;
    std::string out;
    bool verbose = false;
};

std::string default_out(const std::string &given, const char *fallback) {
    return given.empty() ? fallback : given;
}

void ensure_parent_dir(const std::string &path) {
    fs::path parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
}

std::vector<std::size_t> parse_n_list(const std::string &csv) {
    std::vector<std::size_t> out;
    std::size_t start = 0;
    while (start <= csv.size()) {
        std::size_t comma = csv.find(',', start);
        std::string item = csv.substr(
            start, comma == std::string::npos ? std::string::npos : comma - start);
        if (item.empty())
            pf::fail(pf::ErrorCategory::config, "empty entry in --n list");
        std::size_t pos = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(item, &pos);
        } catch (const std::exception &) {
            pos = 0;
        }
        if (pos != item.size() || v == 0)
            pf::fail(pf::ErrorCategory::config,
                     "bad --n entry \"" + item + "\" (want positive integers)");
        out.push_back(static_cast<std::size_t>(v));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

struct SynthOpts {
    std::string separability = "high";
    std::size_t classes = 5;
    std::size_t windows = 200;
    std::size_t hosts = 1;
};

int cmd_synth(const GlobalOpts &g, const SynthOpts &o) {
    const std::string out_path = default_out(g.out, "events.jsonl");
    const auto t0 = std::chrono::steady_clock::now();

    pf::ScenarioConfig scenario;
    scenario.profiles = pf::builtin_profiles(
        pf::separability_from_string(o.separability), o.classes);
    scenario.windows_per_process = o.windows;
    scenario.hosts = o.hosts;
    scenario.seed = g.seed;

    auto events = pf::generate_scenario(scenario);
    ensure_parent_dir(out_path);
    pf::write_events_jsonl(out_path, events);

    pf::RunManifest manifest;
    manifest.command = "synth";
    manifest.config = {{"separability", o.separability},
                       {"classes", o.classes},
                       {"windows", o.windows},
                       {"hosts", o.hosts},
                       {"seed", g.seed}};
    manifest.outputs = {out_path};
    manifest.threads = pf::resolve_thread_count();
    manifest.duration_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::steady_clock::now() - t0)
                               .count();
    pf::write_manifest(out_path + ".manifest.json", manifest);

    std::cout << "wrote " << events.size() << " events for " << o.classes
              << " classes to " << out_path << "\n";
    return 0;
}

int cmd_aggregate(const GlobalOpts &g, const std::string &input) {
    const std::string out_path = default_out(g.out, "features.csv");
    const auto t0 = std::chrono::steady_clock::now();

    auto events = pf::read_events_jsonl(input);
    auto rows = pf::aggregate_events(events);
    auto dataset = pf::to_dataset(rows);
    ensure_parent_dir(out_path);
    pf::write_features_csv(out_path, dataset);

    pf::RunManifest manifest;
    manifest.command = "aggregate";
    manifest.config = {{"input", input}, {"seed", g.seed}};
    manifest.inputs = {input};
    manifest.outputs = {out_path};
    manifest.threads = pf::resolve_thread_count();
    manifest.duration_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::steady_clock::now() - t0)
                               .count();
    pf::write_manifest(out_path + ".manifest.json", manifest);

    std::cout << "aggregated " << events.size() << " events into "
              << dataset.size() << " windows at " << out_path << "\n";
    return 0;
}

struct PipelineOpts {
    std::string task = "none";
    std::size_t top_n = 10;
    std::size_t min_count = 300;
    std::size_t cap = 50000;
    std::size_t bins = 64;
    bool bin_rf = false;
};

struct ForestOpts {
    std::size_t trees = 100;
    std::size_t max_depth = 15;
    std::size_t min_split = 2;
    std::size_t feature_subsample = 0;
};

struct MlpOpts {
    double learning_rate = 1e-3;
    std::size_t batch = 256;
    std::size_t epochs = 20;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double bn_momentum = 0.9;
};

pf::TrainConfig to_train_config(const MlpOpts &o, std::uint64_t seed) {
    pf::TrainConfig cfg;
    cfg.learning_rate = o.learning_rate;
    cfg.batch_size = o.batch;
    cfg.epochs = o.epochs;
    cfg.beta1 = o.beta1;
    cfg.beta2 = o.beta2;
    cfg.epsilon = o.epsilon;
    cfg.bn_momentum = o.bn_momentum;
    cfg.seed = seed;
    return cfg;
}

pf::ForestConfig to_forest_config(const ForestOpts &o, std::uint64_t seed) {
    pf::ForestConfig cfg;
    cfg.n_trees = o.trees;
    cfg.max_depth = o.max_depth;
    cfg.min_split = o.min_split;
    cfg.feature_subsample = o.feature_subsample;
    cfg.seed = seed;
    return cfg;
}

/// Applies the task labeling the way `train` and `experiment` define it and
/// returns the rows to train on plus the task spec persisted into the bundle.
std::pair<pf::LabeledDataset, pf::TaskSpec> run_task_pipeline(
    const pf::LabeledDataset &data, const PipelineOpts &o, std::uint64_t seed) {
    pf::TaskSpec task;
    task.kind = o.task;
    if (o.task == "none") {
        auto [labeled, space] = pf::top_n_relabel(data, pf::class_counts(data).size());
        task.space = std::move(space);
        return {std::move(labeled), std::move(task)};
    }
    if (o.task == "top_n") {
        auto filtered = pf::min_count_filter(data, o.min_count);
        pf::Rng cap_rng(pf::derive_seed(seed, "cap"));
        auto capped = pf::cap_per_class(filtered, o.cap, cap_rng);
        auto [labeled, space] = pf::top_n_relabel(capped, o.top_n);
        task.top_n = o.top_n;
        task.space = std::move(space);
        return {std::move(labeled), std::move(task)};
    }
    auto [labeled, space] =
        pf::browser_labeling(data, pf::browser_task_from_string(
                                       o.task.substr(std::string("browser_").size())));
    task.space = std::move(space);
    return {std::move(labeled), std::move(task)};
}

int cmd_train(const GlobalOpts &g, const std::string &model,
              const std::string &input, const PipelineOpts &p,
              const ForestOpts &f, const MlpOpts &m) {
    const std::string out_path = default_out(g.out, "model.json");
    const auto t0 = std::chrono::steady_clock::now();

    auto data = pf::read_features_csv(input);
    auto [labeled, task] = run_task_pipeline(data, p, g.seed);

    pf::ModelBundle bundle;
    bundle.model_kind = model;
    bundle.task = task;

    if (model == "rf") {
        auto cfg = to_forest_config(f, pf::derive_seed(g.seed, "rf"));
        if (p.bin_rf) {
            bundle.binning = pf::fit_binning(labeled.features, p.bins);
            bundle.has_binning = true;
            bundle.forest = pf::train_forest(pf::transform(bundle.binning, labeled),
                                             task.space, cfg);
        } else {
            bundle.forest = pf::train_forest(labeled, task.space, cfg);
        }
    } else {
        bundle.binning = pf::fit_binning(labeled.features, p.bins);
        bundle.has_binning = true;
        auto arch = pf::make_architecture(labeled.features.cols(), task.space.size());
        auto x = pf::transform_scaled(bundle.binning, labeled.features);
        auto y = pf::label_indices(labeled, task.space);
        auto trained =
            pf::train_mlp(x, y, arch, to_train_config(m, pf::derive_seed(g.seed, "mlp")));
        if (g.verbose)
            for (std::size_t e = 0; e < trained.epoch_loss.size(); ++e)
                std::cout << "epoch " << e + 1 << " loss " << trained.epoch_loss[e]
                          << "\n";
        bundle.mlp = std::move(trained.params);
    }

    ensure_parent_dir(out_path);
    pf::write_json_file(out_path, pf::bundle_to_json(bundle));
    std::vector<std::string> outputs = {out_path};
    if (bundle.has_binning) {
        std::string binning_path = out_path;
        const std::string suffix = ".json";
        if (binning_path.ends_with(suffix))
            binning_path.resize(binning_path.size() - suffix.size());
        binning_path += ".binning.json";
        pf::write_json_file(binning_path, pf::binning_to_json(bundle.binning));
        outputs.push_back(binning_path);
    }

    pf::RunManifest manifest;
    manifest.command = "train";
    manifest.config = {{"model", model},         {"input", input},
                       {"task", p.task},         {"n", p.top_n},
                       {"min_count", p.min_count}, {"cap", p.cap},
                       {"bins", p.bins},         {"bin_rf", p.bin_rf},
                       {"trees", f.trees},       {"max_depth", f.max_depth},
                       {"min_split", f.min_split},
                       {"feature_subsample", f.feature_subsample},
                       {"learning_rate", m.learning_rate},
                       {"batch", m.batch},       {"epochs", m.epochs},
                       {"beta1", m.beta1},       {"beta2", m.beta2},
                       {"epsilon", m.epsilon},   {"bn_momentum", m.bn_momentum},
                       {"seed", g.seed}};
    manifest.inputs = {input};
    manifest.outputs = outputs;
    manifest.threads = pf::resolve_thread_count();
    manifest.duration_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::steady_clock::now() - t0)
                               .count();
    pf::write_manifest(out_path + ".manifest.json", manifest);

    std::cout << "trained " << model << " on " << labeled.size() << " rows, "
              << task.space.size() << " classes; wrote " << out_path << "\n";
    return 0;
}

int cmd_eval(const GlobalOpts &g, const std::string &model_path,
             const std::string &input) {
    const std::string out_dir = default_out(g.out, "eval_out");
    const auto t0 = std::chrono::steady_clock::now();

    auto bundle = pf::bundle_from_json(pf::read_json_file(model_path));
    auto data = pf::read_features_csv(input);
    auto report = pf::evaluate_bundle(bundle, data);

    fs::create_directories(out_dir);
    const std::string report_json = (fs::path(out_dir) / "report.json").string();
    const std::string report_txt = (fs::path(out_dir) / "report.txt").string();
    const std::string confusion_csv = (fs::path(out_dir) / "confusion.csv").string();
    pf::write_json_file(report_json, pf::report_to_json(report));
    {
        std::ofstream txt(report_txt, std::ios::binary);
        if (!txt)
            pf::fail(pf::ErrorCategory::io,
                     "cannot open \"" + report_txt + "\" for writing");
        txt << pf::render_report(report);
    }
    {
        std::ofstream csv(confusion_csv, std::ios::binary);
        if (!csv)
            pf::fail(pf::ErrorCategory::io,
                     "cannot open \"" + confusion_csv + "\" for writing");
        csv << pf::confusion_to_csv(report.confusion);
    }

    pf::RunManifest manifest;
    manifest.command = "eval";
    manifest.config = {{"model", model_path}, {"input", input}, {"seed", g.seed}};
    manifest.inputs = {model_path, input};
    manifest.outputs = {report_json, report_txt, confusion_csv};
    manifest.threads = pf::resolve_thread_count();
    manifest.duration_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::steady_clock::now() - t0)
                               .count();
    pf::write_manifest((fs::path(out_dir) / "manifest.json").string(), manifest);

    std::cout << pf::render_report(report);
    if (g.verbose) std::cout << "\n" << pf::render_confusion_heatmap(report.confusion);
    return 0;
}

struct ExperimentOpts {
    std::string suite;
    std::string models = "both";
    std::string n_list;
    double train_fraction = 0.8;
};

int cmd_experiment(const GlobalOpts &g, const std::string &input,
                   const ExperimentOpts &e, const PipelineOpts &p,
                   const ForestOpts &f, const MlpOpts &m) {
    const std::string out_dir = default_out(g.out, "experiment_out");
    const auto t0 = std::chrono::steady_clock::now();

    pf::ExperimentConfig cfg;
    cfg.suite = pf::suite_from_string(e.suite);
    if (!e.n_list.empty()) cfg.top_n = parse_n_list(e.n_list);
    cfg.run_rf = e.models == "rf" || e.models == "both";
    cfg.run_mlp = e.models == "mlp" || e.models == "both";
    cfg.cap = p.cap;
    cfg.min_count = p.min_count;
    cfg.train_fraction = e.train_fraction;
    cfg.bins = p.bins;
    cfg.bin_rf = p.bin_rf;
    cfg.forest = to_forest_config(f, 0);
    cfg.mlp = to_train_config(m, 0);
    cfg.seed = g.seed;

    auto data = pf::load_dataset(input);
    auto result = pf::run_experiment(data, cfg);

    fs::create_directories(out_dir);
    std::vector<std::string> outputs;
    for (const auto &cell : result.cells) {
        std::string stem = "report_" + cell.model;
        if (cell.suite == pf::Suite::top_n_sweep)
            stem += "_n" + std::to_string(cell.top_n);
        const std::string report_path =
            (fs::path(out_dir) / (stem + ".json")).string();
        pf::write_json_file(report_path, pf::report_to_json(cell.report));
        outputs.push_back(report_path);

        const std::string confusion_path =
            (fs::path(out_dir) / ("confusion_" + stem.substr(7) + ".csv")).string();
        std::ofstream csv(confusion_path, std::ios::binary);
        if (!csv)
            pf::fail(pf::ErrorCategory::io,
                     "cannot open \"" + confusion_path + "\" for writing");
        csv << pf::confusion_to_csv(cell.report.confusion);
        outputs.push_back(confusion_path);
    }

    const std::string summary_txt = (fs::path(out_dir) / "summary.txt").string();
    const std::string summary_json = (fs::path(out_dir) / "summary.json").string();
    {
        std::ofstream txt(summary_txt, std::ios::binary);
        if (!txt)
            pf::fail(pf::ErrorCategory::io,
                     "cannot open \"" + summary_txt + "\" for writing");
        txt << pf::render_summary(result);
    }
    pf::write_json_file(summary_json, pf::summary_to_json(result));
    outputs.push_back(summary_txt);
    outputs.push_back(summary_json);

    pf::RunManifest manifest;
    manifest.command = "experiment";
    manifest.config = {{"suite", e.suite},
                       {"input", input},
                       {"models", e.models},
                       {"n", e.n_list},
                       {"train_fraction", e.train_fraction},
                       {"min_count", p.min_count},
                       {"cap", p.cap},
                       {"bins", p.bins},
                       {"bin_rf", p.bin_rf},
                       {"trees", f.trees},
                       {"max_depth", f.max_depth},
                       {"min_split", f.min_split},
                       {"feature_subsample", f.feature_subsample},
                       {"learning_rate", m.learning_rate},
                       {"batch", m.batch},
                       {"epochs", m.epochs},
                       {"beta1", m.beta1},
                       {"beta2", m.beta2},
                       {"epsilon", m.epsilon},
                       {"bn_momentum", m.bn_momentum},
                       {"seed", g.seed}};
    manifest.inputs = {input};
    manifest.outputs = outputs;
    manifest.threads = pf::resolve_thread_count();
    manifest.duration_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::steady_clock::now() - t0)
                               .count();
    pf::write_manifest((fs::path(out_dir) / "manifest.json").string(), manifest);

    std::cout << pf::render_summary(result);
    return 0;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"process classification from aggregate traffic statistics"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--seed", g.seed, "base seed for all derived randomness");
    app.add_option("--out", g.out, "output file or directory");
    app.add_flag("--verbose", g.verbose, "chatty progress and diagnostics");

    SynthOpts synth;
    auto *synth_cmd = app.add_subcommand("synth", "generate a synthetic event log");
    synth_cmd->fallthrough();
    synth_cmd->add_option("--separability", synth.separability,
                          "profile distinctness")
        ->check(CLI::IsMember({"high", "medium", "none"}));
    synth_cmd->add_option("--classes", synth.classes, "number of process classes");
    synth_cmd->add_option("--windows", synth.windows, "windows per process");
    synth_cmd->add_option("--hosts", synth.hosts, "instances per process");

    std::string agg_input;
    auto *agg_cmd =
        app.add_subcommand("aggregate", "fold an event log into feature windows");
    agg_cmd->fallthrough();
    agg_cmd->add_option("--input", agg_input, "events.jsonl path")->required();

    std::string train_model, train_input;
    PipelineOpts pipeline;
    ForestOpts forest;
    MlpOpts mlp;
    auto *train_cmd = app.add_subcommand("train", "fit a model on a feature CSV");
    train_cmd->fallthrough();
    train_cmd->add_option("--model", train_model, "classifier to fit")
        ->required()
        ->check(CLI::IsMember({"rf", "mlp"}));
    train_cmd->add_option("--input", train_input, "features.csv path")->required();
    auto add_pipeline_opts = [&pipeline](CLI::App *cmd) {
        cmd->add_option("--task", pipeline.task, "labeling task")
            ->check(CLI::IsMember({"none", "browser_binary", "browser_fingerprint",
                                   "browser_combined", "top_n"}));
        cmd->add_option("--min-count", pipeline.min_count,
                        "minimum rows for a class to be kept");
        cmd->add_option("--cap", pipeline.cap, "per-class row cap");
        cmd->add_option("--bins", pipeline.bins, "histogram bin count");
        cmd->add_flag("--bin-rf", pipeline.bin_rf,
                      "feed binned features to the forest too");
    };
    auto add_forest_opts = [&forest](CLI::App *cmd) {
        cmd->add_option("--trees", forest.trees, "trees in the forest");
        cmd->add_option("--max-depth", forest.max_depth, "tree depth limit");
        cmd->add_option("--min-split", forest.min_split,
                        "smallest splittable node");
        cmd->add_option("--feature-subsample", forest.feature_subsample,
                        "features tried per split (0 = sqrt)");
    };
    auto add_mlp_opts = [&mlp](CLI::App *cmd) {
        cmd->add_option("--lr", mlp.learning_rate, "learning rate");
        cmd->add_option("--batch", mlp.batch, "batch size");
        cmd->add_option("--epochs", mlp.epochs, "training epochs");
        cmd->add_option("--beta1", mlp.beta1, "first-moment decay");
        cmd->add_option("--beta2", mlp.beta2, "second-moment decay");
        cmd->add_option("--eps", mlp.epsilon, "optimizer epsilon");
        cmd->add_option("--bn-momentum", mlp.bn_momentum,
                        "batch-norm running-stat momentum");
    };
    add_pipeline_opts(train_cmd);
    train_cmd->add_option("--n", pipeline.top_n, "N for the top_n task");
    add_forest_opts(train_cmd);
    add_mlp_opts(train_cmd);

    std::string eval_model, eval_input;
    auto *eval_cmd = app.add_subcommand("eval", "score a model on a feature CSV");
    eval_cmd->fallthrough();
    eval_cmd->add_option("--model", eval_model, "model.json path")->required();
    eval_cmd->add_option("--input", eval_input, "features.csv path")->required();

    std::string exp_input;
    ExperimentOpts exp;
    auto *exp_cmd =
        app.add_subcommand("experiment", "run a full experiment suite");
    exp_cmd->fallthrough();
    exp_cmd->add_option("--suite", exp.suite, "experiment suite")
        ->required()
        ->check(CLI::IsMember({"browser_binary", "browser_fingerprint",
                               "browser_combined", "top_n_sweep"}));
    exp_cmd->add_option("--input", exp_input, "events.jsonl or features.csv")
        ->required();
    exp_cmd->add_option("--models", exp.models, "which models to run")
        ->check(CLI::IsMember({"rf", "mlp", "both"}));
    exp_cmd->add_option("--n", exp.n_list, "comma-separated N sweep list");
    exp_cmd->add_option("--train-fraction", exp.train_fraction,
                        "train share of the split");
    add_pipeline_opts(exp_cmd);
    add_forest_opts(exp_cmd);
    add_mlp_opts(exp_cmd);

    try {
        app.parse(argc, argv);
        if (app.got_subcommand(synth_cmd)) return cmd_synth(g, synth);
        if (app.got_subcommand(agg_cmd)) return cmd_aggregate(g, agg_input);
        if (app.got_subcommand(train_cmd))
            return cmd_train(g, train_model, train_input, pipeline, forest, mlp);
        if (app.got_subcommand(eval_cmd)) return cmd_eval(g, eval_model, eval_input);
        if (app.got_subcommand(exp_cmd))
            return cmd_experiment(g, exp_input, exp, pipeline, forest, mlp);
        return 0;
    } catch (const CLI::ParseError &e) {
        return app.exit(e);
    } catch (const pf::Error &e) {
        std::cerr << "error[" << pf::to_string(e.category()) << "]: " << e.what()
                  << "\n";
        return 1;
    } catch (const std::exception &e) {
        std::cerr << "error[internal]: " << e.what() << "\n";
        return 1;
    }
}
