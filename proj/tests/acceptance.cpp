// Acceptance gate: every release-blocking behavior checked end to end, one
// verdict line per criterion. Exits non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <procflow/procflow.hpp>

#include "support/harness.hpp"
#include "support/oracles.hpp"

namespace pf = procflow;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool ok = false;
    std::string detail;
};

struct Stopwatch {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                             t0)
            .count();
    }
};

std::string fmt(double v, const char *unit = "") {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g%s", v, unit);
    return buf;
}

// -- criterion 1: feature aggregation matches an independent oracle ----------

Outcome feature_oracle_equivalence() {
    Stopwatch watch;
    pf::Rng rng(1001);
    const auto &names = pf::feature_names();
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        auto bucket = harness::random_bucket(rng, trial % 7);
        auto got = pf::aggregate_window(bucket).to_row();
        auto want = oracle::aggregate(bucket);
        for (std::size_t f = 0; f < pf::kFeatureCount; ++f) {
            const bool fractional = names[f].rfind("avg_", 0) == 0 ||
                                    names[f].rfind("ratio_", 0) == 0;
            if (fractional) {
                const double rel = oracle::rel_error(got[f], want[f]);
                worst = std::max(worst, rel);
                if (rel > 1e-12)
                    return {false, names[f] + " off by rel " + fmt(rel) +
                                       " on trial " + std::to_string(trial)};
            } else if (got[f] != want[f]) {
                return {false, names[f] + " mismatch on trial " +
                                   std::to_string(trial) + ": " +
                                   std::to_string(got[f]) + " vs " +
                                   std::to_string(want[f])};
            }
        }
    }
    const double secs = watch.seconds();
    if (secs >= 10.0) return {false, "took " + fmt(secs, "s") + ", limit 10s"};
    return {true, "1000 buckets, worst fractional rel err " + fmt(worst) +
                      ", " + fmt(secs, "s")};
}

// -- criterion 2: analytic gradients match central finite differences --------

Outcome gradient_check() {
    Stopwatch watch;
    const pf::MLPArchitecture arch{{5, 4, 3, 3, 2}};
    pf::Rng rng(2002);
    double worst = 0.0;
    for (int net = 0; net < 20; ++net) {
        auto params = pf::init_params(arch, 7000 + net);
        for (auto &norm : params.norms) {
            for (double &g : norm.gamma) g += rng.normal(0.0, 0.1);
            for (double &b : norm.beta) b += rng.normal(0.0, 0.1);
        }
        pf::Matrix batch(8, 5);
        for (double &v : batch.data()) v = rng.uniform();
        std::vector<std::size_t> labels(8);
        for (auto &l : labels) l = rng.below(2);

        auto cache = pf::detail::run_forward(params, batch, pf::MlpMode::train);
        auto grads = pf::backward(params, cache, labels);

        auto loss_now = [&]() {
            auto c = pf::detail::run_forward(params, batch, pf::MlpMode::train);
            return pf::loss(c.probs, labels);
        };
        harness::for_each_param(params, grads, [&](double &p, double &g) {
            const double fd = oracle::fd_gradient(loss_now, p, 1e-5);
            worst = std::max(worst, oracle::rel_error(g, fd));
        });
        if (worst >= 1e-4)
            return {false, "net " + std::to_string(net) +
                               " worst rel err " + fmt(worst)};
    }
    const double secs = watch.seconds();
    if (secs >= 60.0) return {false, "took " + fmt(secs, "s") + ", limit 60s"};
    return {true,
            "20 nets, worst rel err " + fmt(worst) + ", " + fmt(secs, "s")};
}

// -- criteria 3 and 4: end-to-end accuracy at the two separability poles -----

struct PipelineAccuracy {
    double rf = 0.0;
    double mlp = 0.0;
    double secs = 0.0;
};

PipelineAccuracy pipeline_accuracy(pf::Separability sep, std::uint64_t seed) {
    Stopwatch watch;
    auto data = harness::synth_dataset(sep, 5, 2000, seed);
    pf::ExperimentConfig config;
    config.suite = pf::Suite::top_n_sweep;
    config.top_n = {5};
    config.seed = seed;
    auto result = pf::run_experiment(data, config);
    PipelineAccuracy out;
    for (const auto &cell : result.cells) {
        if (cell.model == "rf") out.rf = cell.report.accuracy;
        if (cell.model == "mlp") out.mlp = cell.report.accuracy;
    }
    out.secs = watch.seconds();
    return out;
}

Outcome high_separability_accuracy() {
    auto acc = pipeline_accuracy(pf::Separability::high, 3003);
    const std::string detail = "rf " + fmt(acc.rf) + ", mlp " + fmt(acc.mlp) +
                               ", " + fmt(acc.secs, "s");
    if (acc.secs >= 300.0) return {false, detail + ", limit 300s"};
    if (acc.rf < 0.90 || acc.mlp < 0.90)
        return {false, detail + ", want both >= 0.90"};
    return {true, detail};
}

Outcome indistinguishable_classes_accuracy() {
    auto acc = pipeline_accuracy(pf::Separability::none, 4004);
    const std::string detail = "rf " + fmt(acc.rf) + ", mlp " + fmt(acc.mlp) +
                               ", " + fmt(acc.secs, "s");
    if (acc.secs >= 300.0) return {false, detail + ", limit 300s"};
    if (acc.rf < 0.15 || acc.rf > 0.25 || acc.mlp < 0.15 || acc.mlp > 0.25)
        return {false, detail + ", want both in [0.15, 0.25]"};
    return {true, detail};
}

// -- criterion 5: macro recall equals accuracy on balanced supports ----------

Outcome balanced_macro_identity() {
    pf::Rng rng(5005);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = 2 + rng.below(6);
        const std::size_t per_class = 1 + rng.below(50);
        std::vector<std::size_t> labels, preds;
        pf::LabelSpace space;
        for (std::size_t c = 0; c < k; ++c) {
            space.classes.push_back("c" + std::to_string(c));
            for (std::size_t i = 0; i < per_class; ++i) {
                labels.push_back(c);
                preds.push_back(rng.below(k));
            }
        }
        auto report = pf::evaluate_predictions(preds, labels, space);
        worst = std::max(worst, std::abs(report.macro_recall - report.accuracy));
    }
    if (worst > 1e-12)
        return {false, "worst |macro_recall - accuracy| = " + fmt(worst)};
    return {true, "200 balanced trials, worst gap " + fmt(worst)};
}

// -- criterion 6: forest determinism, depth bound, order invariance ----------

Outcome forest_invariants() {
    auto data = harness::synth_dataset(pf::Separability::high, 5, 300, 6006);
    pf::Rng split_rng(1);
    auto [train, test] = pf::split(data, 0.8, split_rng);

    pf::ForestConfig config;
    config.seed = 66;
    auto forest = pf::train_forest(train, config);

    std::size_t deepest = 0;
    for (const auto &tree : forest.trees)
        deepest = std::max(deepest, pf::tree_depth(*tree));
    if (deepest > config.max_depth)
        return {false, "tree depth " + std::to_string(deepest) + " exceeds " +
                           std::to_string(config.max_depth)};

    auto again = pf::train_forest(train, config);
    if (pf::forest_to_json(again).dump() != pf::forest_to_json(forest).dump())
        return {false, "same-seed retrain serialized differently"};

    // exact affine rescale of every feature: x -> 4x + 3
    auto remap = [](pf::LabeledDataset d) {
        for (double &v : d.features.data()) v = 4.0 * v + 3.0;
        return d;
    };
    auto mapped_forest = pf::train_forest(remap(train), config);
    auto base_preds = pf::predict_forest(forest, test.features);
    auto mapped_preds =
        pf::predict_forest(mapped_forest, remap(test).features);
    if (base_preds != mapped_preds)
        return {false, "affine feature rescale changed test predictions"};

    return {true, "100 trees, max depth " + std::to_string(deepest) +
                      ", deterministic and rescale-invariant"};
}

// -- criterion 7: binning is monotone, bounded, and train-determined ---------

Outcome binning_properties() {
    auto data = harness::synth_dataset(pf::Separability::high, 5, 200, 7007);
    pf::Rng split_rng(2);
    auto [train, test] = pf::split(data, 0.8, split_rng);

    const std::size_t bins = 64;
    auto model = pf::fit_binning(train.features, bins);
    for (const auto &edges : model.edges)
        if (!std::is_sorted(edges.begin(), edges.end()))
            return {false, "bin edges are not nondecreasing"};

    auto binned = pf::transform(model, test.features);
    for (double v : binned.data())
        if (v < 0.0 || v > static_cast<double>(bins - 1) ||
            v != std::floor(v))
            return {false, "bin index " + std::to_string(v) +
                               " outside [0, " + std::to_string(bins - 1) + "]"};

    // monotone: larger raw values never land in smaller bins
    pf::Rng rng(7);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t f = rng.below(test.features.cols());
        const std::size_t r1 = rng.below(test.features.rows());
        const std::size_t r2 = rng.below(test.features.rows());
        const double a = test.features.at(r1, f), b = test.features.at(r2, f);
        const double ba = binned.at(r1, f), bb = binned.at(r2, f);
        if ((a <= b && ba > bb) || (b <= a && bb > ba))
            return {false, "binning not monotone on feature " +
                               pf::feature_names()[f]};
    }

    // edges depend on the training rows only
    auto perturbed = test;
    for (double &v : perturbed.features.data()) v += 1234.5;
    (void)pf::transform(model, perturbed.features);
    auto refit = pf::fit_binning(train.features, bins);
    if (pf::binning_to_json(refit).dump() != pf::binning_to_json(model).dump())
        return {false, "refit on identical training rows changed the edges"};

    return {true, "64 bins over " + std::to_string(test.features.cols()) +
                      " features, monotone and bounded"};
}

// -- criterion 8: flooding the label space with near-duplicates hurts --------

pf::LabeledDataset noisy_class_zoo() {
    auto data = harness::synth_dataset(pf::Separability::high, 10, 600, 8008);

    // ten nearly indistinguishable filler classes, rarer than the real ones
    pf::ProcessProfile base;
    base.tcp_fraction = 0.55;
    base.send_recv_ratio = 0.5;
    base.pkt_size_sent = {6.0, 0.5};
    base.pkt_size_recv = {6.2, 0.5};
    base.rates[pf::EventKind::connect] = 2.0;
    base.rates[pf::EventKind::accept] = 1.0;
    base.rates[pf::EventKind::disconnect] = 2.0;
    base.rates[pf::EventKind::retransmit] = 0.5;
    base.with_data_rate(30.0);

    pf::ScenarioConfig noise;
    for (int i = 0; i < 10; ++i) {
        pf::ProcessProfile p = base;
        char name[32];
        std::snprintf(name, sizeof name, "noise%02d.exe", i);
        p.name = name;
        const double wiggle = 1.0 + 1e-3 * i;
        p.tcp_fraction = std::min(1.0, base.tcp_fraction * wiggle);
        for (auto &[kind, rate] : p.rates) rate *= wiggle;
        noise.profiles.push_back(std::move(p));
    }
    noise.windows_per_process = 400;
    noise.seed = 8009;
    auto extra =
        pf::to_dataset(pf::aggregate_events(pf::generate_scenario(noise)));

    for (std::size_t r = 0; r < extra.size(); ++r) {
        data.features.append_row(extra.features.row(r));
        data.labels.push_back(extra.labels[r]);
    }
    return data;
}

Outcome top_n_degradation() {
    Stopwatch watch;
    auto data = noisy_class_zoo();
    pf::ExperimentConfig config;
    config.suite = pf::Suite::top_n_sweep;
    config.top_n = {5, 10, 20};
    config.seed = 8010;
    auto result = pf::run_experiment(data, config);

    const std::string table = pf::render_summary(result);
    const auto rows = std::count(table.begin(), table.end(), '\n');
    if (rows != 1 + 6)
        return {false, "summary has " + std::to_string(rows - 1) +
                           " data rows, want 6"};

    std::map<std::pair<std::string, std::size_t>, const pf::EvalReport *> cells;
    for (const auto &cell : result.cells)
        cells[{cell.model, cell.top_n}] = &cell.report;
    for (const std::string model : {"rf", "mlp"}) {
        const auto *n10 = cells.at({model, 10});
        const auto *n20 = cells.at({model, 20});
        if (n20->macro_precision > n10->macro_precision + 1e-12)
            return {false, model + " macro precision rose from N=10 to N=20 (" +
                               fmt(n10->macro_precision) + " -> " +
                               fmt(n20->macro_precision) + ")"};
        if (n20->macro_recall > n10->macro_recall + 1e-12)
            return {false, model + " macro recall rose from N=10 to N=20 (" +
                               fmt(n10->macro_recall) + " -> " +
                               fmt(n20->macro_recall) + ")"};
    }
    const auto *rf10 = cells.at({"rf", 10});
    const auto *rf20 = cells.at({"rf", 20});
    return {true, "rf macro recall " + fmt(rf10->macro_recall) + " at N=10 -> " +
                      fmt(rf20->macro_recall) + " at N=20, " +
                      fmt(watch.seconds(), "s")};
}

// -- criterion 9: a rerun CLI experiment reproduces every reported byte ------

Outcome cli_reproducibility() {
    Stopwatch watch;
    harness::TempDir dir;
    const auto events = (dir / "events.jsonl").string();
    auto synth = harness::run_cli("--seed 55 --out " + events +
                                  " synth --separability high --classes 5"
                                  " --windows 400");
    if (synth.exit_code != 0)
        return {false, "synth failed: " + synth.err};

    const std::string flags = " experiment --suite top_n_sweep --input " +
                              events + " --models both --n 5,10";
    const auto run_a = (dir / "run_a").string();
    const auto run_b = (dir / "run_b").string();
    auto a = harness::run_cli("--seed 99 --out " + run_a + flags);
    if (a.exit_code != 0) return {false, "first run failed: " + a.err};
    auto b = harness::run_cli("--seed 99 --out " + run_b + flags);
    if (b.exit_code != 0) return {false, "second run failed: " + b.err};

    std::set<std::string> names;
    for (const auto &entry : fs::directory_iterator(run_a))
        names.insert(entry.path().filename().string());
    for (const auto &entry : fs::directory_iterator(run_b))
        names.insert(entry.path().filename().string());

    std::size_t compared = 0;
    for (const auto &name : names) {
        if (name == "manifest.json") continue;  // carries wall-clock timing
        const auto pa = fs::path(run_a) / name;
        const auto pb = fs::path(run_b) / name;
        if (!fs::exists(pa) || !fs::exists(pb))
            return {false, name + " missing from one of the runs"};
        if (harness::slurp(pa) != harness::slurp(pb))
            return {false, name + " differs between identical runs"};
        ++compared;
    }
    if (compared < 5)
        return {false, "only " + std::to_string(compared) + " files produced"};
    return {true, std::to_string(compared) + " report files byte-identical, " +
                      fmt(watch.seconds(), "s")};
}

using Criterion = Outcome (*)();

struct Entry {
    const char *name;
    Criterion run;
};

}  // namespace

int main() {
    const Entry entries[] = {
        {"feature oracle equivalence", feature_oracle_equivalence},
        {"mlp gradient check", gradient_check},
        {"high separability accuracy", high_separability_accuracy},
        {"indistinguishable classes near chance",
         indistinguishable_classes_accuracy},
        {"balanced macro recall identity", balanced_macro_identity},
        {"forest invariants", forest_invariants},
        {"binning properties", binning_properties},
        {"top-n degradation", top_n_degradation},
        {"cli reproducibility", cli_reproducibility},
    };

    int failures = 0;
    int index = 1;
    for (const auto &entry : entries) {
        Outcome outcome;
        try {
            outcome = entry.run();
        } catch (const std::exception &e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        std::printf("[criterion %d] %s: %s (%s)\n", index, entry.name,
                    outcome.ok ? "PASS" : "FAIL", outcome.detail.c_str());
        std::fflush(stdout);
        if (!outcome.ok) ++failures;
        ++index;
    }
    if (failures > 0) {
        std::printf("%d of 9 criteria failed\n", failures);
        return 1;
    }
    std::printf("all 9 criteria passed\n");
    return 0;
}
