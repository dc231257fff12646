#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "procflow/common.hpp"
#include "procflow/dataset.hpp"
#include "procflow/forest.hpp"
#include "procflow/mlp.hpp"

namespace procflow {

/// counts[i][j] = rows with true class i predicted as class j.
struct ConfusionMatrix {
    std::vector<std::vector<std::size_t>> counts;
    LabelSpace class_names;

    std::size_t size() const { return counts.size(); }

    std::size_t total() const {
        std::size_t sum = 0;
        for (const auto &row : counts)
            for (std::size_t c : row) sum += c;
        return sum;
    }

    std::size_t trace() const {
        std::size_t sum = 0;
        for (std::size_t i = 0; i < counts.size(); ++i) sum += counts[i][i];
        return sum;
    }
};

inline ConfusionMatrix confusion_matrix(std::span<const std::size_t> predictions,
                                        std::span<const std::size_t> labels,
                                        const LabelSpace &space) {
    if (predictions.size() != labels.size())
        fail(ErrorCategory::validation,
             "confusion_matrix: prediction and label counts differ");
    const std::size_t k = space.size();
    ConfusionMatrix cm;
    cm.class_names = space;
    cm.counts.assign(k, std::vector<std::size_t>(k, 0));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= k || predictions[i] >= k)
            fail(ErrorCategory::validation,
                 "confusion_matrix: class index out of range at row " +
                     std::to_string(i));
        ++cm.counts[labels[i]][predictions[i]];
    }
    return cm;
}

inline ConfusionMatrix confusion_matrix(std::span<const std::size_t> predictions,
                                        std::span<const std::size_t> labels,
                                        std::size_t k) {
    LabelSpace space;
    for (std::size_t i = 0; i < k; ++i)
        space.classes.push_back("class_" + std::to_string(i));
    return confusion_matrix(predictions, labels, space);
}

struct ClassMetrics {
    std::string name;
    double precision = 0.0;
    double recall = 0.0;
    std::size_t support = 0;
};

struct EvalReport {
    double accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    std::vector<ClassMetrics> per_class;
    ConfusionMatrix confusion;
};

/// Macro averages run over every class in the label space; classes never
/// predicted get precision 0 and empty classes get recall 0.
inline EvalReport report_from_confusion(ConfusionMatrix cm) {
    const std::size_t k = cm.size();
    const std::size_t total = cm.total();
    if (total == 0)
        fail(ErrorCategory::validation, "evaluate: empty test set");

    EvalReport report;
    double precision_sum = 0.0, recall_sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t tp = cm.counts[c][c];
        std::size_t support = 0, predicted = 0;
        for (std::size_t j = 0; j < k; ++j) {
            support += cm.counts[c][j];
            predicted += cm.counts[j][c];
        }
        ClassMetrics m;
        m.name = cm.class_names.classes[c];
        m.support = support;
        m.precision = predicted == 0
                          ? 0.0
                          : static_cast<double>(tp) / static_cast<double>(predicted);
        m.recall = support == 0
                       ? 0.0
                       : static_cast<double>(tp) / static_cast<double>(support);
        precision_sum += m.precision;
        recall_sum += m.recall;
        report.per_class.push_back(std::move(m));
    }
    report.accuracy =
        static_cast<double>(cm.trace()) / static_cast<double>(total);
    report.macro_precision = precision_sum / static_cast<double>(k);
    report.macro_recall = recall_sum / static_cast<double>(k);
    report.confusion = std::move(cm);
    return report;
}

inline EvalReport evaluate_predictions(std::span<const std::size_t> predictions,
                                       std::span<const std::size_t> labels,
                                       const LabelSpace &space) {
    return report_from_confusion(confusion_matrix(predictions, labels, space));
}

/// Forest evaluation on raw features; labels come from the forest's space.
inline EvalReport evaluate(const Forest &forest, const LabeledDataset &test) {
    test.validate();
    if (test.size() == 0)
        fail(ErrorCategory::validation, "evaluate: empty test set");
    auto labels = label_indices(test, forest.class_names);
    auto predictions = predict_forest(forest, test.features);
    return evaluate_predictions(predictions, labels, forest.class_names);
}

/// MLP evaluation on already scaled inputs.
inline EvalReport evaluate(const MLPParams &params, const Matrix &inputs,
                           std::span<const std::size_t> labels,
                           const LabelSpace &space) {
    if (inputs.rows() == 0)
        fail(ErrorCategory::validation, "evaluate: empty test set");
    if (inputs.rows() != labels.size())
        fail(ErrorCategory::shape, "evaluate: input rows != label count");
    auto predictions = predict_mlp(params, inputs);
    return evaluate_predictions(predictions, labels, space);
}

/// MLP evaluation on raw features: bins and scales through the model that
/// was fitted at training time.
inline EvalReport evaluate(const MLPParams &params, const BinningModel &binning,
                           const LabeledDataset &test, const LabelSpace &space) {
    test.validate();
    if (test.size() == 0)
        fail(ErrorCategory::validation, "evaluate: empty test set");
    auto labels = label_indices(test, space);
    Matrix scaled = transform_scaled(binning, test.features);
    return evaluate(params, scaled, labels, space);
}

inline nlohmann::json report_to_json(const EvalReport &report) {
    nlohmann::json per_class = nlohmann::json::array();
    for (const auto &m : report.per_class)
        per_class.push_back({{"name", m.name},
                             {"precision", m.precision},
                             {"recall", m.recall},
                             {"support", m.support}});
    return nlohmann::json{
        {"accuracy", report.accuracy},
        {"macro_precision", report.macro_precision},
        {"macro_recall", report.macro_recall},
        {"per_class", std::move(per_class)},
        {"confusion",
         {{"classes", report.confusion.class_names.classes},
          {"has_other", report.confusion.class_names.has_other},
          {"counts", report.confusion.counts}}}};
}

namespace detail {

inline std::string format_percent(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", v * 100.0);
    return buf;
}

inline std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

}  // namespace detail

/// Per-class table plus headline metrics, for terminal display.
inline std::string render_report(const EvalReport &report) {
    std::size_t name_width = 5;
    for (const auto &m : report.per_class)
        name_width = std::max(name_width, m.name.size());

    std::string out;
    out += detail::pad("class", name_width) + "  precision  recall   support\n";
    for (const auto &m : report.per_class) {
        out += detail::pad(m.name, name_width);
        out += "  " + detail::pad(detail::format_percent(m.precision), 9);
        out += "  " + detail::pad(detail::format_percent(m.recall), 7);
        out += "  " + std::to_string(m.support) + "\n";
    }
    out += "\naccuracy " + detail::format_percent(report.accuracy);
    out += "  macro precision " + detail::format_percent(report.macro_precision);
    out += "  macro recall " + detail::format_percent(report.macro_recall);
    out += "\n";
    return out;
}

/// First row/column carry class names; cell (i, j) counts true i predicted j.
inline std::string confusion_to_csv(const ConfusionMatrix &cm) {
    std::string out = "true\\predicted";
    for (const auto &name : cm.class_names.classes) {
        out += ',';
        detail::append_csv_label(out, name);
    }
    out += '\n';
    for (std::size_t i = 0; i < cm.size(); ++i) {
        detail::append_csv_label(out, cm.class_names.classes[i]);
        for (std::size_t j = 0; j < cm.size(); ++j)
            out += ',' + std::to_string(cm.counts[i][j]);
        out += '\n';
    }
    return out;
}

/// Row-normalized ASCII heatmap; darker glyph = larger share of the row.
inline std::string render_confusion_heatmap(const ConfusionMatrix &cm) {
    static constexpr const char *kShades = " .:-=+*#%@";
    std::string out;
    for (std::size_t i = 0; i < cm.size(); ++i) {
        std::size_t row_total = 0;
        for (std::size_t c : cm.counts[i]) row_total += c;
        for (std::size_t j = 0; j < cm.size(); ++j) {
            double share = row_total == 0
                               ? 0.0
                               : static_cast<double>(cm.counts[i][j]) /
                                     static_cast<double>(row_total);
            auto idx = static_cast<std::size_t>(std::floor(share * 9.999));
            out += kShades[std::min<std::size_t>(idx, 9)];
        }
        out += "  ";
        out += cm.class_names.classes[i];
        out += '\n';
    }
    return out;
}

}  // namespace procflow
