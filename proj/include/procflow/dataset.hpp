#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "procflow/common.hpp"
#include "procflow/features.hpp"
#include "procflow/rng.hpp"

namespace procflow {

inline constexpr const char *kOtherClass = "Other";

/// Feature rows with parallel string labels.
struct LabeledDataset {
    Matrix features;
    std::vector<std::string> labels;

    std::size_t size() const { return labels.size(); }

    void validate() const {
        if (features.rows() != labels.size())
            fail(ErrorCategory::shape, "feature rows (" +
                                           std::to_string(features.rows()) +
                                           ") != labels (" +
                                           std::to_string(labels.size()) + ")");
    }

    LabeledDataset select(std::span<const std::size_t> indices) const {
        LabeledDataset out;
        out.features = features.select_rows(indices);
        out.labels.reserve(indices.size());
        for (std::size_t i : indices) out.labels.push_back(labels[i]);
        return out;
    }
};

inline LabeledDataset to_dataset(const std::vector<FeatureVector> &rows) {
    LabeledDataset ds;
    ds.features = Matrix(rows.size(), kFeatureCount);
    ds.labels.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto row = rows[i].to_row();
        std::copy(row.begin(), row.end(), ds.features.row(i).begin());
        ds.labels.push_back(rows[i].label);
    }
    return ds;
}

/// Ordered class names for one task; if has_other, "Other" is last.
struct LabelSpace {
    std::vector<std::string> classes;
    bool has_other = false;

    std::size_t size() const { return classes.size(); }

    std::size_t index_of(const std::string &name) const {
        for (std::size_t i = 0; i < classes.size(); ++i)
            if (classes[i] == name) return i;
        fail(ErrorCategory::validation, "label \"" + name + "\" not in label space");
    }
};

/// Maps dataset labels to indices in the space.
inline std::vector<std::size_t> label_indices(const LabeledDataset &data,
                                              const LabelSpace &space) {
    std::map<std::string, std::size_t> lut;
    for (std::size_t i = 0; i < space.classes.size(); ++i) lut[space.classes[i]] = i;
    std::vector<std::size_t> out;
    out.reserve(data.labels.size());
    for (const auto &l : data.labels) {
        auto it = lut.find(l);
        if (it == lut.end())
            fail(ErrorCategory::validation, "label \"" + l + "\" not in label space");
        out.push_back(it->second);
    }
    return out;
}

/// Label space of the classes present, in first-appearance order.
inline LabelSpace observed_label_space(const LabeledDataset &data) {
    LabelSpace space;
    std::set<std::string> seen;
    for (const auto &l : data.labels)
        if (seen.insert(l).second) space.classes.push_back(l);
    return space;
}

inline std::map<std::string, std::size_t> class_counts(const LabeledDataset &data) {
    std::map<std::string, std::size_t> counts;
    for (const auto &l : data.labels) ++counts[l];
    return counts;
}

namespace detail {

/// Row indices per class, classes in name order for determinism.
inline std::map<std::string, std::vector<std::size_t>> class_index_map(
    const LabeledDataset &data) {
    std::map<std::string, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < data.labels.size(); ++i)
        by_class[data.labels[i]].push_back(i);
    return by_class;
}

}  // namespace detail

/// Uniform per-class subsampling down to `cap` rows, without replacement.
/// Classes under the cap pass through untouched; surviving rows keep their
/// original order.
inline LabeledDataset cap_per_class(const LabeledDataset &data, std::size_t cap,
                                    Rng &rng) {
    data.validate();
    if (cap < 1) fail(ErrorCategory::validation, "cap must be >= 1");
    std::vector<std::size_t> kept;
    for (const auto &[name, indices] : detail::class_index_map(data)) {
        if (indices.size() <= cap) {
            kept.insert(kept.end(), indices.begin(), indices.end());
        } else {
            for (std::size_t pos : rng.sample_without_replacement(indices.size(), cap))
                kept.push_back(indices[pos]);
        }
    }
    std::sort(kept.begin(), kept.end());
    return data.select(kept);
}

inline LabeledDataset cap_per_class(const LabeledDataset &data, Rng &rng) {
    return cap_per_class(data, 50000, rng);
}

/// Drops every class with fewer than min_samples rows.
inline LabeledDataset min_count_filter(const LabeledDataset &data,
                                       std::size_t min_samples = 300) {
    data.validate();
    if (min_samples < 1) fail(ErrorCategory::validation, "min_samples must be >= 1");
    auto counts = class_counts(data);
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < data.labels.size(); ++i)
        if (counts[data.labels[i]] >= min_samples) kept.push_back(i);
    if (kept.empty())
        fail(ErrorCategory::validation,
             "min_count_filter(" + std::to_string(min_samples) +
                 ") removed every class");
    return data.select(kept);
}

/// Keeps the n most frequent class names (ties broken lexicographically)
/// and relabels everything else "Other".
inline std::pair<LabeledDataset, LabelSpace> top_n_relabel(const LabeledDataset &data,
                                                           std::size_t n) {
    data.validate();
    if (n < 1) fail(ErrorCategory::validation, "top_n_relabel needs n >= 1");
    auto counts = class_counts(data);
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(),
                                                            counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto &a, const auto &b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    LabelSpace space;
    std::set<std::string> kept;
    for (std::size_t i = 0; i < ranked.size() && i < n; ++i) {
        space.classes.push_back(ranked[i].first);
        kept.insert(ranked[i].first);
    }

    LabeledDataset out = data;
    bool any_other = false;
    for (auto &l : out.labels) {
        if (!kept.count(l)) {
            l = kOtherClass;
            any_other = true;
        }
    }
    if (any_other) {
        space.classes.push_back(kOtherClass);
        space.has_other = true;
    }
    return {std::move(out), std::move(space)};
}

enum class BrowserTask { binary, fingerprint, combined };

inline BrowserTask browser_task_from_string(std::string_view s) {
    if (s == "binary") return BrowserTask::binary;
    if (s == "fingerprint") return BrowserTask::fingerprint;
    if (s == "combined") return BrowserTask::combined;
    fail(ErrorCategory::validation, "unknown browser task \"" + std::string(s) + "\"");
}

inline const std::vector<std::string> &default_browsers() {
    static const std::vector<std::string> browsers = {
        "firefox.exe", "chrome.exe", "iexplore.exe", "msedge.exe"};
    return browsers;
}

inline constexpr const char *kBrowserClass = "browser";
inline constexpr const char *kNonBrowserClass = "non-browser";

/// Relabels rows for the browser task family. binary collapses to
/// browser/non-browser; fingerprint keeps only browser rows under their own
/// names; combined keeps browser names and lumps the rest as non-browser.
inline std::pair<LabeledDataset, LabelSpace> browser_labeling(
    const LabeledDataset &data, BrowserTask mode,
    const std::vector<std::string> &browsers = default_browsers()) {
    data.validate();
    std::set<std::string> browser_set(browsers.begin(), browsers.end());

    LabeledDataset out;
    LabelSpace space;
    switch (mode) {
    case BrowserTask::binary: {
        out = data;
        bool any_browser = false, any_other = false;
        for (auto &l : out.labels) {
            if (browser_set.count(l)) {
                l = kBrowserClass;
                any_browser = true;
            } else {
                l = kNonBrowserClass;
                any_other = true;
            }
        }
        if (any_browser) space.classes.push_back(kBrowserClass);
        if (any_other) space.classes.push_back(kNonBrowserClass);
        break;
    }
    case BrowserTask::fingerprint: {
        std::vector<std::size_t> kept;
        for (std::size_t i = 0; i < data.labels.size(); ++i)
            if (browser_set.count(data.labels[i])) kept.push_back(i);
        if (kept.empty())
            fail(ErrorCategory::validation,
                 "fingerprint task: no browser-labeled rows in the dataset");
        out = data.select(kept);
        for (const auto &b : browsers) {
            if (std::find(out.labels.begin(), out.labels.end(), b) != out.labels.end())
                space.classes.push_back(b);
        }
        break;
    }
    case BrowserTask::combined: {
        out = data;
        bool any_other = false;
        for (auto &l : out.labels) {
            if (!browser_set.count(l)) {
                l = kNonBrowserClass;
                any_other = true;
            }
        }
        for (const auto &b : browsers) {
            if (std::find(out.labels.begin(), out.labels.end(), b) != out.labels.end())
                space.classes.push_back(b);
        }
        if (any_other) space.classes.push_back(kNonBrowserClass);
        break;
    }
    }
    return {std::move(out), std::move(space)};
}

/// Stratified train/test split: each class contributes
/// clamp(round(count*fraction), 1, count-1) rows to train. Classes with a
/// single row cannot be stratified and are an error.
inline std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset &data,
                                                       double train_fraction,
                                                       Rng &rng) {
    data.validate();
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        fail(ErrorCategory::validation, "train_fraction must be in (0,1)");
    std::vector<std::size_t> train_idx, test_idx;
    for (const auto &[name, indices] : detail::class_index_map(data)) {
        if (indices.size() < 2)
            fail(ErrorCategory::validation,
                 "class \"" + name + "\" has 1 row; cannot stratify");
        std::vector<std::size_t> shuffled = indices;
        rng.shuffle(shuffled);
        auto want = static_cast<std::size_t>(std::llround(
            static_cast<double>(indices.size()) * train_fraction));
        std::size_t take = std::clamp<std::size_t>(want, 1, indices.size() - 1);
        train_idx.insert(train_idx.end(), shuffled.begin(), shuffled.begin() + take);
        test_idx.insert(test_idx.end(), shuffled.begin() + take, shuffled.end());
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());
    return {data.select(train_idx), data.select(test_idx)};
}

inline std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset &data,
                                                       Rng &rng) {
    return split(data, 0.8, rng);
}

/// Per-feature equal-frequency bin edges fit on training data.
struct BinningModel {
    std::size_t bin_count = 64;
    std::vector<std::vector<double>> edges;  // per feature, bin_count-1 values
    std::size_t fitted_on = 0;

    std::size_t feature_count() const { return edges.size(); }

    /// Bin index of one value: the number of edges strictly below it.
    std::size_t bin_of(std::size_t feature, double value) const {
        const auto &e = edges[feature];
        return static_cast<std::size_t>(
            std::lower_bound(e.begin(), e.end(), value) - e.begin());
    }
};

/// Fits nearest-rank (k/B)-quantile edges, k = 1..B-1, per feature on the
/// training rows only.
inline BinningModel fit_binning(const Matrix &train, std::size_t bin_count = 64) {
    if (train.rows() == 0)
        fail(ErrorCategory::validation, "fit_binning: empty training matrix");
    if (bin_count < 2)
        fail(ErrorCategory::validation, "fit_binning: bin_count must be >= 2");
    BinningModel model;
    model.bin_count = bin_count;
    model.fitted_on = train.rows();
    model.edges.assign(train.cols(), {});
    const std::size_t n = train.rows();
    parallel_for(train.cols(), [&](std::size_t f) {
        std::vector<double> column(n);
        for (std::size_t r = 0; r < n; ++r) column[r] = train.at(r, f);
        std::sort(column.begin(), column.end());
        auto &edges = model.edges[f];
        edges.reserve(bin_count - 1);
        for (std::size_t k = 1; k < bin_count; ++k) {
            // nearest-rank quantile: 1-based rank ceil(k*n/B)
            std::size_t rank = (k * n + bin_count - 1) / bin_count;
            if (rank < 1) rank = 1;
            edges.push_back(column[rank - 1]);
        }
    });
    return model;
}

/// Maps every value to its bin index in [0, bin_count-1]; out-of-range
/// values clip to the extreme bins.
inline Matrix transform(const BinningModel &model, const Matrix &data) {
    if (data.cols() != model.feature_count())
        fail(ErrorCategory::shape,
             "transform: data has " + std::to_string(data.cols()) +
                 " features, model fitted on " +
                 std::to_string(model.feature_count()));
    Matrix out(data.rows(), data.cols());
    for (std::size_t r = 0; r < data.rows(); ++r)
        for (std::size_t c = 0; c < data.cols(); ++c)
            out.at(r, c) = static_cast<double>(model.bin_of(c, data.at(r, c)));
    return out;
}

/// Bin indices scaled into [0,1] by /(B-1); the MLP input encoding.
inline Matrix transform_scaled(const BinningModel &model, const Matrix &data) {
    Matrix out = transform(model, data);
    const double denom = static_cast<double>(model.bin_count - 1);
    for (double &v : out.data()) v /= denom;
    return out;
}

inline BinningModel fit_binning(const LabeledDataset &train,
                                std::size_t bin_count = 64) {
    return fit_binning(train.features, bin_count);
}

/// Binned copy of the dataset: integer bin indices, labels unchanged.
inline LabeledDataset transform(const BinningModel &model,
                                const LabeledDataset &data) {
    return {transform(model, data.features), data.labels};
}

inline nlohmann::json binning_to_json(const BinningModel &model) {
    return nlohmann::json{{"version", 1},
                          {"bin_count", model.bin_count},
                          {"fitted_on", model.fitted_on},
                          {"edges", model.edges}};
}

inline BinningModel binning_from_json(const nlohmann::json &j) {
    if (j.at("version").get<int>() != 1)
        fail(ErrorCategory::parse, "unsupported binning model version");
    BinningModel model;
    model.bin_count = j.at("bin_count").get<std::size_t>();
    model.fitted_on = j.at("fitted_on").get<std::size_t>();
    model.edges = j.at("edges").get<std::vector<std::vector<double>>>();
    for (const auto &e : model.edges)
        if (e.size() + 1 != model.bin_count)
            fail(ErrorCategory::parse, "binning model edge list has wrong length");
    return model;
}

// ---------------------------------------------------------------------------
// Feature CSV: fixed 27-column header, 26 Table-style features then `label`.

namespace detail {

inline void append_csv_number(std::string &out, double v) {
    // integers print as integers; everything else as shortest round-trip
    if (std::floor(v) == v && std::abs(v) < 9.007199254740992e15) {
        out += std::to_string(static_cast<std::int64_t>(v));
        return;
    }
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

inline void append_csv_label(std::string &out, const std::string &label) {
    if (label.find_first_of(",\"\n\r") == std::string::npos) {
        out += label;
        return;
    }
    out += '"';
    for (char c : label) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
}

inline std::vector<std::string> split_csv_line(const std::string &line,
                                               std::size_t line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"' && cur.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (c == '\r') {
            // tolerate CRLF
        } else {
            cur += c;
        }
    }
    if (quoted)
        fail(ErrorCategory::parse,
             "unterminated quote at line " + std::to_string(line_no));
    fields.push_back(std::move(cur));
    return fields;
}

}  // namespace detail

inline std::string features_csv_header() {
    std::string header;
    for (const auto &name : feature_names()) {
        header += name;
        header += ',';
    }
    header += "label";
    return header;
}

inline void write_features_csv(std::ostream &out, const LabeledDataset &data) {
    data.validate();
    if (data.features.rows() > 0 && data.features.cols() != kFeatureCount)
        fail(ErrorCategory::shape, "feature CSV requires exactly " +
                                       std::to_string(kFeatureCount) + " features");
    out << features_csv_header() << '\n';
    std::string line;
    for (std::size_t r = 0; r < data.features.rows(); ++r) {
        line.clear();
        for (double v : data.features.row(r)) {
            detail::append_csv_number(line, v);
            line += ',';
        }
        detail::append_csv_label(line, data.labels[r]);
        out << line << '\n';
    }
}

inline void write_features_csv(const std::string &path, const LabeledDataset &data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCategory::io, "cannot open \"" + path + "\" for writing");
    write_features_csv(out, data);
    if (!out) fail(ErrorCategory::io, "write to \"" + path + "\" failed");
}

inline LabeledDataset read_features_csv(std::istream &in) {
    std::string line;
    if (!std::getline(in, line))
        fail(ErrorCategory::parse, "feature CSV is empty (missing header)");
    {
        auto header = detail::split_csv_line(line, 1);
        std::vector<std::string> expected(feature_names().begin(),
                                          feature_names().end());
        expected.push_back("label");
        if (header != expected)
            fail(ErrorCategory::parse, "feature CSV header does not match the "
                                       "expected 27-column layout");
    }
    LabeledDataset ds;
    ds.features = Matrix(0, kFeatureCount);
    std::size_t line_no = 1;
    std::vector<double> row(kFeatureCount);
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = detail::split_csv_line(line, line_no);
        if (fields.size() != kFeatureCount + 1)
            fail(ErrorCategory::parse,
                 "line " + std::to_string(line_no) + " has " +
                     std::to_string(fields.size()) + " fields, expected " +
                     std::to_string(kFeatureCount + 1));
        for (std::size_t i = 0; i < kFeatureCount; ++i) {
            const std::string &s = fields[i];
            double v = 0;
            auto res = std::from_chars(s.data(), s.data() + s.size(), v);
            if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
                fail(ErrorCategory::parse, "bad number \"" + s + "\" at line " +
                                               std::to_string(line_no));
            if (!std::isfinite(v))
                fail(ErrorCategory::parse, "non-finite value at line " +
                                               std::to_string(line_no));
            row[i] = v;
        }
        ds.features.append_row(row);
        ds.labels.push_back(fields.back());
    }
    return ds;
}

inline LabeledDataset read_features_csv(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCategory::io, "cannot open \"" + path + "\" for reading");
    return read_features_csv(in);
}

}  // namespace procflow
