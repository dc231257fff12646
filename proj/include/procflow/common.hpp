#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace procflow {

inline constexpr const char *kVersion = "0.1.0";

/// Machine-readable failure category; every error the library throws
/// carries one so the CLI can report "error[category]: message".
enum class ErrorCategory {
    validation,      // bad parameter or precondition violation
    data_integrity,  // inconsistent input data (e.g. mixed labels in a bucket)
    io,              // file system failure
    parse,           // malformed input file
    shape,           // dimensionality mismatch
    config,          // unusable experiment/suite configuration
    internal,        // contract violation inside the library
};

inline const char *to_string(ErrorCategory c) {
    switch (c) {
    case ErrorCategory::validation: return "validation";
    case ErrorCategory::data_integrity: return "data-integrity";
    case ErrorCategory::io: return "io";
    case ErrorCategory::parse: return "parse";
    case ErrorCategory::shape: return "shape";
    case ErrorCategory::config: return "config";
    case ErrorCategory::internal: return "internal";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string &message)
        : std::runtime_error(message), category_(category) {}

    ErrorCategory category() const { return category_; }

private:
    ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory c, const std::string &message) {
    throw Error(c, message);
}

/// Dense row-major matrix of doubles. Rows are observations, columns features.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double &at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const {
        return {data_.data() + r * cols_, cols_};
    }

    std::vector<double> &data() { return data_; }
    const std::vector<double> &data() const { return data_; }

    void append_row(std::span<const double> values) {
        if (cols_ == 0 && rows_ == 0) cols_ = values.size();
        if (values.size() != cols_)
            fail(ErrorCategory::shape,
                 "row has " + std::to_string(values.size()) + " columns, expected " +
                     std::to_string(cols_));
        data_.insert(data_.end(), values.begin(), values.end());
        ++rows_;
    }

    Matrix select_rows(std::span<const std::size_t> indices) const {
        Matrix out(indices.size(), cols_);
        for (std::size_t i = 0; i < indices.size(); ++i) {
            auto src = row(indices[i]);
            std::copy(src.begin(), src.end(), out.row(i).begin());
        }
        return out;
    }

    bool operator==(const Matrix &other) const {
        return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Worker count for internal parallelism. PROCFLOW_THREADS caps it;
/// 0 or unset means auto (hardware concurrency).
inline unsigned resolve_thread_count() {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    const char *env = std::getenv("PROCFLOW_THREADS");
    if (env == nullptr || *env == '\0') return hw;
    char *end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end == env || v < 0) return hw;
    if (v == 0) return hw;
    return static_cast<unsigned>(v) < hw ? static_cast<unsigned>(v) : hw;
}

/// Runs fn(i) for i in [0, n). Work units must be independent; results
/// keyed by index so the schedule cannot affect the output.
template <typename Fn>
void parallel_for(std::size_t n, Fn &&fn) {
    unsigned workers = resolve_thread_count();
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    if (workers > n) workers = static_cast<unsigned>(n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto &t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace procflow
