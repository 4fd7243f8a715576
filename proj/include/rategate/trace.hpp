#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rategate {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

struct AppEvent {
    Index sample = 0;
    std::string name;

    bool operator==(const AppEvent&) const = default;
};

/// One machine-run of resource counters: rows are time samples, columns are
/// features. Counters are stored cumulatively; non-monotone columns (e.g.
/// utilization percentages) are accepted as long as values stay non-negative.
struct Trace {
    std::string machine_id;
    std::string created_at;  // ISO-8601
    double sample_interval = 0.5;
    std::vector<std::string> feature_names;
    Matrix samples;  // M x N
    std::optional<Index> ransomware_start;  // 0-based sample index
    std::vector<AppEvent> app_events;
    std::vector<Index> gaps;  // sample slots skipped by a live collector

    Index sample_count() const { return samples.rows(); }
    Index feature_count() const { return samples.cols(); }

    /// Throws std::invalid_argument when any invariant is violated.
    void validate() const;
};

bool operator==(const Trace& a, const Trace& b);

/// Per-sample labels: 0 before ransomware start, 1 from it onward.
using EpochLabels = std::vector<int>;

EpochLabels label_trace(const Trace& trace);

/// Trace file format: line 1 is a JSON manifest, every following line is a
/// JSON array of N counter values. Numeric round trip is exact for doubles.
void write_trace(const Trace& trace, const std::filesystem::path& destination);
Trace read_trace(const std::filesystem::path& source);

/// CSV export for plotting: header row of feature names, one row per sample.
void export_trace_csv(const Trace& trace, const std::filesystem::path& destination);

}  // namespace rategate
