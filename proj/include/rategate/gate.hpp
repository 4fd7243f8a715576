#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rategate/trace.hpp"

namespace rategate {

// Sampling and smoothing parameters for training-set construction: wait alpha
// rows after an onset, capture beta rows, smooth with delta. benign_samples is
// the per-trace budget b of randomly drawn benign rows (defaults to beta so
// each positive trace contributes balanced classes).
struct DecisionGate {
    Index alpha = 8;
    Index beta = 4;
    double delta = 0.02;
    std::optional<Index> benign_samples;

    Index benign_budget() const { return benign_samples ? *benign_samples : beta; }
    void validate() const;
};

enum class EpochKind { infected_gate, benign_random, app_gate };

struct RowProvenance {
    std::string trace_id;
    Index sample = 0;  // ratio-row index within the source trace
    EpochKind kind = EpochKind::benign_random;
};

// Labeled transformed states pooled across traces: row i of features carries
// labels[i] (0 benign, 1 infected) and provenance[i].
struct LabeledStateSet {
    Matrix features;
    std::vector<int> labels;
    std::vector<RowProvenance> provenance;
    std::vector<std::string> feature_names;

    Index row_count() const { return features.rows(); }
};

struct GateWindow {
    std::vector<Index> indices;
    bool truncated = false;
};

// Rows {s+alpha, ..., s+alpha+beta-1} clipped to [0, row_count). Truncation at
// the trace end sets the flag; a window entirely beyond the end is an error.
GateWindow gate_indices(Index s, Index alpha, Index beta, Index row_count);

// b distinct indices drawn uniformly from {k : labels[k] == 0}, sorted
// ascending; all of them when fewer than b exist. Deterministic per seed.
std::vector<Index> sample_benign(const EpochLabels& labels, Index b, std::uint64_t seed);

// Transforms every trace with the gate's delta and emits, per trace: the
// infected gate window at s(t)+alpha, a benign gate window after each
// application event (clipped to pre-onset rows), and b random benign rows.
LabeledStateSet build_training_set(std::span<const Trace> traces, const DecisionGate& gate,
                                   std::uint64_t seed);

std::string states_csv(const LabeledStateSet& set);
void write_states_csv(const LabeledStateSet& set, const std::filesystem::path& destination);

}  // namespace rategate
