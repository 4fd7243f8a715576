#include "rategate/gate.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "rategate/detail/rng.hpp"
#include "rategate/detail/text.hpp"
#include "rategate/transform.hpp"

namespace rategate {

void DecisionGate::validate() const {
    if (alpha < 0) throw std::invalid_argument("gate alpha must be >= 0");
    if (beta < 1) throw std::invalid_argument("gate beta must be >= 1");
    if (!(delta >= 0.0 && delta <= 1.0)) throw std::invalid_argument("gate delta must be in [0, 1]");
    if (benign_samples && *benign_samples < 1)
        throw std::invalid_argument("gate benign_samples must be >= 1");
}

GateWindow gate_indices(Index s, Index alpha, Index beta, Index row_count) {
    if (s < 0) throw std::invalid_argument("gate start must be >= 0");
    if (alpha < 0 || beta < 1) throw std::invalid_argument("gate needs alpha >= 0 and beta >= 1");
    if (row_count < 1) throw std::invalid_argument("gate needs a positive row count");
    const Index first = s + alpha;
    if (first >= row_count) throw std::invalid_argument("gate window lies entirely beyond the trace end");
    GateWindow window;
    const Index last = std::min(first + beta, row_count);
    for (Index k = first; k < last; ++k) window.indices.push_back(k);
    window.truncated = (first + beta > row_count);
    return window;
}

std::vector<Index> sample_benign(const EpochLabels& labels, Index b, std::uint64_t seed) {
    if (b < 1) throw std::invalid_argument("benign budget must be >= 1");
    std::vector<Index> benign;
    for (std::size_t k = 0; k < labels.size(); ++k)
        if (labels[k] == 0) benign.push_back(static_cast<Index>(k));
    if (benign.empty()) throw std::invalid_argument("trace has no benign rows to sample");
    if (static_cast<Index>(benign.size()) <= b) return benign;

    detail::Rng rng(seed);
    auto picks = rng.sample_without_replacement(static_cast<Index>(benign.size()), b);
    std::vector<Index> chosen;
    chosen.reserve(picks.size());
    for (Index p : picks) chosen.push_back(benign[static_cast<std::size_t>(p)]);
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

LabeledStateSet build_training_set(std::span<const Trace> traces, const DecisionGate& gate,
                                   std::uint64_t seed) {
    gate.validate();
    if (traces.empty()) throw std::invalid_argument("build_training_set needs at least one trace");
    const auto& schema = traces.front().feature_names;
    for (const auto& trace : traces)
        if (trace.feature_names != schema)
            throw std::invalid_argument("traces disagree on the feature schema");

    const TransformParams params{gate.delta, TransformParams{}.epsilon};

    std::vector<RowVector> rows;
    std::vector<int> labels;
    std::vector<RowProvenance> provenance;
    auto emit = [&](const Matrix& ratios, const std::string& id, Index k, int label, EpochKind kind) {
        rows.push_back(ratios.row(k));
        labels.push_back(label);
        provenance.push_back({id, k, kind});
    };

    for (std::size_t ordinal = 0; ordinal < traces.size(); ++ordinal) {
        const Trace& trace = traces[ordinal];
        const auto transformed = ratio_of_rates_transform(trace, params);
        const Matrix& ratios = transformed.ratios;
        const Index row_count = ratios.rows();

        if (trace.ransomware_start) {
            const auto window = gate_indices(*trace.ransomware_start, gate.alpha, gate.beta, row_count);
            for (Index k : window.indices)
                emit(ratios, trace.machine_id, k, 1, EpochKind::infected_gate);
        }

        for (const auto& event : trace.app_events) {
            // Benign gate after an application launch; rows at or past the
            // ransomware onset are excluded so no index carries both labels.
            if (event.sample + gate.alpha >= row_count) continue;
            const auto window = gate_indices(event.sample, gate.alpha, gate.beta, row_count);
            for (Index k : window.indices) {
                if (trace.ransomware_start && k >= *trace.ransomware_start) continue;
                emit(ratios, trace.machine_id, k, 0, EpochKind::app_gate);
            }
        }

        EpochLabels row_labels = label_trace(trace);
        row_labels.resize(static_cast<std::size_t>(row_count));  // labels over ratio rows
        const auto benign = sample_benign(row_labels, gate.benign_budget(),
                                          detail::derive_seed(seed, static_cast<std::uint64_t>(ordinal)));
        for (Index k : benign) emit(ratios, trace.machine_id, k, 0, EpochKind::benign_random);
    }

    LabeledStateSet set;
    set.feature_names = schema;
    set.labels = std::move(labels);
    set.provenance = std::move(provenance);
    set.features.resize(static_cast<Index>(rows.size()), static_cast<Index>(schema.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) set.features.row(static_cast<Index>(i)) = rows[i];
    return set;
}

std::string states_csv(const LabeledStateSet& set) {
    std::string out = "label,trace_id,index";
    for (const auto& name : set.feature_names) out += "," + detail::csv_field(name);
    out += '\n';
    for (Index i = 0; i < set.row_count(); ++i) {
        const auto& prov = set.provenance[static_cast<std::size_t>(i)];
        out += std::to_string(set.labels[static_cast<std::size_t>(i)]);
        out += ',' + detail::csv_field(prov.trace_id) + ',' + std::to_string(prov.sample);
        for (Index j = 0; j < set.features.cols(); ++j)
            out += "," + detail::format_double(set.features(i, j));
        out += '\n';
    }
    return out;
}

void write_states_csv(const LabeledStateSet& set, const std::filesystem::path& destination) {
    std::ofstream out(destination);
    if (!out) throw std::runtime_error("cannot open for writing: " + destination.string());
    out << states_csv(set);
}

}  // namespace rategate
