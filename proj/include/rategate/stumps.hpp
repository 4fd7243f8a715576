#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rategate/gate.hpp"
#include "rategate/trace.hpp"

namespace rategate {

// Which side of the threshold votes infected.
enum class Polarity { le_fires, gt_fires };

struct Stump {
    Index feature = 0;
    double threshold = 0.0;
    Polarity polarity = Polarity::le_fires;
    double weight = 0.0;

    bool fires(const RowVector& row) const {
        const double v = row(feature);
        return polarity == Polarity::le_fires ? v <= threshold : v > threshold;
    }
};

struct TrainingMeta {
    std::uint64_t seed = 0;
    std::vector<std::string> trace_ids;
    std::vector<double> round_errors;  // weighted error of each accepted round
};

// Boosted stump ensemble plus the frozen transform constants needed to score
// live counter streams in the same feature space the model was trained in.
struct StumpEnsemble {
    std::vector<Stump> stumps;
    Index rounds = 0;  // rounds requested at training time
    double norm_min = 0.0;
    double norm_max = 0.0;
    double delta = 0.02;
    double epsilon = 1e-6;
    std::vector<std::string> feature_names;
    TrainingMeta training;
};

// Called once per accepted round with the sample weights the round started
// from, the stump it selected, and that stump's weighted error.
using RoundObserver =
    std::function<void(Index round, const std::vector<double>& weights, const Stump& chosen, double err)>;

// Discrete adaboost over one-feature threshold stumps. Thresholds are
// midpoints of sorted distinct per-feature values; ties resolve to the lowest
// feature index, then the lowest threshold, then the le-fires polarity.
// Training stops early at a round whose best weighted error reaches 0.5
// (round discarded) or 0 (round kept).
StumpEnsemble train_adaboost(const LabeledStateSet& data, Index rounds, std::uint64_t seed,
                             const RoundObserver& observer = {});

// Normalized weighted vote: fraction of total stump weight voting infected.
double predict_score(const StumpEnsemble& model, const RowVector& row);

void save_model(const StumpEnsemble& model, const std::filesystem::path& destination);
StumpEnsemble load_model(const std::filesystem::path& source);

// Gate-sample the traces, train, and freeze pooled normalization constants
// (min of per-trace increment minima, max of maxima) into the model.
StumpEnsemble train_from_traces(std::span<const Trace> traces, const DecisionGate& gate, Index rounds,
                                std::uint64_t seed);

}  // namespace rategate
