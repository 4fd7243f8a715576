#include "rategate/stumps.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "rategate/transform.hpp"

namespace rategate {

using nlohmann::json;

namespace {

constexpr double kErrFloor = 1e-10;

struct Candidate {
    double err = 0.0;
    Index feature = 0;
    double threshold = 0.0;
    Polarity polarity = Polarity::le_fires;
    bool found = false;
};

// Best stump for the current sample weights. Per feature, rows are walked in
// value order accumulating per-class weight below each candidate threshold;
// the le-fires error is (benign weight below) + (infected weight above) and
// the gt-fires error is its complement. Strict improvement plus the fixed
// visit order (feature, then threshold, then le before gt) makes ties
// deterministic.
Candidate best_stump(const Matrix& features, const std::vector<int>& labels,
                     const std::vector<double>& weights,
                     const std::vector<std::vector<Index>>& order) {
    const Index n_features = features.cols();
    double infected_total = 0.0;
    double weight_total = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        weight_total += weights[i];
        if (labels[i] == 1) infected_total += weights[i];
    }

    Candidate best;
    for (Index j = 0; j < n_features; ++j) {
        const auto& sorted = order[static_cast<std::size_t>(j)];
        double benign_below = 0.0;
        double infected_below = 0.0;
        for (std::size_t p = 0; p + 1 < sorted.size(); ++p) {
            const Index i = sorted[p];
            if (labels[static_cast<std::size_t>(i)] == 1)
                infected_below += weights[static_cast<std::size_t>(i)];
            else
                benign_below += weights[static_cast<std::size_t>(i)];
            const double lo = features(i, j);
            const double hi = features(sorted[p + 1], j);
            if (lo == hi) continue;
            const double threshold = lo + (hi - lo) / 2.0;
            const double err_le = benign_below + (infected_total - infected_below);
            const double err_gt = weight_total - err_le;
            if (!best.found || err_le < best.err)
                best = {err_le, j, threshold, Polarity::le_fires, true};
            if (err_gt < best.err) best = {err_gt, j, threshold, Polarity::gt_fires, true};
        }
    }
    return best;
}

json polarity_json(Polarity p) { return p == Polarity::le_fires ? "le" : "gt"; }

Polarity polarity_from(const std::string& tag) {
    if (tag == "le") return Polarity::le_fires;
    if (tag == "gt") return Polarity::gt_fires;
    throw std::runtime_error("unknown stump polarity: " + tag);
}

}  // namespace

StumpEnsemble train_adaboost(const LabeledStateSet& data, Index rounds, std::uint64_t seed,
                             const RoundObserver& observer) {
    const Index n = data.row_count();
    if (n == 0) throw std::invalid_argument("training data is empty");
    if (rounds < 1) throw std::invalid_argument("training needs at least one round");
    if (data.labels.size() != static_cast<std::size_t>(n))
        throw std::invalid_argument("labels do not match feature rows");
    const bool has_infected = std::find(data.labels.begin(), data.labels.end(), 1) != data.labels.end();
    const bool has_benign = std::find(data.labels.begin(), data.labels.end(), 0) != data.labels.end();
    if (!has_infected || !has_benign)
        throw std::invalid_argument("training data must contain both classes");

    // Per-feature row order by value; stable across rounds since only the
    // sample weights change.
    std::vector<std::vector<Index>> order(static_cast<std::size_t>(data.features.cols()));
    for (Index j = 0; j < data.features.cols(); ++j) {
        auto& sorted = order[static_cast<std::size_t>(j)];
        sorted.resize(static_cast<std::size_t>(n));
        std::iota(sorted.begin(), sorted.end(), Index{0});
        std::stable_sort(sorted.begin(), sorted.end(),
                         [&](Index a, Index b) { return data.features(a, j) < data.features(b, j); });
    }

    StumpEnsemble model;
    model.rounds = rounds;
    model.feature_names = data.feature_names;
    model.training.seed = seed;

    std::vector<double> weights(static_cast<std::size_t>(n), 1.0 / static_cast<double>(n));
    for (Index round = 0; round < rounds; ++round) {
        const Candidate chosen = best_stump(data.features, data.labels, weights, order);
        if (!chosen.found || chosen.err >= 0.5) break;  // no stump beats random guessing

        const double floored = std::max(chosen.err, kErrFloor);
        Stump stump{chosen.feature, chosen.threshold, chosen.polarity,
                    0.5 * std::log((1.0 - floored) / floored)};
        if (observer) observer(round, weights, stump, chosen.err);
        model.stumps.push_back(stump);
        model.training.round_errors.push_back(chosen.err);
        if (chosen.err == 0.0) break;  // perfectly separated; further rounds are no-ops

        double total = 0.0;
        for (Index i = 0; i < n; ++i) {
            const int predicted = stump.fires(data.features.row(i)) ? 1 : 0;
            const bool correct = predicted == data.labels[static_cast<std::size_t>(i)];
            weights[static_cast<std::size_t>(i)] *= std::exp(correct ? -stump.weight : stump.weight);
            total += weights[static_cast<std::size_t>(i)];
        }
        for (double& w : weights) w /= total;
    }

    // Keep the ensemble scorable even when no round was accepted: a single
    // zero-weight stump yields score 0 (never fires a detection).
    if (model.stumps.empty()) model.stumps.push_back(Stump{0, 0.0, Polarity::le_fires, 0.0});
    return model;
}

double predict_score(const StumpEnsemble& model, const RowVector& row) {
    if (model.stumps.empty()) throw std::invalid_argument("model has no stumps");
    if (!model.feature_names.empty() && row.size() != static_cast<Index>(model.feature_names.size()))
        throw std::invalid_argument("row arity does not match the model schema");
    double total = 0.0;
    double infected = 0.0;
    for (const auto& stump : model.stumps) {
        if (row.size() <= stump.feature) throw std::invalid_argument("row arity too small for model");
        total += stump.weight;
        if (stump.fires(row)) infected += stump.weight;
    }
    if (total <= 0.0) return 0.0;
    return infected / total;
}

void save_model(const StumpEnsemble& model, const std::filesystem::path& destination) {
    json doc;
    doc["version"] = 1;
    doc["rounds"] = model.rounds;
    json stumps = json::array();
    for (const auto& stump : model.stumps) {
        stumps.push_back({{"feature", stump.feature},
                          {"threshold", stump.threshold},
                          {"polarity", polarity_json(stump.polarity)},
                          {"weight", stump.weight}});
    }
    doc["stumps"] = stumps;
    doc["norm_min"] = model.norm_min;
    doc["norm_max"] = model.norm_max;
    doc["delta"] = model.delta;
    doc["epsilon"] = model.epsilon;
    doc["feature_names"] = model.feature_names;
    doc["training"] = {{"seed", model.training.seed},
                       {"trace_ids", model.training.trace_ids},
                       {"round_errors", model.training.round_errors}};

    std::ofstream out(destination);
    if (!out) throw std::runtime_error("cannot open for writing: " + destination.string());
    out << doc.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + destination.string());
}

StumpEnsemble load_model(const std::filesystem::path& source) {
    std::ifstream in(source);
    if (!in) throw std::runtime_error("cannot open model: " + source.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed model file " + source.string() + ": " + e.what());
    }

    try {
        const auto version = doc.at("version").get<int>();
        if (version != 1)
            throw std::runtime_error("unsupported model version " + std::to_string(version) + " in " +
                                     source.string());
        StumpEnsemble model;
        model.rounds = doc.at("rounds").get<Index>();
        for (const auto& entry : doc.at("stumps")) {
            Stump stump;
            stump.feature = entry.at("feature").get<Index>();
            stump.threshold = entry.at("threshold").get<double>();
            stump.polarity = polarity_from(entry.at("polarity").get<std::string>());
            stump.weight = entry.at("weight").get<double>();
            model.stumps.push_back(stump);
        }
        if (model.stumps.empty()) throw std::runtime_error("model has no stumps: " + source.string());
        model.norm_min = doc.at("norm_min").get<double>();
        model.norm_max = doc.at("norm_max").get<double>();
        model.delta = doc.at("delta").get<double>();
        model.epsilon = doc.at("epsilon").get<double>();
        model.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
        if (doc.contains("training")) {
            const auto& training = doc.at("training");
            model.training.seed = training.value("seed", std::uint64_t{0});
            model.training.trace_ids = training.value("trace_ids", std::vector<std::string>{});
            model.training.round_errors = training.value("round_errors", std::vector<double>{});
        }
        return model;
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed model file " + source.string() + ": " + e.what());
    }
}

StumpEnsemble train_from_traces(std::span<const Trace> traces, const DecisionGate& gate, Index rounds,
                                std::uint64_t seed) {
    const auto data = build_training_set(traces, gate, seed);
    StumpEnsemble model = train_adaboost(data, rounds, seed);
    model.delta = gate.delta;
    model.epsilon = TransformParams{}.epsilon;

    // Freeze pooled normalization constants so online detection maps live
    // increments into the same unit range the training rows came from.
    bool first = true;
    for (const auto& trace : traces) {
        const Matrix increments = first_difference(trace.samples);
        const double lo = increments.minCoeff();
        const double hi = increments.maxCoeff();
        if (first) {
            model.norm_min = lo;
            model.norm_max = hi;
            first = false;
        } else {
            model.norm_min = std::min(model.norm_min, lo);
            model.norm_max = std::max(model.norm_max, hi);
        }
        model.training.trace_ids.push_back(trace.machine_id);
    }
    return model;
}

}  // namespace rategate
