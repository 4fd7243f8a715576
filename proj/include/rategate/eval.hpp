#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rategate/gate.hpp"
#include "rategate/stumps.hpp"
#include "rategate/trace.hpp"

namespace rategate {

// Deterministic shuffle of 0..n-1 into k disjoint folds whose sizes differ by
// at most one.
std::vector<std::vector<Index>> make_folds(Index n, int k, std::uint64_t seed);

// Mean held-out accuracy over k folds; each fold is scored by the ensemble
// trained on the remaining rows at the fixed decision rule score > 0.5.
double cross_fold_accuracy(const LabeledStateSet& data, int k, std::uint64_t seed, Index rounds = 50);

// Mean cross-fold accuracy for every (alpha, beta, delta) cell. Cells whose
// gate fits no positive trace, or whose evaluation fails, stay absent.
struct SweepGrid {
    std::vector<Index> alphas;
    std::vector<Index> betas;
    std::vector<double> deltas;
    int folds = 10;
    std::vector<std::optional<double>> cells;  // alpha-major, then beta, then delta

    std::size_t cell_index(std::size_t ai, std::size_t bi, std::size_t di) const {
        return (ai * betas.size() + bi) * deltas.size() + di;
    }
    const std::optional<double>& cell(std::size_t ai, std::size_t bi, std::size_t di) const {
        return cells[cell_index(ai, bi, di)];
    }
};

SweepGrid sweep_gates(std::span<const Trace> traces, std::vector<Index> alphas, std::vector<Index> betas,
                      std::vector<double> deltas, int folds, std::uint64_t seed, Index rounds = 50);

std::string heatmap_csv(const SweepGrid& grid);
void write_heatmap_csv(const SweepGrid& grid, const std::filesystem::path& destination);

// Outcome of streaming one trace through a model at threshold tau.
struct DetectionReport {
    std::string trace_id;
    double tau = 0.0;
    bool fired = false;
    std::optional<Index> first_fire_index;          // ratio-row index of the first score > tau
    std::optional<Index> delay_samples;             // first_fire_index - s(t), when both are known
    std::optional<std::vector<double>> per_state_scores;
};

DetectionReport detect_online(const StumpEnsemble& model, const Trace& trace, double tau,
                              bool keep_scores = false);

// Fraction of each population with at least one detection, per threshold.
struct ThresholdCurves {
    std::vector<double> taus;
    std::vector<double> positive_rate;
    std::vector<double> negative_rate;
};

ThresholdCurves threshold_curves(const StumpEnsemble& model, std::span<const Trace> positives,
                                 std::span<const Trace> negatives, const std::vector<double>& taus);

std::string curves_csv(const ThresholdCurves& curves);
void write_curves_csv(const ThresholdCurves& curves, const std::filesystem::path& destination);

struct DelayHistogram {
    std::map<Index, int> counts;  // detection delay in ratio rows -> count
    int misses = 0;               // reports that never fired
};

DelayHistogram delay_histogram(const std::vector<DetectionReport>& reports);

std::string histogram_csv(const DelayHistogram& histogram);
void write_histogram_csv(const DelayHistogram& histogram, const std::filesystem::path& destination);

}  // namespace rategate
