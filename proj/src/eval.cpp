#include "rategate/eval.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "rategate/detail/parallel.hpp"
#include "rategate/detail/rng.hpp"
#include "rategate/detail/text.hpp"
#include "rategate/transform.hpp"

namespace rategate {

std::vector<std::vector<Index>> make_folds(Index n, int k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("cross-fold needs k >= 2");
    if (n < k) throw std::invalid_argument("cross-fold needs at least k rows");
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    detail::Rng rng(seed);
    rng.shuffle(perm);

    std::vector<std::vector<Index>> folds(static_cast<std::size_t>(k));
    const Index base = n / k;
    const Index extra = n % k;  // first `extra` folds take one more row
    std::size_t cursor = 0;
    for (int j = 0; j < k; ++j) {
        const Index size = base + (j < extra ? 1 : 0);
        auto& fold = folds[static_cast<std::size_t>(j)];
        fold.assign(perm.begin() + static_cast<std::ptrdiff_t>(cursor),
                    perm.begin() + static_cast<std::ptrdiff_t>(cursor + static_cast<std::size_t>(size)));
        cursor += static_cast<std::size_t>(size);
    }
    return folds;
}

double cross_fold_accuracy(const LabeledStateSet& data, int k, std::uint64_t seed, Index rounds) {
    const Index n = data.row_count();
    const bool has_infected = std::find(data.labels.begin(), data.labels.end(), 1) != data.labels.end();
    const bool has_benign = std::find(data.labels.begin(), data.labels.end(), 0) != data.labels.end();
    if (!has_infected || !has_benign)
        throw std::invalid_argument("cross-fold needs both classes in the data");
    const auto folds = make_folds(n, k, seed);

    double accuracy_sum = 0.0;
    for (std::size_t j = 0; j < folds.size(); ++j) {
        std::vector<char> held(static_cast<std::size_t>(n), 0);
        for (Index i : folds[j]) held[static_cast<std::size_t>(i)] = 1;

        LabeledStateSet training;
        training.feature_names = data.feature_names;
        training.features.resize(n - static_cast<Index>(folds[j].size()), data.features.cols());
        Index cursor = 0;
        for (Index i = 0; i < n; ++i) {
            if (held[static_cast<std::size_t>(i)]) continue;
            training.features.row(cursor++) = data.features.row(i);
            training.labels.push_back(data.labels[static_cast<std::size_t>(i)]);
            training.provenance.push_back(data.provenance.empty()
                                              ? RowProvenance{}
                                              : data.provenance[static_cast<std::size_t>(i)]);
        }

        const auto model =
            train_adaboost(training, rounds, detail::derive_seed(seed, static_cast<std::uint64_t>(j), 1));
        Index correct = 0;
        for (Index i : folds[j]) {
            const double score = predict_score(model, data.features.row(i));
            const int predicted = score > 0.5 ? 1 : 0;
            if (predicted == data.labels[static_cast<std::size_t>(i)]) ++correct;
        }
        accuracy_sum += static_cast<double>(correct) / static_cast<double>(folds[j].size());
    }
    return accuracy_sum / static_cast<double>(folds.size());
}

SweepGrid sweep_gates(std::span<const Trace> traces, std::vector<Index> alphas, std::vector<Index> betas,
                      std::vector<double> deltas, int folds, std::uint64_t seed, Index rounds) {
    if (alphas.empty() || betas.empty() || deltas.empty())
        throw std::invalid_argument("sweep needs non-empty alpha, beta, and delta lists");
    if (traces.empty()) throw std::invalid_argument("sweep needs traces");
    const bool any_positive = std::any_of(traces.begin(), traces.end(),
                                          [](const Trace& t) { return t.ransomware_start.has_value(); });
    if (!any_positive) throw std::invalid_argument("sweep needs at least one trace with a ransomware start");

    SweepGrid grid;
    grid.alphas = std::move(alphas);
    grid.betas = std::move(betas);
    grid.deltas = std::move(deltas);
    grid.folds = folds;
    grid.cells.assign(grid.alphas.size() * grid.betas.size() * grid.deltas.size(), std::nullopt);

    detail::parallel_for(grid.cells.size(), [&](std::size_t c) {
        const std::size_t di = c % grid.deltas.size();
        const std::size_t bi = (c / grid.deltas.size()) % grid.betas.size();
        const std::size_t ai = c / (grid.deltas.size() * grid.betas.size());

        DecisionGate gate;
        gate.alpha = grid.alphas[ai];
        gate.beta = grid.betas[bi];
        gate.delta = grid.deltas[di];

        // Keep only traces the gate window can address: benign traces always
        // qualify; positive traces need s(t) + alpha inside the ratio rows.
        std::vector<Trace> fitting;
        bool has_positive = false;
        for (const Trace& trace : traces) {
            if (trace.ransomware_start) {
                const Index ratio_rows = trace.sample_count() - 1;
                if (*trace.ransomware_start + gate.alpha >= ratio_rows) continue;
                has_positive = true;
            }
            fitting.push_back(trace);
        }
        if (!has_positive) return;  // cell stays absent

        const std::uint64_t cell_seed = detail::derive_seed(seed, static_cast<std::uint64_t>(c), 2);
        try {
            const auto data = build_training_set(fitting, gate, detail::derive_seed(cell_seed, 0));
            grid.cells[c] = cross_fold_accuracy(data, folds, detail::derive_seed(cell_seed, 1), rounds);
        } catch (const std::exception&) {
            // cell stays absent
        }
    });
    return grid;
}

std::string heatmap_csv(const SweepGrid& grid) {
    std::string out = "alpha,beta,delta,mean_accuracy\n";
    for (std::size_t ai = 0; ai < grid.alphas.size(); ++ai) {
        for (std::size_t bi = 0; bi < grid.betas.size(); ++bi) {
            for (std::size_t di = 0; di < grid.deltas.size(); ++di) {
                const auto& cell = grid.cell(ai, bi, di);
                if (!cell) continue;
                out += std::to_string(grid.alphas[ai]) + ',' + std::to_string(grid.betas[bi]) + ',';
                out += detail::format_double(grid.deltas[di]) + ',' + detail::format_double(*cell) + '\n';
            }
        }
    }
    return out;
}

void write_heatmap_csv(const SweepGrid& grid, const std::filesystem::path& destination) {
    std::ofstream out(destination);
    if (!out) throw std::runtime_error("cannot open for writing: " + destination.string());
    out << heatmap_csv(grid);
}

namespace {

void check_schema(const StumpEnsemble& model, const Trace& trace) {
    if (trace.feature_names == model.feature_names) return;
    for (const auto& name : model.feature_names) {
        if (std::find(trace.feature_names.begin(), trace.feature_names.end(), name) ==
            trace.feature_names.end())
            throw std::runtime_error("trace is missing model feature '" + name + "'");
    }
    throw std::runtime_error("trace feature order does not match the model schema");
}

// Score of every transformed state of the trace under the model's frozen
// transform constants.
std::vector<double> state_scores(const StumpEnsemble& model, const Trace& trace) {
    StreamState state(model.norm_min, model.norm_max, {model.delta, model.epsilon});
    std::vector<double> scores;
    scores.reserve(static_cast<std::size_t>(trace.sample_count() - 1));
    for (Index k = 0; k < trace.sample_count(); ++k) {
        const auto row = state.step(trace.samples.row(k));
        if (row) scores.push_back(predict_score(model, *row));
    }
    return scores;
}

}  // namespace

DetectionReport detect_online(const StumpEnsemble& model, const Trace& trace, double tau,
                              bool keep_scores) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("tau must be in [0, 1]");
    trace.validate();
    check_schema(model, trace);

    DetectionReport report;
    report.trace_id = trace.machine_id;
    report.tau = tau;
    auto scores = state_scores(model, trace);
    for (std::size_t k = 0; k < scores.size(); ++k) {
        if (scores[k] > tau) {
            report.fired = true;
            report.first_fire_index = static_cast<Index>(k);
            break;
        }
    }
    if (report.fired && trace.ransomware_start && *report.first_fire_index >= *trace.ransomware_start)
        report.delay_samples = *report.first_fire_index - *trace.ransomware_start;
    if (keep_scores) report.per_state_scores = std::move(scores);
    return report;
}

ThresholdCurves threshold_curves(const StumpEnsemble& model, std::span<const Trace> positives,
                                 std::span<const Trace> negatives, const std::vector<double>& taus) {
    if (positives.empty() || negatives.empty())
        throw std::invalid_argument("threshold curves need both populations");
    if (taus.empty()) throw std::invalid_argument("threshold curves need at least one tau");
    for (std::size_t i = 1; i < taus.size(); ++i)
        if (taus[i] < taus[i - 1]) throw std::invalid_argument("tau list must be sorted ascending");

    auto max_scores = [&](std::span<const Trace> population) {
        std::vector<double> maxima(population.size(), 0.0);
        detail::parallel_for(population.size(), [&](std::size_t i) {
            const auto scores = state_scores(model, population[i]);
            double best = 0.0;
            for (double s : scores) best = std::max(best, s);
            maxima[i] = best;
        });
        return maxima;
    };
    for (const Trace& trace : positives) check_schema(model, trace);
    for (const Trace& trace : negatives) check_schema(model, trace);
    const auto positive_max = max_scores(positives);
    const auto negative_max = max_scores(negatives);

    ThresholdCurves curves;
    curves.taus = taus;
    for (double tau : taus) {
        const auto fired = [tau](const std::vector<double>& maxima) {
            const auto count = std::count_if(maxima.begin(), maxima.end(),
                                             [tau](double m) { return m > tau; });
            return static_cast<double>(count) / static_cast<double>(maxima.size());
        };
        curves.positive_rate.push_back(fired(positive_max));
        curves.negative_rate.push_back(fired(negative_max));
    }
    return curves;
}

std::string curves_csv(const ThresholdCurves& curves) {
    std::string out = "tau,positive_rate,negative_rate\n";
    for (std::size_t i = 0; i < curves.taus.size(); ++i) {
        out += detail::format_double(curves.taus[i]) + ',';
        out += detail::format_double(curves.positive_rate[i]) + ',';
        out += detail::format_double(curves.negative_rate[i]) + '\n';
    }
    return out;
}

void write_curves_csv(const ThresholdCurves& curves, const std::filesystem::path& destination) {
    std::ofstream out(destination);
    if (!out) throw std::runtime_error("cannot open for writing: " + destination.string());
    out << curves_csv(curves);
}

DelayHistogram delay_histogram(const std::vector<DetectionReport>& reports) {
    DelayHistogram histogram;
    for (const auto& report : reports) {
        if (!report.fired)
            ++histogram.misses;
        else if (report.delay_samples)
            ++histogram.counts[*report.delay_samples];
    }
    return histogram;
}

std::string histogram_csv(const DelayHistogram& histogram) {
    std::string out = "delay_samples,count\n";
    for (const auto& [delay, count] : histogram.counts)
        out += std::to_string(delay) + ',' + std::to_string(count) + '\n';
    return out;
}

void write_histogram_csv(const DelayHistogram& histogram, const std::filesystem::path& destination) {
    std::ofstream out(destination);
    if (!out) throw std::runtime_error("cannot open for writing: " + destination.string());
    out << histogram_csv(histogram);
}

}  // namespace rategate
