#include <glob.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "rategate/collector.hpp"
#include "rategate/detail/text.hpp"
#include "rategate/eval.hpp"
#include "rategate/gate.hpp"
#include "rategate/simulator.hpp"
#include "rategate/stumps.hpp"
#include "rategate/trace.hpp"

namespace {

using namespace rategate;
using nlohmann::json;

// Flag-format problems: reported as usage errors (exit 1), unlike data errors
// (exit 2).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::string current;
    for (char c : text) {
        if (c == sep) {
            parts.push_back(current);
            current.clear();
        } else {
            current += c;
        }
    }
    parts.push_back(current);
    return parts;
}

long parse_long(const std::string& token) {
    std::size_t used = 0;
    const long value = std::stol(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return value;
}

double parse_double(const std::string& token) {
    std::size_t used = 0;
    const double value = std::stod(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return value;
}

// Accepts "1,2,3" or "start:stop:step" (stop inclusive, step optional).
std::vector<Index> parse_index_list(const std::string& text, const std::string& flag) {
    try {
        std::vector<Index> values;
        if (text.find(':') != std::string::npos) {
            const auto parts = split(text, ':');
            if (parts.size() < 2 || parts.size() > 3) throw std::invalid_argument(text);
            const long start = parse_long(parts[0]);
            const long stop = parse_long(parts[1]);
            const long step = parts.size() == 3 ? parse_long(parts[2]) : 1;
            if (step < 1) throw std::invalid_argument("step must be >= 1");
            for (long v = start; v <= stop; v += step) values.push_back(v);
        } else {
            for (const auto& token : split(text, ',')) values.push_back(parse_long(token));
        }
        if (values.empty()) throw std::invalid_argument("empty list");
        return values;
    } catch (const std::exception&) {
        throw UsageError("cannot parse integer list for " + flag + ": '" + text + "'");
    }
}

std::vector<double> parse_double_list(const std::string& text, const std::string& flag) {
    try {
        std::vector<double> values;
        if (text.find(':') != std::string::npos) {
            const auto parts = split(text, ':');
            if (parts.size() != 3) throw std::invalid_argument(text);
            const double start = parse_double(parts[0]);
            const double stop = parse_double(parts[1]);
            const double step = parse_double(parts[2]);
            if (!(step > 0)) throw std::invalid_argument("step must be > 0");
            for (int i = 0;; ++i) {
                // Snap each grid point to 12 decimals so 3*0.05 prints as 0.15.
                const double v = std::round((start + static_cast<double>(i) * step) * 1e12) / 1e12;
                if (v > stop + 1e-12) break;
                values.push_back(v);
            }
        } else {
            for (const auto& token : split(text, ',')) values.push_back(parse_double(token));
        }
        if (values.empty()) throw std::invalid_argument("empty list");
        return values;
    } catch (const std::exception&) {
        throw UsageError("cannot parse number list for " + flag + ": '" + text + "'");
    }
}

std::vector<std::string> glob_paths(const std::string& pattern) {
    ::glob_t results{};
    const int rc = ::glob(pattern.c_str(), 0, nullptr, &results);
    std::vector<std::string> paths;
    if (rc == 0)
        for (std::size_t i = 0; i < results.gl_pathc; ++i) paths.emplace_back(results.gl_pathv[i]);
    ::globfree(&results);
    if (rc != 0 && rc != GLOB_NOMATCH)
        throw std::runtime_error("cannot expand pattern: " + pattern);
    return paths;
}

std::vector<Trace> load_traces_glob(const std::string& pattern) {
    const auto paths = glob_paths(pattern);
    if (paths.empty()) throw std::runtime_error("no trace files match: " + pattern);
    std::vector<Trace> traces;
    traces.reserve(paths.size());
    for (const auto& path : paths) traces.push_back(read_trace(path));
    return traces;
}

std::vector<Trace> load_traces_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw std::runtime_error("not a directory: " + dir.string());
    std::vector<std::filesystem::path> paths;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".trace")
            paths.push_back(entry.path());
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) throw std::runtime_error("no .trace files in: " + dir.string());
    std::vector<Trace> traces;
    traces.reserve(paths.size());
    for (const auto& path : paths) traces.push_back(read_trace(path));
    return traces;
}

json report_json(const DetectionReport& report, double sample_interval) {
    json doc;
    doc["trace_id"] = report.trace_id;
    doc["tau"] = report.tau;
    doc["fired"] = report.fired;
    if (report.first_fire_index) doc["first_fire_index"] = *report.first_fire_index;
    if (report.delay_samples) {
        doc["delay_samples"] = *report.delay_samples;
        doc["delay_seconds"] = static_cast<double>(*report.delay_samples) * sample_interval;
    }
    if (report.per_state_scores) doc["scores"] = *report.per_state_scores;
    return doc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rategate: rate-ratio change-point detection toolkit"};
    app.require_subcommand(1);

    // --- simulate ---------------------------------------------------------
    auto* simulate = app.add_subcommand("simulate", "generate a synthetic trace corpus");
    std::string sim_kind;
    int sim_experiments = 40, sim_instances = 4;
    double sim_duration_min = 30.0, sim_interval = 0.5, sim_noise = 0.05;
    Index sim_features = 16;
    std::uint64_t sim_seed = 0;
    std::string sim_out;
    simulate->add_option("--kind", sim_kind, "schedule kind")
        ->required()
        ->check(CLI::IsMember({"h0", "h1a", "h1b"}));
    simulate->add_option("--experiments", sim_experiments, "number of experiments");
    simulate->add_option("--instances", sim_instances, "instances per experiment");
    simulate->add_option("--duration-min", sim_duration_min, "trace duration in minutes");
    simulate->add_option("--interval", sim_interval, "seconds per sample");
    simulate->add_option("--features", sim_features, "number of counter features");
    simulate->add_option("--noise", sim_noise, "relative increment noise (std dev)");
    simulate->add_option("--seed", sim_seed, "corpus seed");
    simulate->add_option("--out", sim_out, "output directory")->required();
    simulate->callback([&] {
        SimConfig config;
        config.n_features = sim_features;
        config.sample_interval = sim_interval;
        config.noise_std = sim_noise;
        config.total_samples = static_cast<Index>(std::llround(sim_duration_min * 60.0 / sim_interval));
        const ScheduleKind kind = sim_kind == "h0"    ? ScheduleKind::h0
                                  : sim_kind == "h1a" ? ScheduleKind::h1a
                                                      : ScheduleKind::h1b;
        const auto traces = generate_corpus(kind, sim_experiments, sim_instances, config, sim_seed);
        write_corpus(traces, kind, sim_seed, sim_out);
        std::cout << "wrote " << traces.size() << " traces to " << sim_out << '\n';
    });

    // --- train ------------------------------------------------------------
    auto* train = app.add_subcommand("train", "train a boosted-stump model from traces");
    std::string train_traces, train_out;
    Index train_alpha = 8, train_beta = 4, train_rounds = 50;
    double train_delta = 0.02;
    std::int64_t train_benign = -1;
    std::uint64_t train_seed = 0;
    train->add_option("--traces", train_traces, "trace file glob")->required();
    train->add_option("--alpha", train_alpha, "gate offset after onset (samples)");
    train->add_option("--beta", train_beta, "gate length (samples)");
    train->add_option("--delta", train_delta, "smoothing factor");
    train->add_option("--benign-samples", train_benign, "benign rows per trace (default: beta)");
    train->add_option("--rounds", train_rounds, "boosting rounds");
    train->add_option("--seed", train_seed, "sampling seed");
    train->add_option("--out", train_out, "model file")->required();
    train->callback([&] {
        DecisionGate gate;
        gate.alpha = train_alpha;
        gate.beta = train_beta;
        gate.delta = train_delta;
        if (train_benign >= 0) gate.benign_samples = train_benign;
        const auto traces = load_traces_glob(train_traces);
        const auto model = train_from_traces(traces, gate, train_rounds, train_seed);
        save_model(model, train_out);
        std::cout << "trained " << model.stumps.size() << " stumps from " << traces.size()
                  << " traces; wrote " << train_out << '\n';
    });

    // --- sweep ------------------------------------------------------------
    auto* sweep = app.add_subcommand("sweep", "cross-fold accuracy over a gate parameter grid");
    std::string sweep_traces, sweep_alphas, sweep_betas, sweep_deltas, sweep_out;
    int sweep_folds = 10;
    Index sweep_rounds = 50;
    std::uint64_t sweep_seed = 0;
    sweep->add_option("--traces", sweep_traces, "trace file glob")->required();
    sweep->add_option("--alphas", sweep_alphas, "alpha list (a,b,c or start:stop:step)")->required();
    sweep->add_option("--betas", sweep_betas, "beta list")->required();
    sweep->add_option("--deltas", sweep_deltas, "delta list")->required();
    sweep->add_option("--folds", sweep_folds, "cross-fold count");
    sweep->add_option("--rounds", sweep_rounds, "boosting rounds");
    sweep->add_option("--seed", sweep_seed, "sweep seed");
    sweep->add_option("--out", sweep_out, "heatmap CSV file")->required();
    sweep->callback([&] {
        const auto traces = load_traces_glob(sweep_traces);
        const auto grid = sweep_gates(traces, parse_index_list(sweep_alphas, "--alphas"),
                                      parse_index_list(sweep_betas, "--betas"),
                                      parse_double_list(sweep_deltas, "--deltas"), sweep_folds,
                                      sweep_seed, sweep_rounds);
        write_heatmap_csv(grid, sweep_out);
        std::size_t present = 0;
        for (const auto& cell : grid.cells) present += cell.has_value();
        std::cout << "wrote " << present << '/' << grid.cells.size() << " cells to " << sweep_out
                  << '\n';
    });

    // --- detect -----------------------------------------------------------
    auto* detect = app.add_subcommand("detect", "stream one trace through a model");
    std::string detect_model, detect_trace, detect_out;
    double detect_tau = 0.75;
    bool detect_scores = false;
    detect->add_option("--model", detect_model, "model file")->required();
    detect->add_option("--trace", detect_trace, "trace file")->required();
    detect->add_option("--tau", detect_tau, "detection threshold");
    detect->add_option("--out", detect_out, "report file (default: stdout)");
    detect->add_flag("--scores", detect_scores, "include per-state scores in the report");
    detect->callback([&] {
        const auto model = load_model(detect_model);
        const auto trace = read_trace(detect_trace);
        const auto report = detect_online(model, trace, detect_tau, detect_scores);
        const json doc = report_json(report, trace.sample_interval);
        if (detect_out.empty()) {
            std::cout << doc.dump(2) << '\n';
        } else {
            std::ofstream out(detect_out);
            if (!out) throw std::runtime_error("cannot open for writing: " + detect_out);
            out << doc.dump(2) << '\n';
            std::cout << (report.fired ? "fired" : "did not fire") << "; wrote " << detect_out << '\n';
        }
    });

    // --- evaluate ---------------------------------------------------------
    auto* evaluate = app.add_subcommand("evaluate", "threshold curves and detection delays");
    std::string eval_model, eval_positive, eval_negative, eval_taus = "0:1:0.01";
    std::string eval_out, eval_delays;
    double eval_delay_tau = 0.75;
    evaluate->add_option("--model", eval_model, "model file")->required();
    evaluate->add_option("--positive", eval_positive, "directory of test-positive traces")->required();
    evaluate->add_option("--negative", eval_negative, "directory of test-negative traces")->required();
    evaluate->add_option("--taus", eval_taus, "threshold list");
    evaluate->add_option("--delay-tau", eval_delay_tau, "threshold for the delay histogram");
    evaluate->add_option("--out", eval_out, "curves CSV file")->required();
    evaluate->add_option("--delays", eval_delays, "delay histogram CSV file");
    evaluate->callback([&] {
        const auto model = load_model(eval_model);
        const auto positives = load_traces_dir(eval_positive);
        const auto negatives = load_traces_dir(eval_negative);
        const auto curves = threshold_curves(model, positives, negatives,
                                             parse_double_list(eval_taus, "--taus"));
        write_curves_csv(curves, eval_out);
        std::cout << "wrote " << curves.taus.size() << " thresholds to " << eval_out << '\n';
        if (!eval_delays.empty()) {
            std::vector<DetectionReport> reports;
            reports.reserve(positives.size());
            for (const auto& trace : positives)
                reports.push_back(detect_online(model, trace, eval_delay_tau));
            const auto histogram = delay_histogram(reports);
            write_histogram_csv(histogram, eval_delays);
            std::cout << "delay histogram at tau=" << eval_delay_tau << ": "
                      << (reports.size() - static_cast<std::size_t>(histogram.misses)) << " fired, "
                      << histogram.misses << " misses; wrote " << eval_delays << '\n';
        }
    });

    // --- collect ----------------------------------------------------------
    auto* collect_cmd = app.add_subcommand("collect", "sample live resource counters into a trace");
    double collect_interval = 0.5, collect_duration = 10.0;
    std::string collect_out, collect_source = "procfs";
    collect_cmd->add_option("--interval", collect_interval, "seconds per sample");
    collect_cmd->add_option("--duration", collect_duration, "collection duration in seconds")
        ->required();
    collect_cmd->add_option("--source", collect_source, "counter source")
        ->check(CLI::IsMember({"procfs", "fake"}));
    collect_cmd->add_option("--out", collect_out, "trace file")->required();
    collect_cmd->callback([&] {
        Trace trace;
        if (collect_source == "fake") {
            LinearFakeSource source({"cpu.user", "cpu.system", "disk.write.count", "disk.read.count"},
                                    (Vector(4) << 12.0, 7.0, 4.0, 3.0).finished());
            trace = collect(source, collect_interval, collect_duration);
        } else {
            ProcfsSource source;
            CollectOptions options;
            options.pace = true;
            trace = collect(source, collect_interval, collect_duration, options);
        }
        write_trace(trace, collect_out);
        std::cout << "collected " << trace.sample_count() << " samples ("
                  << trace.gaps.size() << " gaps); wrote " << collect_out << '\n';
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 1;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
