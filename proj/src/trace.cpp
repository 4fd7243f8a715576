#include "rategate/trace.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "rategate/detail/text.hpp"

namespace rategate {

using nlohmann::json;

void Trace::validate() const {
    if (samples.rows() < 2) throw std::invalid_argument("trace needs at least 2 samples");
    if (samples.cols() < 2) throw std::invalid_argument("trace needs at least 2 features");
    if (static_cast<Index>(feature_names.size()) != samples.cols())
        throw std::invalid_argument("feature_names size does not match sample columns");
    if (!(sample_interval > 0.0)) throw std::invalid_argument("sample_interval must be positive");
    if (!samples.allFinite()) throw std::invalid_argument("trace contains non-finite values");
    if ((samples.array() < 0.0).any()) throw std::invalid_argument("trace contains negative counter values");
    if (ransomware_start) {
        if (*ransomware_start < 0 || *ransomware_start >= samples.rows())
            throw std::invalid_argument("ransomware_start outside trace");
    }
    for (const auto& ev : app_events) {
        if (ev.sample < 0 || ev.sample >= samples.rows())
            throw std::invalid_argument("app event index outside trace");
    }
    for (Index g : gaps) {
        if (g < 0 || g > samples.rows()) throw std::invalid_argument("gap index outside trace");
    }
}

bool operator==(const Trace& a, const Trace& b) {
    return a.machine_id == b.machine_id && a.created_at == b.created_at &&
           a.sample_interval == b.sample_interval && a.feature_names == b.feature_names &&
           a.samples.rows() == b.samples.rows() && a.samples.cols() == b.samples.cols() &&
           a.samples == b.samples && a.ransomware_start == b.ransomware_start &&
           a.app_events == b.app_events && a.gaps == b.gaps;
}

EpochLabels label_trace(const Trace& trace) {
    trace.validate();
    const Index m = trace.sample_count();
    EpochLabels labels(static_cast<std::size_t>(m), 0);
    if (trace.ransomware_start) {
        for (Index k = *trace.ransomware_start; k < m; ++k) labels[static_cast<std::size_t>(k)] = 1;
    }
    return labels;
}

namespace {

json manifest_json(const Trace& trace) {
    json manifest;
    manifest["machine_id"] = trace.machine_id;
    manifest["created_at"] = trace.created_at;
    manifest["sample_interval"] = trace.sample_interval;
    manifest["feature_names"] = trace.feature_names;
    if (trace.ransomware_start) manifest["ransomware_start"] = *trace.ransomware_start;
    if (!trace.app_events.empty()) {
        json events = json::array();
        for (const auto& ev : trace.app_events) events.push_back({ev.sample, ev.name});
        manifest["app_events"] = events;
    }
    if (!trace.gaps.empty()) manifest["gaps"] = trace.gaps;
    return manifest;
}

[[noreturn]] void fail_at_line(const std::filesystem::path& source, std::size_t line, const std::string& what) {
    throw std::runtime_error(source.string() + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

void write_trace(const Trace& trace, const std::filesystem::path& destination) {
    trace.validate();
    std::ofstream out(destination);
    if (!out) throw std::runtime_error("cannot open for writing: " + destination.string());
    out << manifest_json(trace).dump() << '\n';
    for (Index k = 0; k < trace.samples.rows(); ++k) {
        out << '[';
        for (Index j = 0; j < trace.samples.cols(); ++j) {
            if (j > 0) out << ',';
            out << detail::format_double(trace.samples(k, j));
        }
        out << "]\n";
    }
    if (!out) throw std::runtime_error("write failed: " + destination.string());
}

Trace read_trace(const std::filesystem::path& source) {
    std::ifstream in(source);
    if (!in) throw std::runtime_error("cannot open trace: " + source.string());

    std::string line;
    if (!std::getline(in, line)) fail_at_line(source, 1, "empty trace file");

    json manifest;
    try {
        manifest = json::parse(line);
    } catch (const json::exception& e) {
        fail_at_line(source, 1, std::string("malformed manifest: ") + e.what());
    }
    if (!manifest.is_object()) fail_at_line(source, 1, "malformed manifest: not an object");
    if (!manifest.contains("feature_names")) fail_at_line(source, 1, "manifest missing feature_names");

    Trace trace;
    try {
        trace.feature_names = manifest.at("feature_names").get<std::vector<std::string>>();
        trace.machine_id = manifest.value("machine_id", std::string{});
        trace.created_at = manifest.value("created_at", std::string{});
        trace.sample_interval = manifest.value("sample_interval", 0.5);
        if (manifest.contains("ransomware_start"))
            trace.ransomware_start = manifest.at("ransomware_start").get<Index>();
        if (manifest.contains("app_events")) {
            for (const auto& ev : manifest.at("app_events")) {
                trace.app_events.push_back({ev.at(0).get<Index>(), ev.at(1).get<std::string>()});
            }
        }
        if (manifest.contains("gaps")) trace.gaps = manifest.at("gaps").get<std::vector<Index>>();
    } catch (const json::exception& e) {
        fail_at_line(source, 1, std::string("malformed manifest: ") + e.what());
    }

    const Index n = static_cast<Index>(trace.feature_names.size());
    std::vector<RowVector> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json row;
        try {
            row = json::parse(line);
        } catch (const json::exception& e) {
            fail_at_line(source, line_no, std::string("malformed row: ") + e.what());
        }
        if (!row.is_array()) fail_at_line(source, line_no, "row is not an array");
        if (static_cast<Index>(row.size()) != n)
            fail_at_line(source, line_no,
                         "row arity " + std::to_string(row.size()) + " != " + std::to_string(n));
        RowVector values(n);
        for (Index j = 0; j < n; ++j) {
            const auto& cell = row[static_cast<std::size_t>(j)];
            if (!cell.is_number()) fail_at_line(source, line_no, "row value is not a number");
            const double v = cell.get<double>();
            if (!std::isfinite(v)) fail_at_line(source, line_no, "non-finite value");
            if (v < 0.0) fail_at_line(source, line_no, "negative counter value");
            values(j) = v;
        }
        rows.push_back(std::move(values));
    }

    trace.samples.resize(static_cast<Index>(rows.size()), n);
    for (std::size_t k = 0; k < rows.size(); ++k) trace.samples.row(static_cast<Index>(k)) = rows[k];
    trace.validate();
    return trace;
}

void export_trace_csv(const Trace& trace, const std::filesystem::path& destination) {
    trace.validate();
    std::ofstream out(destination);
    if (!out) throw std::runtime_error("cannot open for writing: " + destination.string());
    for (std::size_t j = 0; j < trace.feature_names.size(); ++j) {
        if (j > 0) out << ',';
        out << detail::csv_field(trace.feature_names[j]);
    }
    out << '\n';
    for (Index k = 0; k < trace.samples.rows(); ++k) {
        for (Index j = 0; j < trace.samples.cols(); ++j) {
            if (j > 0) out << ',';
            out << detail::format_double(trace.samples(k, j));
        }
        out << '\n';
    }
}

}  // namespace rategate
