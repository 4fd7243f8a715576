#include "rategate/simulator.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "rategate/detail/parallel.hpp"
#include "rategate/detail/rng.hpp"
#include "rategate/detail/text.hpp"

namespace rategate {

using nlohmann::json;

namespace {

// Simulated corpora get deterministic timestamps: a fixed base instant plus
// one second per trace ordinal.
constexpr std::int64_t kBaseEpoch = 1704067200;  // 2024-01-01T00:00:00Z

constexpr Index kBaseFeatures = 16;

const char* const kBaseNames[kBaseFeatures] = {
    "cpu.user",         "cpu.system",      "cpu.iowait",     "mem.used",
    "mem.cached",       "mem.pagefaults",  "disk.write.count", "disk.write.bytes",
    "disk.read.count",  "disk.read.bytes", "net.tx.packets", "net.tx.bytes",
    "net.rx.packets",   "net.rx.bytes",    "proc.forks",     "ctx.switches"};

// Per-feature rates in counter increments per second at full time share,
// aligned with kBaseNames. Magnitudes are synthetic but shaped so that no
// single counter ratio separates the ransomware from every benign workload:
// the installers are download-dominated, the compression job is an offline
// read/write-heavy decoy, the compiler is cpu- and pagefault-hungry, and the
// ransomware drives reads and writes together. Only the joint signature
// across several ratios is discriminative.
ProcessProfile sized_profile(std::string name, const double (&base)[kBaseFeatures], double extra,
                             Index n) {
    ProcessProfile profile;
    profile.name = std::move(name);
    profile.rates.resize(n);
    for (Index j = 0; j < n; ++j) {
        if (j < kBaseFeatures)
            profile.rates(j) = base[j];
        else
            profile.rates(j) = extra * (1.0 + 0.25 * static_cast<double>((j - kBaseFeatures) % 8));
    }
    return profile;
}

Index seconds_to_samples(double seconds, double interval) {
    return static_cast<Index>(std::llround(seconds / interval));
}

}  // namespace

void EventSchedule::validate() const {
    if (total_samples < 2) throw std::invalid_argument("schedule needs at least 2 samples");
    if (buffer_samples < 0 || buffer_samples >= total_samples)
        throw std::invalid_argument("schedule buffer must fit inside the trace");
    if (events.empty()) throw std::invalid_argument("schedule has no events");
    int ransomware_events = 0;
    for (const auto& event : events) {
        if (event.start < 0 || event.start >= total_samples - buffer_samples)
            throw std::invalid_argument("trace duration too short: event start falls inside the buffer");
        if (event.profile.duration_samples && *event.profile.duration_samples < 1)
            throw std::invalid_argument("event duration must be >= 1 sample");
        if (event.kind == EventKind::ransomware) ++ransomware_events;
    }
    if (ransomware_events > 1) throw std::invalid_argument("schedule allows at most one ransomware event");
}

void SimConfig::validate() const {
    if (n_features < 2) throw std::invalid_argument("simulation needs at least 2 features");
    if (!(sample_interval > 0.0)) throw std::invalid_argument("sample_interval must be positive");
    if (!(noise_std >= 0.0)) throw std::invalid_argument("noise_std must be >= 0");
    if (total_samples < 2) throw std::invalid_argument("simulation needs at least 2 samples");
}

std::string schedule_kind_name(ScheduleKind kind) {
    switch (kind) {
        case ScheduleKind::h0: return "h0";
        case ScheduleKind::h1a: return "h1a";
        case ScheduleKind::h1b: return "h1b";
    }
    throw std::invalid_argument("unknown schedule kind");
}

std::vector<std::string> default_feature_names(Index n) {
    if (n < 2) throw std::invalid_argument("schema needs at least 2 features");
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(n));
    for (Index j = 0; j < n; ++j) {
        if (j < kBaseFeatures)
            names.emplace_back(kBaseNames[j]);
        else
            names.push_back("idx." + std::to_string(j));
    }
    return names;
}

ProcessProfile idle_profile(Index n) {
    static const double rates[kBaseFeatures] = {8,    6,    1, 50,   20, 5,    4,   2000,
                                                3,    1500, 5, 4000, 5,  4000, 0.5, 300};
    return sized_profile("idle", rates, 2.0, n);
}

ProcessProfile firefox_install_profile(Index n) {
    static const double rates[kBaseFeatures] = {60,  40,    25,  400,   300,  80,     90, 500000,
                                                20,  40000, 300, 60000, 2200, 2600000, 3,  2500};
    return sized_profile("firefox-install", rates, 30.0, n);
}

ProcessProfile gcc_install_profile(Index n) {
    static const double rates[kBaseFeatures] = {800, 80,    20,  500,   240,  400,     110, 420000,
                                                35,  70000, 250, 50000, 1800, 2100000, 8,   3200};
    return sized_profile("gcc-install", rates, 40.0, n);
}

ProcessProfile tar_gzip_profile(Index n) {
    static const double rates[kBaseFeatures] = {260, 60,      70, 150,  350, 55,   360, 4500000,
                                                260, 3600000, 1,  9000, 6,   4500, 0.3, 4000};
    return sized_profile("tar-gzip", rates, 25.0, n);
}

ProcessProfile ransomware_profile(Index n) {
    static const double rates[kBaseFeatures] = {700, 180,     90, 260,  120, 200,  900, 9000000,
                                                850, 8800000, 10, 9000, 10,  9000, 1,   5000};
    return sized_profile("ransomware", rates, 120.0, n);
}

Trace simulate_trace(const SimConfig& config, const EventSchedule& schedule) {
    config.validate();
    schedule.validate();
    const Index n = config.n_features;
    for (const auto& event : schedule.events) {
        if (event.profile.rates.size() != n)
            throw std::invalid_argument("event profile '" + event.profile.name +
                                        "' does not match the feature count");
        if (!event.profile.rates.allFinite() || (event.profile.rates.array() < 0.0).any())
            throw std::invalid_argument("event profile '" + event.profile.name +
                                        "' has invalid rates");
    }

    const Index total = schedule.total_samples;
    Matrix samples(total, n);
    samples.row(0).setZero();
    detail::Rng rng(config.seed);

    for (Index k = 0; k + 1 < total; ++k) {
        Vector rate_sum = Vector::Zero(n);
        Index active = 0;
        for (const auto& event : schedule.events) {
            if (event.start > k) continue;
            if (event.profile.duration_samples && k >= event.start + *event.profile.duration_samples)
                continue;
            rate_sum += event.profile.rates;
            ++active;
        }
        if (active == 0)
            throw std::invalid_argument("no active process at sample " + std::to_string(k) +
                                        "; schedules need an open-ended idle baseline");

        RowVector increment =
            (config.sample_interval / static_cast<double>(active)) * rate_sum.transpose();
        if (config.noise_std > 0.0) {
            for (Index j = 0; j < n; ++j)
                increment(j) *= 1.0 + std::max(-1.0, config.noise_std * rng.normal());
        }
        samples.row(k + 1) = samples.row(k) + increment;
    }

    Trace trace;
    trace.machine_id = "sim";
    trace.created_at = detail::iso8601_utc(kBaseEpoch);
    trace.sample_interval = config.sample_interval;
    trace.feature_names = default_feature_names(n);
    trace.samples = std::move(samples);
    for (const auto& event : schedule.events) {
        if (event.kind == EventKind::ransomware)
            trace.ransomware_start = event.start;
        else if (event.kind == EventKind::application)
            trace.app_events.push_back({event.start, event.profile.name});
    }
    trace.validate();
    return trace;
}

double expected_ratio_jump(Index n, double A, double B, double r_a, double r_b) {
    if (n < 0) throw std::invalid_argument("process count must be >= 0");
    const double numerator = static_cast<double>(n) * A + r_a;
    const double denominator = static_cast<double>(n) * B + r_b;
    if (!(denominator > 0.0)) throw std::invalid_argument("ratio jump denominator must be positive");
    return numerator / denominator;
}

EventSchedule make_schedule(ScheduleKind kind, const SimConfig& config, std::uint64_t seed) {
    config.validate();
    const double interval = config.sample_interval;
    const Index n = config.n_features;

    EventSchedule schedule;
    schedule.total_samples = config.total_samples;
    schedule.buffer_samples = seconds_to_samples(300.0, interval);  // fixed 5-minute tail

    detail::Rng rng(seed);
    auto place = [&](ProcessProfile profile, double start_s, double duration_s, EventKind kind_tag) {
        profile.duration_samples = std::max<Index>(1, seconds_to_samples(duration_s, interval));
        SimEvent event;
        event.start = seconds_to_samples(start_s, interval);
        event.profile = std::move(profile);
        event.kind = kind_tag;
        schedule.events.push_back(std::move(event));
    };

    schedule.events.push_back({0, idle_profile(n), EventKind::idle_baseline});
    const double idle_s = rng.uniform(30.0, 120.0);

    if (kind == ScheduleKind::h0 || kind == ScheduleKind::h1a) {
        place(firefox_install_profile(n), idle_s + rng.uniform(0.0, 60.0), rng.uniform(45.0, 90.0),
              EventKind::application);
        place(gcc_install_profile(n), idle_s + rng.uniform(0.0, 60.0), rng.uniform(45.0, 90.0),
              EventKind::application);
        place(tar_gzip_profile(n), idle_s + rng.uniform(0.0, 60.0), rng.uniform(40.0, 80.0),
              EventKind::application);
        if (kind == ScheduleKind::h1a) {
            // The infection starts only after every application has finished
            // (apps end by idle+150s), so the post-onset state is a clean
            // ransomware-plus-idle mixture rather than an arbitrary overlap.
            place(ransomware_profile(n), idle_s + rng.uniform(180.0, 360.0), rng.uniform(240.0, 480.0),
                  EventKind::ransomware);
        }
    } else {
        double cursor = idle_s;
        const double firefox_d = rng.uniform(45.0, 90.0);
        place(firefox_install_profile(n), cursor, firefox_d, EventKind::application);
        cursor += firefox_d + rng.uniform(10.0, 60.0);
        const double gcc_d = rng.uniform(45.0, 90.0);
        place(gcc_install_profile(n), cursor, gcc_d, EventKind::application);
        cursor += gcc_d + rng.uniform(10.0, 60.0);
        const double tar_d = rng.uniform(40.0, 80.0);
        place(tar_gzip_profile(n), cursor, tar_d, EventKind::application);
        cursor += tar_d + rng.uniform(10.0, 60.0);
        place(ransomware_profile(n), cursor, rng.uniform(240.0, 480.0), EventKind::ransomware);
    }

    schedule.validate();
    return schedule;
}

std::vector<Trace> generate_corpus(ScheduleKind kind, int experiments, int instances,
                                   const SimConfig& config, std::uint64_t seed) {
    if (experiments < 1 || instances < 1)
        throw std::invalid_argument("corpus needs at least one experiment and one instance");
    config.validate();

    std::vector<EventSchedule> schedules;
    schedules.reserve(static_cast<std::size_t>(experiments));
    for (int e = 0; e < experiments; ++e)
        schedules.push_back(make_schedule(kind, config, detail::derive_seed(seed, static_cast<std::uint64_t>(e), 1)));

    const std::size_t count = static_cast<std::size_t>(experiments) * static_cast<std::size_t>(instances);
    std::vector<Trace> traces(count);
    detail::parallel_for(count, [&](std::size_t ordinal) {
        const std::size_t e = ordinal / static_cast<std::size_t>(instances);
        const std::size_t i = ordinal % static_cast<std::size_t>(instances);
        SimConfig trace_config = config;
        trace_config.seed = detail::derive_seed(seed, static_cast<std::uint64_t>(ordinal), 2);
        Trace trace = simulate_trace(trace_config, schedules[e]);
        char id[64];
        std::snprintf(id, sizeof(id), "sim-%s-e%03zu-i%02zu", schedule_kind_name(kind).c_str(), e, i);
        trace.machine_id = id;
        trace.created_at = detail::iso8601_utc(kBaseEpoch + static_cast<std::int64_t>(ordinal));
        traces[ordinal] = std::move(trace);
    });
    return traces;
}

void write_corpus(std::span<const Trace> traces, ScheduleKind kind, std::uint64_t seed,
                  const std::filesystem::path& directory) {
    std::filesystem::create_directories(directory);
    json manifest;
    manifest["kind"] = schedule_kind_name(kind);
    manifest["seed"] = seed;
    json listing = json::array();
    for (const auto& trace : traces) {
        const std::string filename = trace.machine_id + ".trace";
        write_trace(trace, directory / filename);
        json entry;
        entry["file"] = filename;
        entry["machine_id"] = trace.machine_id;
        if (trace.ransomware_start) entry["ransomware_start"] = *trace.ransomware_start;
        listing.push_back(entry);
    }
    manifest["traces"] = listing;
    std::ofstream out(directory / "manifest.json");
    if (!out) throw std::runtime_error("cannot write corpus manifest in " + directory.string());
    out << manifest.dump(2) << '\n';
}

}  // namespace rategate
