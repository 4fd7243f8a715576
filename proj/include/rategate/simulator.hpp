#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rategate/trace.hpp"

namespace rategate {

// A synthetic process: per-feature counter rates (increments per second at
// full time share) and how many samples it stays active (open-ended if unset).
struct ProcessProfile {
    std::string name;
    Vector rates;
    std::optional<Index> duration_samples;
};

enum class EventKind { idle_baseline, application, ransomware };

struct SimEvent {
    Index start = 0;
    ProcessProfile profile;
    EventKind kind = EventKind::application;
};

struct EventSchedule {
    std::vector<SimEvent> events;
    Index total_samples = 3600;
    Index buffer_samples = 600;  // samples reserved at the trace tail

    void validate() const;
};

struct SimConfig {
    Index n_features = 16;
    double sample_interval = 0.5;
    double noise_std = 0.0;  // relative Gaussian noise on per-sample increments
    std::uint64_t seed = 0;
    Index total_samples = 3600;  // default trace length used by schedules

    void validate() const;
};

enum class ScheduleKind { h0, h1a, h1b };

std::string schedule_kind_name(ScheduleKind kind);

// Named counter schema: 16 base names, extended or truncated to n.
std::vector<std::string> default_feature_names(Index n);

// Built-in workload profiles, sized to n features.
ProcessProfile idle_profile(Index n);
ProcessProfile firefox_install_profile(Index n);
ProcessProfile gcc_install_profile(Index n);
ProcessProfile tar_gzip_profile(Index n);
ProcessProfile ransomware_profile(Index n);

// Cumulative counters under equal time sharing: each sample-to-sample
// increment is interval * mean(active process rates) * (1 + noise), with the
// noise term clipped at -1 so counters never decrease.
Trace simulate_trace(const SimConfig& config, const EventSchedule& schedule);

// Predicted rate ratio after a process with rates (r_a, r_b) joins n equally
// time-shared processes whose aggregate per-feature rates were A and B:
// (n*A + r_a) / (n*B + r_b).
double expected_ratio_jump(Index n, double A, double B, double r_a, double r_b);

// Randomized experiment schedule:
//   h0  — idle period, then the two installs and the compression in parallel;
//   h1a — h0 plus a parallel ransomware event;
//   h1b — idle, installs and compression back to back, then ransomware.
EventSchedule make_schedule(ScheduleKind kind, const SimConfig& config, std::uint64_t seed);

// experiments * instances traces; instances of one experiment share its
// schedule and differ only in noise.
std::vector<Trace> generate_corpus(ScheduleKind kind, int experiments, int instances,
                                   const SimConfig& config, std::uint64_t seed);

// Writes one trace file per trace plus a manifest.json listing them.
void write_corpus(std::span<const Trace> traces, ScheduleKind kind, std::uint64_t seed,
                  const std::filesystem::path& directory);

}  // namespace rategate
