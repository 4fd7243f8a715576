#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rategate/trace.hpp"

namespace rategate {

// A provider of resource-counter snapshots. read_counters returns the next
// snapshot, nullopt once the source is exhausted, and throws on a read
// failure (the collector records a gap and keeps going).
class MetricsSource {
  public:
    virtual ~MetricsSource() = default;
    virtual const std::vector<std::string>& feature_names() const = 0;
    virtual std::optional<Vector> read_counters() = 0;
    virtual std::string machine_id() const { return "local"; }
};

// Deterministic test source: read k returns k * slopes. An optional failing
// read ordinal exercises the gap-recording path.
class LinearFakeSource : public MetricsSource {
  public:
    LinearFakeSource(std::vector<std::string> names, Vector slopes,
                     std::optional<int> fail_at = std::nullopt);

    const std::vector<std::string>& feature_names() const override { return names_; }
    std::optional<Vector> read_counters() override;
    std::string machine_id() const override { return "fake"; }

  private:
    std::vector<std::string> names_;
    Vector slopes_;
    std::optional<int> fail_at_;
    int reads_ = 0;
};

// Replays a stored trace row by row, then reports exhaustion.
class ReplaySource : public MetricsSource {
  public:
    explicit ReplaySource(Trace trace);

    const std::vector<std::string>& feature_names() const override { return trace_.feature_names; }
    std::optional<Vector> read_counters() override;
    std::string machine_id() const override { return trace_.machine_id; }

  private:
    Trace trace_;
    Index cursor_ = 0;
};

// Best-effort live counters from /proc (cpu, memory, disk, network). The
// available feature set depends on the platform; construction fails when
// fewer than two counter groups can be read.
class ProcfsSource : public MetricsSource {
  public:
    ProcfsSource();

    const std::vector<std::string>& feature_names() const override { return names_; }
    std::optional<Vector> read_counters() override;
    std::string machine_id() const override { return host_; }

  private:
    std::vector<std::string> names_;
    std::string host_;
    bool has_stat_ = false;
    bool has_meminfo_ = false;
    bool has_diskstats_ = false;
    bool has_netdev_ = false;
};

struct CollectOptions {
    bool pace = false;  // sleep to the sampling deadline between reads
    std::optional<std::int64_t> created_at_epoch;  // fixed timestamp for hermetic tests
};

// Samples the source every interval_s seconds for duration_s seconds and
// returns the collected trace. Failed reads become recorded gaps; rows are
// never back-filled.
Trace collect(MetricsSource& source, double interval_s, double duration_s,
              const CollectOptions& options = {});

}  // namespace rategate
