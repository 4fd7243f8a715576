#include "rategate/collector.hpp"

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "rategate/detail/text.hpp"

namespace rategate {

LinearFakeSource::LinearFakeSource(std::vector<std::string> names, Vector slopes,
                                   std::optional<int> fail_at)
    : names_(std::move(names)), slopes_(std::move(slopes)), fail_at_(fail_at) {
    if (static_cast<Index>(names_.size()) != slopes_.size())
        throw std::invalid_argument("fake source names and slopes disagree");
}

std::optional<Vector> LinearFakeSource::read_counters() {
    const int read = reads_++;
    if (fail_at_ && read == *fail_at_) throw std::runtime_error("injected fake-source read failure");
    return Vector(static_cast<double>(read) * slopes_);
}

ReplaySource::ReplaySource(Trace trace) : trace_(std::move(trace)) { trace_.validate(); }

std::optional<Vector> ReplaySource::read_counters() {
    if (cursor_ >= trace_.sample_count()) return std::nullopt;
    return Vector(trace_.samples.row(cursor_++).transpose());
}

namespace {

bool readable(const char* path) { return std::ifstream(path).good(); }

void append_stat_counters(std::vector<double>& values) {
    std::ifstream in("/proc/stat");
    std::string tag;
    double user = 0, nice = 0, system = 0, idle = 0, iowait = 0;
    in >> tag >> user >> nice >> system >> idle >> iowait;
    if (!in || tag != "cpu") throw std::runtime_error("cannot parse /proc/stat");
    values.push_back(user + nice);
    values.push_back(system);
    values.push_back(iowait);
}

void append_meminfo_counters(std::vector<double>& values) {
    std::ifstream in("/proc/meminfo");
    std::string line;
    double total = -1, free = -1;
    while (std::getline(in, line)) {
        std::istringstream fields(line);
        std::string key;
        double kb = 0;
        fields >> key >> kb;
        if (key == "MemTotal:") total = kb;
        if (key == "MemFree:") free = kb;
    }
    if (total < 0 || free < 0) throw std::runtime_error("cannot parse /proc/meminfo");
    values.push_back(total - free);
}

void append_diskstats_counters(std::vector<double>& values) {
    std::ifstream in("/proc/diskstats");
    std::string line;
    double reads = 0, read_sectors = 0, writes = 0, write_sectors = 0;
    bool any = false;
    while (std::getline(in, line)) {
        std::istringstream fields(line);
        long major = 0, minor = 0;
        std::string device;
        double f4 = 0, f5 = 0, f6 = 0, f7 = 0, f8 = 0, f9 = 0, f10 = 0;
        if (!(fields >> major >> minor >> device >> f4 >> f5 >> f6 >> f7 >> f8 >> f9 >> f10)) continue;
        reads += f4;
        read_sectors += f6;
        writes += f8;
        write_sectors += f10;
        any = true;
    }
    if (!any) throw std::runtime_error("cannot parse /proc/diskstats");
    values.push_back(reads);
    values.push_back(read_sectors);
    values.push_back(writes);
    values.push_back(write_sectors);
}

void append_netdev_counters(std::vector<double>& values) {
    std::ifstream in("/proc/net/dev");
    std::string line;
    double rx_bytes = 0, rx_packets = 0, tx_bytes = 0, tx_packets = 0;
    bool any = false;
    while (std::getline(in, line)) {
        const auto colon = line.find(':');
        if (colon == std::string::npos) continue;
        std::istringstream fields(line.substr(colon + 1));
        double rb = 0, rp = 0, skip = 0, tb = 0, tp = 0;
        if (!(fields >> rb >> rp >> skip >> skip >> skip >> skip >> skip >> skip >> tb >> tp)) continue;
        rx_bytes += rb;
        rx_packets += rp;
        tx_bytes += tb;
        tx_packets += tp;
        any = true;
    }
    if (!any) throw std::runtime_error("cannot parse /proc/net/dev");
    values.push_back(rx_bytes);
    values.push_back(rx_packets);
    values.push_back(tx_bytes);
    values.push_back(tx_packets);
}

}  // namespace

ProcfsSource::ProcfsSource() {
    has_stat_ = readable("/proc/stat");
    has_meminfo_ = readable("/proc/meminfo");
    has_diskstats_ = readable("/proc/diskstats");
    has_netdev_ = readable("/proc/net/dev");
    if (has_stat_) names_.insert(names_.end(), {"cpu.user", "cpu.system", "cpu.iowait"});
    if (has_meminfo_) names_.push_back("mem.used.kb");
    if (has_diskstats_)
        names_.insert(names_.end(),
                      {"disk.read.count", "disk.read.sectors", "disk.write.count", "disk.write.sectors"});
    if (has_netdev_)
        names_.insert(names_.end(), {"net.rx.bytes", "net.rx.packets", "net.tx.bytes", "net.tx.packets"});
    if (names_.size() < 2) throw std::runtime_error("platform counters unavailable under /proc");

    char host[256] = {};
    if (gethostname(host, sizeof(host) - 1) == 0 && host[0] != '\0')
        host_ = host;
    else
        host_ = "local";
}

std::optional<Vector> ProcfsSource::read_counters() {
    std::vector<double> values;
    values.reserve(names_.size());
    if (has_stat_) append_stat_counters(values);
    if (has_meminfo_) append_meminfo_counters(values);
    if (has_diskstats_) append_diskstats_counters(values);
    if (has_netdev_) append_netdev_counters(values);
    Vector snapshot(static_cast<Index>(values.size()));
    for (std::size_t j = 0; j < values.size(); ++j) snapshot(static_cast<Index>(j)) = values[j];
    return snapshot;
}

Trace collect(MetricsSource& source, double interval_s, double duration_s,
              const CollectOptions& options) {
    if (!(interval_s > 0.0)) throw std::invalid_argument("collect interval must be positive");
    if (!(duration_s >= 0.0)) throw std::invalid_argument("collect duration must be >= 0");
    const auto& names = source.feature_names();
    if (names.size() < 2) throw std::invalid_argument("source must expose at least 2 features");

    const int attempts = static_cast<int>(std::floor(duration_s / interval_s + 1e-9)) + 1;
    std::vector<Vector> rows;
    std::vector<Index> gaps;
    const auto started = std::chrono::steady_clock::now();

    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (options.pace) {
            const auto deadline =
                started + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                              std::chrono::duration<double>(attempt * interval_s));
            const auto late_by = std::chrono::steady_clock::now() - deadline;
            if (late_by > std::chrono::duration<double>(interval_s)) {
                gaps.push_back(static_cast<Index>(rows.size()));  // missed deadline, never back-filled
                continue;
            }
            std::this_thread::sleep_until(deadline);
        }
        std::optional<Vector> snapshot;
        try {
            snapshot = source.read_counters();
        } catch (const std::exception&) {
            gaps.push_back(static_cast<Index>(rows.size()));
            continue;
        }
        if (!snapshot) break;
        if (snapshot->size() != static_cast<Index>(names.size()))
            throw std::runtime_error("source snapshot arity changed mid-collection");
        rows.push_back(std::move(*snapshot));
    }

    if (rows.size() < 2) throw std::runtime_error("collected fewer than 2 samples");

    Trace trace;
    trace.machine_id = source.machine_id();
    const std::int64_t epoch =
        options.created_at_epoch
            ? *options.created_at_epoch
            : static_cast<std::int64_t>(
                  std::chrono::duration_cast<std::chrono::seconds>(
                      std::chrono::system_clock::now().time_since_epoch())
                      .count());
    trace.created_at = detail::iso8601_utc(epoch);
    trace.sample_interval = interval_s;
    trace.feature_names = names;
    trace.samples.resize(static_cast<Index>(rows.size()), static_cast<Index>(names.size()));
    for (std::size_t k = 0; k < rows.size(); ++k)
        trace.samples.row(static_cast<Index>(k)) = rows[k].transpose();
    trace.gaps = std::move(gaps);
    trace.validate();
    return trace;
}

}  // namespace rategate
