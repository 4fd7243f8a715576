#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "rategate/detail/rng.hpp"
#include "rategate/trace.hpp"

using namespace rategate;

namespace {

Trace small_trace() {
    Trace trace;
    trace.machine_id = "unit-3x2";
    trace.created_at = "2024-01-01T00:00:00Z";
    trace.sample_interval = 0.5;
    trace.feature_names = {"a", "b"};
    trace.samples.resize(3, 2);
    trace.samples << 0, 0, 4, 1, 6, 3;
    return trace;
}

std::filesystem::path temp_file(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "rategate-trace-tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

Trace random_trace(std::uint64_t seed) {
    detail::Rng rng(seed);
    Trace trace;
    trace.machine_id = "rand-" + std::to_string(seed);
    trace.created_at = "2024-01-01T00:00:00Z";
    trace.sample_interval = 0.25 + rng.uniform01();
    const Index m = 2 + static_cast<Index>(rng.below(20));
    const Index n = 2 + static_cast<Index>(rng.below(6));
    for (Index j = 0; j < n; ++j) trace.feature_names.push_back("f" + std::to_string(j));
    trace.samples.resize(m, n);
    for (Index k = 0; k < m; ++k)
        for (Index j = 0; j < n; ++j) trace.samples(k, j) = rng.uniform(0.0, 1e6);
    if (rng.uniform01() < 0.5) trace.ransomware_start = static_cast<Index>(rng.below(m));
    if (rng.uniform01() < 0.5)
        trace.app_events.push_back({static_cast<Index>(rng.below(m)), "app"});
    if (rng.uniform01() < 0.3) trace.gaps.push_back(static_cast<Index>(rng.below(m)));
    return trace;
}

}  // namespace

TEST_CASE("label_trace splits the trace at the ransomware start") {
    Trace trace = small_trace();
    trace.samples.resize(5, 2);
    trace.samples << 0, 0, 1, 1, 2, 2, 3, 3, 4, 4;
    trace.ransomware_start = 2;
    CHECK(label_trace(trace) == EpochLabels{0, 0, 1, 1, 1});
}

TEST_CASE("label_trace without a start is all benign") {
    Trace trace = small_trace();
    CHECK(label_trace(trace) == EpochLabels{0, 0, 0});
}

TEST_CASE("label_trace with start 0 is all infected") {
    Trace trace = small_trace();
    trace.samples.resize(4, 2);
    trace.samples << 0, 0, 1, 1, 2, 2, 3, 3;
    trace.ransomware_start = 0;
    CHECK(label_trace(trace) == EpochLabels{1, 1, 1, 1});
}

TEST_CASE("labels are non-decreasing and sized like the trace") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Trace trace = random_trace(seed);
        const auto labels = label_trace(trace);
        REQUIRE(labels.size() == static_cast<std::size_t>(trace.sample_count()));
        for (std::size_t k = 1; k < labels.size(); ++k) CHECK(labels[k] >= labels[k - 1]);
    }
}

TEST_CASE("trace validation rejects malformed traces") {
    Trace trace = small_trace();
    trace.samples.resize(1, 2);
    trace.samples << 0, 0;
    CHECK_THROWS_AS(trace.validate(), std::invalid_argument);

    trace = small_trace();
    trace.feature_names = {"a"};
    CHECK_THROWS_AS(trace.validate(), std::invalid_argument);

    trace = small_trace();
    trace.samples(1, 1) = -2.0;
    CHECK_THROWS_AS(trace.validate(), std::invalid_argument);

    trace = small_trace();
    trace.ransomware_start = 3;
    CHECK_THROWS_AS(trace.validate(), std::invalid_argument);

    trace = small_trace();
    trace.sample_interval = 0.0;
    CHECK_THROWS_AS(trace.validate(), std::invalid_argument);
}

TEST_CASE("write/read round trip is exact") {
    const Trace trace = small_trace();
    const auto path = temp_file("roundtrip.trace");
    write_trace(trace, path);
    CHECK(read_trace(path) == trace);
}

TEST_CASE("round trip holds for randomized traces") {
    for (std::uint64_t seed = 100; seed < 150; ++seed) {
        const Trace trace = random_trace(seed);
        const auto path = temp_file("roundtrip-rand.trace");
        write_trace(trace, path);
        const Trace loaded = read_trace(path);
        CHECK(loaded == trace);
    }
}

TEST_CASE("row arity errors carry the offending line number") {
    const auto path = temp_file("bad-arity.trace");
    std::ofstream out(path);
    out << R"({"machine_id":"x","created_at":"t","sample_interval":0.5,"feature_names":["a","b"]})"
        << "\n[1,2]\n[1,2,3]\n";
    out.close();
    CHECK_THROWS_WITH_AS(read_trace(path), doctest::Contains(":3:"), std::runtime_error);
}

TEST_CASE("manifest without feature_names is rejected") {
    const auto path = temp_file("bad-manifest.trace");
    std::ofstream out(path);
    out << R"({"machine_id":"x"})" << "\n[1,2]\n[3,4]\n";
    out.close();
    CHECK_THROWS_WITH_AS(read_trace(path), doctest::Contains("feature_names"), std::runtime_error);
}

TEST_CASE("non-finite and negative rows are rejected with line numbers") {
    const auto path = temp_file("bad-value.trace");
    std::ofstream out(path);
    out << R"({"feature_names":["a","b"]})" << "\n[1,2]\n[1,-2]\n";
    out.close();
    CHECK_THROWS_WITH_AS(read_trace(path), doctest::Contains(":3:"), std::runtime_error);
}

TEST_CASE("csv export writes a header and one row per sample") {
    const Trace trace = small_trace();
    const auto path = temp_file("export.csv");
    export_trace_csv(trace, path);
    std::ifstream in(path);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "a,b");
    int rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 3);
}
