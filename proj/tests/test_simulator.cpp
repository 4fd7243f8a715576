#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>

#include "rategate/simulator.hpp"
#include "rategate/transform.hpp"

using namespace rategate;

namespace {

ProcessProfile flat_profile(const std::string& name, std::initializer_list<double> rates,
                            std::optional<Index> duration = std::nullopt) {
    ProcessProfile profile;
    profile.name = name;
    profile.rates.resize(static_cast<Index>(rates.size()));
    Index j = 0;
    for (double r : rates) profile.rates(j++) = r;
    profile.duration_samples = duration;
    return profile;
}

SimConfig small_config(Index n, Index total) {
    SimConfig config;
    config.n_features = n;
    config.sample_interval = 0.5;
    config.noise_std = 0.0;
    config.seed = 0;
    config.total_samples = total;
    return config;
}

EventSchedule single_event(ProcessProfile profile, Index total) {
    EventSchedule schedule;
    schedule.total_samples = total;
    schedule.buffer_samples = 0;
    schedule.events.push_back({0, std::move(profile), EventKind::idle_baseline});
    return schedule;
}

}  // namespace

TEST_CASE("a lone process accumulates interval-scaled rates") {
    const auto schedule = single_event(flat_profile("only", {2.0, 4.0}), 3);
    const auto trace = simulate_trace(small_config(2, 3), schedule);

    Matrix expected(3, 2);
    expected << 0, 0, 1, 2, 2, 4;
    CHECK(trace.samples == expected);
    CHECK(trace.sample_interval == 0.5);
    CHECK(trace.machine_id == "sim");
    CHECK(trace.created_at == "2024-01-01T00:00:00Z");
    CHECK(!trace.ransomware_start.has_value());
}

TEST_CASE("two equal processes share time like one such process alone") {
    EventSchedule pair;
    pair.total_samples = 50;
    pair.buffer_samples = 0;
    pair.events.push_back({0, flat_profile("a", {3.0, 5.0, 7.0}), EventKind::idle_baseline});
    pair.events.push_back({0, flat_profile("b", {3.0, 5.0, 7.0}), EventKind::application});

    const auto shared = simulate_trace(small_config(3, 50), pair);
    const auto alone =
        simulate_trace(small_config(3, 50), single_event(flat_profile("a", {3.0, 5.0, 7.0}), 50));
    CHECK(shared.samples == alone.samples);
}

TEST_CASE("expected_ratio_jump reproduces the worked example") {
    CHECK(expected_ratio_jump(1, 2.0, 2.0, 4.0, 2.0) == 1.5);
}

TEST_CASE("a process matching the aggregate rates leaves the ratio unchanged") {
    CHECK(expected_ratio_jump(3, 0.7, 1.4, 0.7, 1.4) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("a newcomer is diluted away as the process count grows") {
    CHECK(expected_ratio_jump(1000000, 2.0, 4.0, 100.0, 1.0) == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("expected_ratio_jump validates its arguments") {
    CHECK_THROWS_AS(expected_ratio_jump(0, 5.0, 0.0, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(expected_ratio_jump(-1, 1.0, 1.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("the observed post-onset ratio matches the predicted jump on every pair") {
    // Four open-ended workloads run from the start; the ransomware joins at
    // sample 10 as the fifth. Zero noise makes the prediction exact to fp.
    const Index n = 16;
    EventSchedule schedule;
    schedule.total_samples = 20;
    schedule.buffer_samples = 0;
    auto open_ended = [](ProcessProfile p) {
        p.duration_samples = std::nullopt;
        return p;
    };
    schedule.events.push_back({0, open_ended(idle_profile(n)), EventKind::idle_baseline});
    schedule.events.push_back({0, open_ended(firefox_install_profile(n)), EventKind::application});
    schedule.events.push_back({0, open_ended(gcc_install_profile(n)), EventKind::application});
    schedule.events.push_back({0, open_ended(tar_gzip_profile(n)), EventKind::application});
    schedule.events.push_back({10, open_ended(ransomware_profile(n)), EventKind::ransomware});

    const auto config = small_config(n, 20);
    const auto trace = simulate_trace(config, schedule);
    const Matrix increments = first_difference(trace.samples);
    const Vector malware = ransomware_profile(n).rates;

    for (Index a = 0; a < n; ++a)
        for (Index b = 0; b < n; ++b) {
            const double pre_a = increments(9, a) / config.sample_interval;
            const double pre_b = increments(9, b) / config.sample_interval;
            const double post_ratio = increments(10, a) / increments(10, b);
            const double predicted = expected_ratio_jump(4, pre_a, pre_b, malware(a), malware(b));
            REQUIRE(post_ratio == doctest::Approx(predicted).epsilon(1e-9));
        }
}

TEST_CASE("noisy counters still never decrease") {
    auto config = small_config(4, 200);
    config.noise_std = 0.5;
    config.seed = 3;
    const auto trace =
        simulate_trace(config, single_event(flat_profile("p", {5.0, 1.0, 9.0, 2.0}), 200));
    const Matrix increments = first_difference(trace.samples);
    CHECK((increments.array() >= 0.0).all());
}

TEST_CASE("steady workload segments produce constant ratio rows") {
    const Index switch_at = 100;
    EventSchedule schedule;
    schedule.total_samples = 300;
    schedule.buffer_samples = 0;
    schedule.events.push_back({0, flat_profile("idle", {2.0, 3.0, 4.0}), EventKind::idle_baseline});
    schedule.events.push_back({switch_at, flat_profile("app", {9.0, 1.0, 5.0}), EventKind::application});
    const auto trace = simulate_trace(small_config(3, 300), schedule);

    const auto crisp = ratio_of_rates_transform(trace, {0.0, 1e-6});
    CHECK(crisp.ratios.row(0) == crisp.ratios.row(switch_at - 1));
    CHECK(crisp.ratios.row(switch_at) == crisp.ratios.row(crisp.ratios.rows() - 1));

    const auto smoothed = ratio_of_rates_transform(trace, {0.5, 1e-6});
    CHECK((smoothed.ratios.row(98) - smoothed.ratios.row(97)).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((smoothed.ratios.row(297) - smoothed.ratios.row(250)).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("simulation rejects schedules that leave the machine empty") {
    auto schedule = single_event(flat_profile("short", {1.0, 2.0}, 5), 20);
    CHECK_THROWS_WITH_AS(simulate_trace(small_config(2, 20), schedule),
                         doctest::Contains("no active process"), std::invalid_argument);
}

TEST_CASE("simulation rejects mismatched profiles") {
    const auto schedule = single_event(flat_profile("narrow", {1.0, 2.0}), 20);
    CHECK_THROWS_AS(simulate_trace(small_config(3, 20), schedule), std::invalid_argument);

    auto negative = single_event(flat_profile("neg", {1.0, -2.0}), 20);
    CHECK_THROWS_AS(simulate_trace(small_config(2, 20), negative), std::invalid_argument);
}

TEST_CASE("default_feature_names extends the base schema past 16 features") {
    const auto base = default_feature_names(16);
    REQUIRE(base.size() == 16);
    CHECK(base.front() == "cpu.user");
    CHECK(base.back() == "ctx.switches");

    const auto wide = default_feature_names(18);
    CHECK(wide[16] == "idx.16");
    CHECK(wide[17] == "idx.17");

    CHECK(default_feature_names(2) == std::vector<std::string>{"cpu.user", "cpu.system"});
    CHECK_THROWS_AS(default_feature_names(1), std::invalid_argument);
}

TEST_CASE("h0 schedules run the three applications with no ransomware") {
    SimConfig config;
    const auto schedule = make_schedule(ScheduleKind::h0, config, 5);
    REQUIRE(schedule.events.size() == 4);
    CHECK(schedule.events[0].kind == EventKind::idle_baseline);
    for (std::size_t i = 1; i < 4; ++i) CHECK(schedule.events[i].kind == EventKind::application);

    const auto trace = simulate_trace(config, schedule);
    CHECK(!trace.ransomware_start.has_value());
    CHECK(trace.app_events.size() == 3);
    CHECK(trace.sample_count() == 3600);
}

TEST_CASE("h1a schedules add a parallel ransomware event") {
    SimConfig config;
    const auto schedule = make_schedule(ScheduleKind::h1a, config, 5);
    REQUIRE(schedule.events.size() == 5);
    CHECK(schedule.events[4].kind == EventKind::ransomware);

    const auto trace = simulate_trace(config, schedule);
    REQUIRE(trace.ransomware_start.has_value());
    CHECK(*trace.ransomware_start == schedule.events[4].start);
    CHECK(trace.app_events.size() == 3);
}

TEST_CASE("h1b schedules run everything back to back") {
    SimConfig config;
    const auto schedule = make_schedule(ScheduleKind::h1b, config, 5);
    REQUIRE(schedule.events.size() == 5);
    for (std::size_t i = 2; i < 5; ++i) {
        const auto& prev = schedule.events[i - 1];
        const auto& next = schedule.events[i];
        REQUIRE(prev.profile.duration_samples.has_value());
        CHECK(prev.start + *prev.profile.duration_samples <= next.start);
    }
    CHECK(schedule.events[4].kind == EventKind::ransomware);
}

TEST_CASE("make_schedule is deterministic per seed") {
    SimConfig config;
    const auto a = make_schedule(ScheduleKind::h1a, config, 9);
    const auto b = make_schedule(ScheduleKind::h1a, config, 9);
    const auto c = make_schedule(ScheduleKind::h1a, config, 10);
    REQUIRE(a.events.size() == b.events.size());
    bool any_difference = false;
    for (std::size_t i = 0; i < a.events.size(); ++i) {
        CHECK(a.events[i].start == b.events[i].start);
        CHECK(a.events[i].profile.duration_samples == b.events[i].profile.duration_samples);
        if (a.events[i].start != c.events[i].start) any_difference = true;
    }
    CHECK(any_difference);
}

TEST_CASE("make_schedule rejects traces shorter than the tail buffer") {
    SimConfig config;
    config.total_samples = 650;  // 600-sample tail leaves no room for events
    CHECK_THROWS_WITH_AS(make_schedule(ScheduleKind::h0, config, 0),
                         doctest::Contains("duration too short"), std::invalid_argument);
}

TEST_CASE("a corpus shares schedules across instances and stays deterministic") {
    SimConfig config;
    config.total_samples = 2200;
    config.noise_std = 0.05;
    const auto traces = generate_corpus(ScheduleKind::h1a, 2, 2, config, 77);

    REQUIRE(traces.size() == 4);
    CHECK(traces[0].machine_id == "sim-h1a-e000-i00");
    CHECK(traces[1].machine_id == "sim-h1a-e000-i01");
    CHECK(traces[3].machine_id == "sim-h1a-e001-i01");

    // Instances of one experiment share the schedule but not the noise.
    CHECK(traces[0].ransomware_start == traces[1].ransomware_start);
    CHECK(traces[0].app_events == traces[1].app_events);
    CHECK(traces[0].samples != traces[1].samples);

    const auto again = generate_corpus(ScheduleKind::h1a, 2, 2, config, 77);
    for (std::size_t i = 0; i < traces.size(); ++i) CHECK(traces[i] == again[i]);

    CHECK_THROWS_AS(generate_corpus(ScheduleKind::h1a, 0, 2, config, 0), std::invalid_argument);
}

TEST_CASE("write_corpus lays out trace files plus a manifest") {
    SimConfig config;
    config.total_samples = 1800;
    config.noise_std = 0.02;
    const auto traces = generate_corpus(ScheduleKind::h1a, 2, 1, config, 3);

    const auto dir = std::filesystem::temp_directory_path() / "rategate-sim-tests" / "corpus";
    std::filesystem::remove_all(dir);
    write_corpus(traces, ScheduleKind::h1a, 3, dir);

    for (const auto& trace : traces) {
        const auto path = dir / (trace.machine_id + ".trace");
        REQUIRE(std::filesystem::exists(path));
        CHECK(read_trace(path) == trace);
    }

    std::ifstream manifest_in(dir / "manifest.json");
    REQUIRE(manifest_in.good());
    const auto manifest = nlohmann::json::parse(manifest_in);
    CHECK(manifest.at("kind") == "h1a");
    CHECK(manifest.at("seed") == 3);
    REQUIRE(manifest.at("traces").size() == 2);
    CHECK(manifest.at("traces")[0].at("file") == "sim-h1a-e000-i00.trace");
    CHECK(manifest.at("traces")[0].contains("ransomware_start"));
}
