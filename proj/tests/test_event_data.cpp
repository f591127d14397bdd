#include "ppfilter/event_data.hpp"
#include "ppfilter/simulate.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace ppfilter;

namespace {

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("ppfilter_test_" + name);
}

Trial make_trial(int id, double t_end, std::vector<double> a) {
    Trial t;
    t.id = id;
    t.t_end = t_end;
    t.events["a"] = std::move(a);
    return t;
}

} // namespace

TEST_CASE("csv rows parse into one trial") {
    const auto data = parse_events_csv("trial,channel,time\n1,a,0.3\n1,a,0.6\n");
    REQUIRE(data.num_trials() == 1);
    CHECK(data.channels() == std::vector<std::string>{"a"});
    CHECK(data.trials()[0].channel("a") == std::vector<double>{0.3, 0.6});
    CHECK(data.trials()[0].t_end == 1.0);
}

TEST_CASE("csv rows are sorted per channel") {
    const auto data = parse_events_csv("trial,channel,time\n1,a,0.6\n1,b,0.2\n1,a,0.3\n");
    CHECK(data.trials()[0].channel("a") == std::vector<double>{0.3, 0.6});
    CHECK(data.trials()[0].channel("b") == std::vector<double>{0.2});
}

TEST_CASE("duplicate event time is rejected") {
    CHECK_THROWS_AS((void)parse_events_csv("trial,channel,time\n1,a,0.3\n1,a,0.3\n"), DataError);
}

TEST_CASE("malformed csv is rejected") {
    CHECK_THROWS_AS((void)parse_events_csv("1,a,0.3\n"), DataError);
    CHECK_THROWS_AS((void)parse_events_csv("trial,channel,time\n1,a\n"), DataError);
    CHECK_THROWS_AS((void)parse_events_csv("trial,channel,time\n1,a,abc\n"), DataError);
    CHECK_THROWS_AS((void)parse_events_csv("#window,1,1\ntrial,channel,time\n1,a,1.5\n"), DataError);
}

TEST_CASE("window metadata and channel order are kept") {
    const auto data = parse_events_csv("#channels,b,a\n#window,4,2.5\ntrial,channel,time\n4,a,0.5\n");
    CHECK(data.channels() == std::vector<std::string>{"b", "a"});
    CHECK(data.trials()[0].t_end == 2.5);
    CHECK(data.trials()[0].channel("b").empty());
}

TEST_CASE("simulated data round-trips bit-exactly through csv and json") {
    auto cfg = SimConfig::uniform(2, 20.0, 0.5, 11);
    cfg.filters[0][1] = ExpFilter{-5.0, 0.2};
    const EventData data = simulate_trials(cfg, 3);
    for (const auto* ext : {"rt.csv", "rt.json"}) {
        const auto path = temp_path(ext);
        save_events(data, path);
        const EventData back = load_events(path);
        CHECK(back == data);
        std::filesystem::remove(path);
    }
}

TEST_CASE("missing file raises a data error") {
    CHECK_THROWS_AS((void)load_events("/nonexistent/ppfilter/events.csv"), DataError);
}

TEST_CASE("json parse errors are data errors") {
    CHECK_THROWS_AS((void)parse_events_json("{"), DataError);
    CHECK_THROWS_AS((void)parse_events_json(R"({"channels":["a"],"trials":[{"id":1}]})"), DataError);
}

TEST_CASE("events outside the window are rejected") {
    CHECK_THROWS_AS(EventData({make_trial(1, 1.0, {0.0})}, {"a"}), DataError);
    CHECK_THROWS_AS(EventData({make_trial(1, 1.0, {1.0})}, {"a"}), DataError);
    CHECK_THROWS_AS(EventData({make_trial(1, 1.0, {0.2}), make_trial(1, 1.0, {0.3})}, {"a"}), DataError);
}

TEST_CASE("uniform grid without events") {
    const auto g = make_time_grid(make_trial(1, 1.0, {}), "a", 10);
    REQUIRE(g.points.size() == 11);
    for (std::size_t l = 0; l <= 10; ++l) CHECK(g.points[l] == doctest::Approx(0.1 * static_cast<double>(l)));
    CHECK(g.jump_indices.empty());
    CHECK(g.deltas[0] == 0.0);
    CHECK(g.n() == 10);
}

TEST_CASE("an event between grid points is inserted") {
    const auto g = make_time_grid(make_trial(1, 1.0, {0.35}), "a", 10);
    REQUIRE(g.points.size() == 12);
    CHECK(g.points[3] == doctest::Approx(0.3));
    CHECK(g.points[4] == 0.35);
    CHECK(g.points[5] == doctest::Approx(0.4));
    CHECK(g.jump_indices == std::vector<std::size_t>{4});
}

TEST_CASE("an event on a grid point is merged") {
    const auto g = make_time_grid(make_trial(1, 1.0, {0.3}), "a", 10);
    CHECK(g.n() == 10);
    CHECK(g.points[3] == 0.3);
    CHECK(g.jump_indices == std::vector<std::size_t>{3});
}

TEST_CASE("grid invariants on random events") {
    auto cfg = SimConfig::uniform(1, 50.0, 1.0, 3);
    const auto data = simulate_trials(cfg, 1);
    const auto& trial = data.trials()[0];
    const auto& ev = trial.channel("c1");
    const auto g = make_time_grid(trial, "c1", 500);
    CHECK(g.n() <= 500 + ev.size());
    REQUIRE(g.jump_indices.size() == ev.size());
    for (std::size_t j = 0; j < ev.size(); ++j) CHECK(g.points[g.jump_indices[j]] == ev[j]);
    for (std::size_t l = 1; l < g.points.size(); ++l) CHECK(g.deltas[l] > 0.0);
    CHECK(g.points.front() == 0.0);
    CHECK(g.points.back() == 50.0);
}

TEST_CASE("missing target channel") {
    CHECK_THROWS_AS((void)make_time_grid(make_trial(1, 1.0, {}), "zz", 10), DataError);
}

TEST_CASE("split replications") {
    std::vector<Trial> trials;
    for (int i = 0; i < 5; ++i) trials.push_back(make_trial(i + 10, 1.0, {0.1 * (i + 1)}));
    const EventData data(trials, {"a"});
    const auto [train, test] = split_replications(data, 2);
    REQUIRE(train.num_trials() == 4);
    REQUIRE(test.num_trials() == 1);
    CHECK(test.trials()[0].id == 12);
    CHECK(train.trials()[2].id == 13);

    const EventData two({trials[0], trials[1]}, {"a"});
    const auto [tr2, te2] = split_replications(two, 0);
    CHECK(tr2.trials()[0].id == 11);
    CHECK(te2.trials()[0].id == 10);

    const EventData one({trials[0]}, {"a"});
    CHECK_THROWS((void)split_replications(one, 0));
}
