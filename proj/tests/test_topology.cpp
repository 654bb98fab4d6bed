#include <doctest.h>

#include <filesystem>
#include <map>
#include <sstream>

#include "trafficproc/demo.hpp"
#include "trafficproc/runner.hpp"
#include "trafficproc/simulator.hpp"
#include "trafficproc/topology.hpp"

using namespace trafficproc;
namespace fs = std::filesystem;

namespace {
constexpr int64_t kMay1 = 1367366400000;

AreaMap split_map(const RoadNetwork& net) {
    std::istringstream in(demo::area_map_text_split());
    auto m = load_area_map(in);
    REQUIRE(m.validate(net).empty());
    return m;
}
}  // namespace

TEST_CASE("area map loads from appended records and validates") {
    auto net = demo::network();
    auto m = split_map(*net);
    CHECK(m.areas == std::set<std::string>{"ML", "NW"});
    CHECK(*m.area_of("M6 J6") == "ML");
    CHECK(*m.area_of("M6 T4") == "NW");
    CHECK(m.area_of("M1 J1") == nullptr);

    // boundary junctions are exactly the LM1040A endpoints
    auto boundary = m.boundary_junctions(*net);
    CHECK(boundary == std::set<std::string>{"M6 T5", "M6 T4"});

    AreaMap incomplete;
    incomplete.areas.insert("ML");
    CHECK_FALSE(incomplete.validate(*net).empty());

    std::istringstream twice("A,ML\nA,NW\nJA,M6 J6,ML\nJA,M6 J6,NW\n");
    CHECK_THROWS_AS(load_area_map(twice), ValidationError);
}

TEST_CASE("route_detection is deterministic and total modulo unmapped junctions") {
    auto net = demo::network();
    Cluster cluster(net, split_map(*net), {});
    CHECK(cluster.route_detection({"AB12CDE", kMay1, "", "M6 J6"}) == "BASU-ML");
    CHECK(cluster.route_detection({"AB12CDE", kMay1, "", "M6 T4"}) == "BASU-NW");
    CHECK(cluster.route_detection({"AB12CDE", kMay1 + 5, "", "M6 J6"}) == "BASU-ML");
    CHECK_FALSE(cluster.route_detection({"AB12CDE", kMay1, "", "M1 J1"}).has_value());
}

TEST_CASE("message codec round-trips the three kinds") {
    Detection d{"AB12CDE", kMay1, "ML", "M6 J6"};
    auto det_line = encode_message(NodeMessage{d});
    CHECK(det_line == "DET AB12CDE,1367366400000,ML,M6 J6");
    auto det = decode_message(det_line);
    REQUIRE(det.has_value());
    CHECK(std::get<Detection>(*det) == d);

    BoundarySighting b{"AB12CDE", kMay1 + 5, "ML", "M6 T5"};
    auto bnd = decode_message(encode_message(NodeMessage{b}));
    REQUIRE(bnd.has_value());
    CHECK(std::get<BoundarySighting>(*bnd) == b);

    ExBpafEvent e;
    e.event_id = "anpr-ML-1";
    e.timestamp_ms = kMay1;
    e.server_id = "anpr-ML";
    e.process_instance_id = "AB12CDE:2013-05-01";
    e.activity_definition_id = "LM1012";
    e.activity_instance_id = "AB12CDE:2013-05-01:LM1012:0";
    e.current_state = LifecycleState::OpenRunning;
    e.correlation = {"AB12CDE", Date{2013, 5, 1}};
    auto evt = decode_message(encode_message(NodeMessage{e}));
    REQUIRE(evt.has_value());
    CHECK(std::get<ExBpafEvent>(*evt) == e);

    CHECK_FALSE(decode_message("???").has_value());
    CHECK_FALSE(decode_message("XYZ AB12CDE,1,ML,M6 J6").has_value());
}

TEST_CASE("boundary sightings: dedup and non-boundary rejection") {
    auto net = demo::network();
    auto areas = split_map(*net);
    GbasNode gbas(net, &areas, {});

    BoundarySighting s{"AB12CDE", kMay1, "ML", "M6 T5"};
    CHECK(gbas.record_boundary_sighting(s));
    CHECK(gbas.record_boundary_sighting(s));  // duplicate delivery is fine

    BoundarySighting interior{"AB12CDE", kMay1, "ML", "M6 J6"};
    CHECK_FALSE(gbas.record_boundary_sighting(interior));
    CHECK(gbas.rejected_sightings() == 1);
}

TEST_CASE("stitch_cross_area: two fragments chain into the full route") {
    auto net = demo::network();
    auto areas = split_map(*net);
    auto route = demo::route1_links();

    // fragment A: sections 0..6 (ML), fragment B: sections 8..13 (NW);
    // LM1040A (index 7) is the boundary traversal
    std::vector<SectionTime> all;
    int64_t t = kMay1;
    for (const auto& l : route) {
        const int64_t dur = int64_t(l.mean_s * 1000);
        all.push_back({l.id, t, dur});
        t += dur;
    }
    CorrelationKey key{"AB12CDE", Date{2013, 5, 1}};
    JourneyFragment fa{key, "ML", {all.begin(), all.begin() + 7}};
    JourneyFragment fb{key, "NW", {all.begin() + 8, all.end()}};

    BoundarySightingIndex sightings;
    sightings[{key.to_string(), "M6 T5"}].insert(all[7].entry_ms);
    sightings[{key.to_string(), "M6 T4"}].insert(all[8].entry_ms);

    SUBCASE("in order") {
        auto g = stitch_cross_area(*net, areas, {fa, fb}, sightings);
        CHECK(g.status == InstanceStatus::Completed);
        CHECK(g.matched_definition == std::string(demo::kRoute1Id));
        REQUIRE(g.path.size() == 14);
        CHECK(g.path[7].section_id == "LM1040A");
        CHECK(g.path[7].duration_ms == all[7].duration_ms);
        CHECK(g.total_ms == t - kMay1);  // exact conservation
    }
    SUBCASE("reversed fragment order chains by timestamp sort") {
        auto g = stitch_cross_area(*net, areas, {fb, fa}, sightings);
        CHECK(g.status == InstanceStatus::Completed);
        CHECK(g.total_ms == t - kMay1);
    }
    SUBCASE("missing sighting discards the global instance") {
        BoundarySightingIndex none;
        auto g = stitch_cross_area(*net, areas, {fa, fb}, none);
        CHECK(g.status == InstanceStatus::Discarded);
    }
    SUBCASE("unchainable fragments are discarded") {
        JourneyFragment far_away{key, "NW", {all.begin() + 9, all.end()}};  // gap of two sections
        auto g = stitch_cross_area(*net, areas, {fa, far_away}, sightings);
        CHECK(g.status == InstanceStatus::Discarded);
    }
}

TEST_CASE("cluster end-to-end: cross-area journeys complete at GBAS only") {
    auto net = demo::network();
    auto areas = split_map(*net);
    auto profiles = demo::profiles(20, 32, 45);
    Simulator sim(*net, profiles, &areas);
    SimConfig sc;
    sc.first_period = 32;
    sc.last_period = 33;
    sc.seed = 11;
    auto out = sim.generate({demo::kRoute1Id, demo::kRoute2Id}, sc);

    Cluster cluster(net, areas, {});
    cluster.run(out.detections);

    BasuNode* ml = cluster.node_for_area("ML");
    BasuNode* nw = cluster.node_for_area("NW");
    REQUIRE(ml);
    REQUIRE(nw);

    // route 2 lives inside ML and completes there; route-1 fragments discard locally
    CHECK(ml->engine().completed_count() == 40);  // 2 periods x flow 20, route 2
    CHECK(ml->engine().discarded_count() == 40);  // route-1 ML fragments
    CHECK(nw->engine().discarded_count() == 40);  // route-1 NW fragments
    CHECK(nw->engine().completed_count() == 0);

    // GBAS materializes exactly the cross-area vehicles, all COMPLETED
    uint64_t completed = 0;
    for (const auto& g : cluster.gbas().journeys()) {
        CHECK(g.status == InstanceStatus::Completed);
        CHECK(g.matched_definition == std::string(demo::kRoute1Id));
        CHECK(g.path.size() == 14);
        ++completed;
    }
    CHECK(completed == 40);

    // ground truth conservation: stitched totals equal junction-time extents
    std::map<std::string, int64_t> want;
    for (const auto& gt : out.ground_truth)
        if (gt.journey_id == demo::kRoute1Id)
            want[gt.plate + ":2013-05-01"] = gt.junction_times_ms.back() - gt.junction_times_ms.front();
    for (const auto& g : cluster.gbas().journeys()) {
        REQUIRE(want.count(g.instance_id));
        CHECK(g.total_ms == want[g.instance_id]);
    }
}

TEST_CASE("store isolation: wiping one node's store leaves the other's answers intact") {
    const fs::path root = fs::temp_directory_path() / "tp_iso_test";
    fs::remove_all(root);

    auto net = demo::network();
    auto areas = split_map(*net);
    auto profiles = demo::profiles(10, 32, 45);
    Simulator sim(*net, profiles, &areas);
    SimConfig sc;
    sc.first_period = 32;
    sc.last_period = 32;
    auto out = sim.generate({demo::kRoute1Id, demo::kRoute2Id}, sc);

    ClusterConfig cc;
    cc.store_root = root.string();
    {
        Cluster cluster(net, areas, cc);
        cluster.run(out.detections);
    }

    auto count_events = [&](const std::string& node) {
        auto store = EventStore::open((root / node).string());
        return store->size();
    };
    const size_t nw_before = count_events("BASU-NW");
    fs::remove_all(root / "BASU-ML");
    CHECK(count_events("BASU-NW") == nw_before);
    fs::remove_all(root);
}

TEST_CASE("single-area deployments never reach GBAS") {
    auto net = demo::network();
    AreaMap all = AreaMap::single(*net, "ML");
    auto profiles = demo::profiles(5, 32, 45);
    Simulator sim(*net, profiles, &all);
    SimConfig sc;
    sc.first_period = 32;
    sc.last_period = 32;
    auto out = sim.generate({demo::kRoute1Id}, sc);

    Cluster cluster(net, all, {});
    cluster.run(out.detections);
    CHECK(cluster.gbas().journeys().empty());
    CHECK(cluster.node_for_area("ML")->engine().completed_count() == 5);
}

TEST_CASE("bounded queue: backpressure and close handshake") {
    BoundedQueue<int> q(2);
    CHECK(q.push(1));
    CHECK(q.push(2));
    std::thread consumer([&] {
        int n = 0;
        while (auto v = q.pop()) ++n;
        CHECK(n == 3);
    });
    CHECK(q.push(3));  // blocks until the consumer drains, then succeeds
    q.close();
    consumer.join();
    CHECK_FALSE(q.push(4));  // closed
}
