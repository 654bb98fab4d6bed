#include <doctest.h>

#include "trafficproc/demo.hpp"
#include "trafficproc/gateway.hpp"

using namespace trafficproc;

namespace {
constexpr int64_t kMay1 = 1367366400000;  // 2013-05-01T00:00:00Z

Detection det(const std::string& plate, int64_t ts, const std::string& junction) {
    return Detection{plate, ts, "ML", junction};
}
}  // namespace

TEST_CASE("detection wire format round-trips") {
    Detection d{"AB12CDE", 1367366400000, "ML", "M6 J6"};
    CHECK(format_detection(d) == "AB12CDE,1367366400000,ML,M6 J6");
    CHECK(parse_detection(format_detection(d)) == d);
    CHECK_FALSE(parse_detection("too,few").has_value());
    CHECK_FALSE(parse_detection("p,notatime,a,c").has_value());
}

TEST_CASE("second sighting emits the retrospective OPEN/CLOSED pair") {
    auto net = demo::network();
    AnprGateway gw(*net, {"anpr-ML", 0});

    auto first = gw.ingest_detection(det("AB12CDE", kMay1, "M6 J6"));
    CHECK(first.events.empty());
    CHECK_FALSE(first.rejection.has_value());
    CHECK(gw.cache_size() == 1);

    auto second = gw.ingest_detection(det("AB12CDE", kMay1 + 224320, "M6 J5"));
    REQUIRE(second.events.size() == 2);
    const auto& open = second.events[0];
    const auto& closed = second.events[1];

    CHECK(open.current_state == LifecycleState::OpenRunning);
    CHECK_FALSE(open.previous_state.has_value());
    CHECK(open.timestamp_ms == kMay1);  // carries the earlier sighting's time
    CHECK(open.activity_definition_id == "LM1012");

    CHECK(closed.current_state == LifecycleState::ClosedCompleted);
    CHECK(closed.previous_state == LifecycleState::OpenRunning);
    CHECK(closed.timestamp_ms == kMay1 + 224320);
    CHECK(closed.timestamp_ms - open.timestamp_ms == 224320);  // 224.32 s

    CHECK(open.activity_instance_id == closed.activity_instance_id);
    CHECK(open.activity_instance_id == "AB12CDE:2013-05-01:LM1012:" + std::to_string(kMay1));
    CHECK(open.process_instance_id == "AB12CDE:2013-05-01");
    CHECK(open.process_definition_id.empty());  // unset until journey matching
    CHECK(open.event_id != closed.event_id);
    CHECK(validate_transition(open.previous_state, open.current_state));
    CHECK(validate_transition(closed.previous_state, closed.current_state));
}

TEST_CASE("jump with no connecting section rejects and poisons the key") {
    auto net = demo::network();
    AnprGateway gw(*net);

    gw.ingest_detection(det("XX00XXX", kMay1, "M6 J6"));
    auto jump = gw.ingest_detection(det("XX00XXX", kMay1 + 60000, "M42 J8"));
    CHECK(jump.events.empty());
    REQUIRE(jump.rejection.has_value());
    CHECK(jump.rejection->reason == RejectReason::NoSection);
    CHECK(format_rejection(*jump.rejection) ==
          std::to_string(kMay1 + 60000) + ",XX00XXX,2013-05-01,NO_SECTION");

    // later perfectly valid detections for the key are rejected as poisoned
    auto later = gw.ingest_detection(det("XX00XXX", kMay1 + 120000, "M6 T11"));
    CHECK(later.events.empty());
    REQUIRE(later.rejection.has_value());
    CHECK(later.rejection->reason == RejectReason::Poisoned);

    // until the entry is evicted: afterwards the key starts fresh
    CHECK(gw.evict_stale_trajectories(kMay1 + 120000 + 31 * 60000, 30 * 60000) == 1);
    auto fresh = gw.ingest_detection(det("XX00XXX", kMay1 + 32 * 60000 + 120000, "M6 J6"));
    CHECK(fresh.events.empty());
    CHECK_FALSE(fresh.rejection.has_value());
}

TEST_CASE("non-monotonic timestamps are rejected, equal included") {
    auto net = demo::network();
    AnprGateway gw(*net);
    const int64_t noon = kMay1 + 12 * 3600 * 1000;
    gw.ingest_detection(det("YY11YYY", noon, "M6 J6"));

    auto equal = gw.ingest_detection(det("YY11YYY", noon, "M6 J5"));
    REQUIRE(equal.rejection.has_value());
    CHECK(equal.rejection->reason == RejectReason::NonMonotonic);

    auto backwards = gw.ingest_detection(det("YY11YYY", noon - 1000, "M6 J5"));
    REQUIRE(backwards.rejection.has_value());
    CHECK(backwards.rejection->reason == RejectReason::NonMonotonic);

    // the cache entry is untouched; a proper sighting still works
    auto ok = gw.ingest_detection(det("YY11YYY", noon + 200000, "M6 J5"));
    CHECK(ok.events.size() == 2);
}

TEST_CASE("unknown camera drops the detection and counts it") {
    auto net = demo::network();
    AnprGateway gw(*net);
    auto res = gw.ingest_detection(det("ZZ22ZZZ", kMay1, "M1 J99"));
    CHECK(res.events.empty());
    REQUIRE(res.rejection.has_value());
    CHECK(res.rejection->reason == RejectReason::UnknownCamera);
    CHECK(gw.stats().rejected_unknown_camera == 1);
    CHECK(gw.cache_size() == 0);
}

TEST_CASE("eviction thresholds") {
    auto net = demo::network();
    AnprGateway gw(*net);
    const int64_t ttl = 30 * 60000;

    CHECK(gw.evict_stale_trajectories(kMay1, ttl) == 0);  // empty cache

    gw.ingest_detection(det("AA00AAA", kMay1, "M6 J6"));
    CHECK(gw.evict_stale_trajectories(kMay1 + 31 * 60000, ttl) == 1);  // idle 31 min

    for (int i = 0; i < 1000; ++i)
        gw.ingest_detection(det("AA" + std::to_string(i) + "AAA", kMay1, "M6 J6"));
    CHECK(gw.evict_stale_trajectories(kMay1 + 5 * 60000, ttl) == 0);  // all idle 5 min
    CHECK(gw.cache_size() == 1000);
}

TEST_CASE("exact-TTL idleness is not evicted (strict exceedance)") {
    auto net = demo::network();
    AnprGateway gw(*net);
    gw.ingest_detection(det("AA00AAA", kMay1, "M6 J6"));
    CHECK(gw.evict_stale_trajectories(kMay1 + 30 * 60000, 30 * 60000) == 0);
    CHECK(gw.evict_stale_trajectories(kMay1 + 30 * 60000 + 1, 30 * 60000) == 1);
}

TEST_CASE("a full route walk emits 2k events whose sections chain") {
    auto net = demo::network();
    AnprGateway gw(*net);
    auto route = demo::route1_links();

    int64_t t = kMay1;
    std::vector<ExBpafEvent> all;
    gw.ingest_detection(det("GH56JKL", t, route[0].from));
    for (const auto& link : route) {
        t += int64_t(link.mean_s * 1000);
        auto res = gw.ingest_detection(det("GH56JKL", t, link.to));
        REQUIRE(res.events.size() == 2);
        CHECK(res.events[1].timestamp_ms > res.events[0].timestamp_ms);
        for (auto& e : res.events) all.push_back(e);
    }
    CHECK(all.size() == 2 * route.size());

    // consecutive emitted sections are adjacent in the network
    for (size_t i = 2; i < all.size(); i += 2) {
        const RoadSection* prev = net->section(all[i - 2].activity_definition_id);
        const RoadSection* cur = net->section(all[i].activity_definition_id);
        CHECK(prev->end_junction == cur->start_junction);
    }

    auto entry = gw.trajectory(CorrelationKey{"GH56JKL", Date{2013, 5, 1}});
    REQUIRE(entry.has_value());
    CHECK(entry->observed_sections.size() == route.size());
    CHECK(entry->last_junction == route.back().to);
}

TEST_CASE("midnight rollover starts a fresh correlation key") {
    auto net = demo::network();
    AnprGateway gw(*net);
    // last sighting 23:58 on April 30
    gw.ingest_detection(det("NT70MDN", kMay1 - 2 * 60000, "M6 J6"));
    // next sighting 00:03 on May 1: new key, first sighting, no emission
    auto res = gw.ingest_detection(det("NT70MDN", kMay1 + 3 * 60000, "M6 J5"));
    CHECK(res.events.empty());
    CHECK_FALSE(res.rejection.has_value());
    CHECK(gw.cache_size() == 2);
    CHECK(gw.trajectory(CorrelationKey{"NT70MDN", Date{2013, 4, 30}}).has_value());
    CHECK(gw.trajectory(CorrelationKey{"NT70MDN", Date{2013, 5, 1}}).has_value());
}
