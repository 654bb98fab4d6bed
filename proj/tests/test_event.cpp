#include <doctest.h>

#include <random>
#include <set>

#include "trafficproc/event.hpp"

using namespace trafficproc;

namespace {

ExBpafEvent sample_event() {
    ExBpafEvent e;
    e.event_id = "anpr-ML-17";
    e.timestamp_ms = 1367366400000 + 224320;  // 2013-05-01 00:03:44.320Z
    e.server_id = "anpr-ML";
    e.process_definition_id = "BirmStaf01";
    e.process_instance_id = "AB12CDE:2013-05-01";
    e.process_name = "Birmingham-Staffordshire route 1";
    e.activity_definition_id = "LM1012";
    e.activity_instance_id = "AB12CDE:2013-05-01:LM1012:1367366400000";
    e.activity_name = "M6 J6 to M6 J5";
    e.current_state = LifecycleState::ClosedCompleted;
    e.previous_state = LifecycleState::OpenRunning;
    e.correlation = {"AB12CDE", Date{2013, 5, 1}};
    return e;
}

std::string rand_token(std::mt19937_64& rng, size_t max_len) {
    static const char alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789 :-.";
    std::string s;
    const size_t len = rng() % (max_len + 1);
    for (size_t i = 0; i < len; ++i) s += alphabet[rng() % (sizeof(alphabet) - 2)];
    return s;
}

}  // namespace

TEST_CASE("transition legality: the two legal transitions and nothing else") {
    CHECK(validate_transition(std::nullopt, LifecycleState::OpenRunning));
    CHECK(validate_transition(LifecycleState::OpenRunning, LifecycleState::ClosedCompleted));
    CHECK_FALSE(validate_transition(LifecycleState::ClosedCompleted, LifecycleState::OpenRunning));
    CHECK_FALSE(validate_transition(std::nullopt, LifecycleState::ClosedCompleted));
    CHECK_FALSE(validate_transition(LifecycleState::OpenRunning, LifecycleState::OpenRunning));
    CHECK_FALSE(validate_transition(LifecycleState::ClosedCompleted, LifecycleState::ClosedCompleted));
}

TEST_CASE("encode emits one line with the fixed key order and round-trips") {
    auto e = sample_event();
    const std::string wire = encode(e);
    CHECK(wire.find('\n') == std::string::npos);
    CHECK(wire.rfind("eventId=anpr-ML-17|timestamp=1367366624320|serverId=anpr-ML|", 0) == 0);
    CHECK(wire.find("|previousState=OPEN_RUNNING|") != std::string::npos);
    CHECK(wire.find("|corrDate=2013-05-01") != std::string::npos);
    CHECK(decode(wire) == e);
}

TEST_CASE("previousState NULL for starting instances") {
    auto e = sample_event();
    e.current_state = LifecycleState::OpenRunning;
    e.previous_state.reset();
    const std::string wire = encode(e);
    CHECK(wire.find("|previousState=NULL|") != std::string::npos);
    CHECK(decode(wire) == e);
}

TEST_CASE("decode errors: missing field, bad timestamp, unknown state") {
    const std::string wire = encode(sample_event());

    // drop the eventId pair entirely
    std::string no_id = wire.substr(wire.find('|') + 1);
    CHECK_THROWS_WITH_AS(decode(no_id), doctest::Contains("missing field eventId"), EventDecodeError);

    std::string bad_ts = wire;
    bad_ts.replace(bad_ts.find("timestamp=1367366624320"), 23, "timestamp=yesterday_noon");
    CHECK_THROWS_WITH_AS(decode(bad_ts), doctest::Contains("malformed timestamp"), EventDecodeError);

    std::string bad_state = wire;
    bad_state.replace(bad_state.find("currentState=CLOSED_COMPLETED"), 29, "currentState=SUSPENDED_OK");
    CHECK_THROWS_WITH_AS(decode(bad_state), doctest::Contains("unknown state token"), EventDecodeError);
}

TEST_CASE("OPEN_CLOSED_COMPLETED decodes as the canonical CLOSED_COMPLETED") {
    std::string wire = encode(sample_event());
    wire.replace(wire.find("currentState=CLOSED_COMPLETED"), 29, "currentState=OPEN_CLOSED_COMPLETED");
    auto e = decode(wire);
    CHECK(e.current_state == LifecycleState::ClosedCompleted);
    // re-encoding emits the canonical token
    CHECK(encode(e).find("currentState=CLOSED_COMPLETED") != std::string::npos);
    CHECK(encode(e).find("OPEN_CLOSED_COMPLETED") == std::string::npos);
}

TEST_CASE("round-trip identity over randomized events") {
    std::mt19937_64 rng(20180522);
    for (int i = 0; i < 500; ++i) {
        ExBpafEvent e;
        e.event_id = "srv-" + std::to_string(rng() % 100000);
        e.timestamp_ms = int64_t(rng() % 4102444800000LL);
        e.server_id = rand_token(rng, 12);
        e.process_definition_id = rand_token(rng, 16);
        e.process_instance_id = rand_token(rng, 24);
        e.process_name = rand_token(rng, 24);
        e.activity_definition_id = rand_token(rng, 10);
        e.activity_instance_id = rand_token(rng, 32);
        e.activity_name = rand_token(rng, 24);
        const bool open = rng() % 2 == 0;
        e.current_state = open ? LifecycleState::OpenRunning : LifecycleState::ClosedCompleted;
        if (!open) e.previous_state = LifecycleState::OpenRunning;
        e.correlation.registration = "AB" + std::to_string(10 + rng() % 90) + "CDE";
        e.correlation.journey_date =
            Date{int(2000 + rng() % 50), unsigned(1 + rng() % 12), unsigned(1 + rng() % 28)};
        CAPTURE(encode(e));
        CHECK(decode(encode(e)) == e);
    }
}

TEST_CASE("event ids stay unique across a generated batch") {
    std::set<std::string> seen;
    for (int i = 0; i < 1000; ++i) {
        auto e = sample_event();
        e.event_id = "anpr-ML-" + std::to_string(i);
        CHECK(seen.insert(e.event_id).second);
    }
}

TEST_CASE("journey date derivation from timestamps") {
    // 2013-05-01T00:00:00Z
    CHECK(date_of_ms(1367366400000) == Date{2013, 5, 1});
    // one millisecond before midnight still belongs to April 30
    CHECK(date_of_ms(1367366399999) == Date{2013, 4, 30});
    // +60 minutes offset shifts the civil date
    CHECK(date_of_ms(1367366399999, 60) == Date{2013, 5, 1});
    CHECK(ms_at_midnight_utc(Date{2013, 5, 1}) == 1367366400000);
}
