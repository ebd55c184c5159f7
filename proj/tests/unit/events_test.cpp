#include "doctest.h"

#include "common/error.hpp"
#include "events/event_store.hpp"
#include "events/render.hpp"
#include "events/serialize.hpp"

#include <random>
#include <sstream>
#include <thread>

using namespace ouro;
using namespace ouro::events;

namespace {

Payload text_payload(std::string s) {
    Payload p;
    p.text = std::move(s);
    return p;
}

Usage usage(std::int64_t prompt, std::int64_t completion, std::int64_t cached, const char* cost) {
    return Usage{prompt, completion, cached, Money::parse(cost)};
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::internal;
}

} // namespace

TEST_CASE("record_event appends to the owning call") {
    EventStore store(1);
    auto root = store.open_call(std::nullopt, "main");
    auto id = store.record(root, EventKind::assistant_message, text_payload("I'll orchestrate the solution"));
    CHECK(id == 1);
    auto snap = store.snapshot();
    REQUIRE(snap.root()->events.size() == 1);
    CHECK(snap.root()->events[0].payload.text == "I'll orchestrate the solution");
    CHECK(snap.root()->events[0].call_id == root);
}

TEST_CASE("record_event rejects bad input") {
    EventStore store;
    auto root = store.open_call(std::nullopt, "main");
    CHECK(code_of([&] { store.record(root, EventKind::assistant_message, {}, usage(-1, 0, 0, "0")); }) ==
          ErrorCode::invalid_argument);
    CHECK(code_of([&] { store.record(root, EventKind::assistant_message, {}, usage(1, 0, 2, "0")); }) ==
          ErrorCode::invalid_argument);
    CHECK(code_of([&] { store.record("agent_nope", EventKind::assistant_message, {}); }) == ErrorCode::not_found);
    store.close_call(root, NodeStatus::returned, "done");
    CHECK(code_of([&] { store.record(root, EventKind::assistant_message, {}); }) == ErrorCode::conflict);
}

TEST_CASE("concurrent writers keep per-call order") {
    EventStore store;
    auto root = store.open_call(std::nullopt, "main");
    auto a = store.open_call(root, "a");
    auto b = store.open_call(root, "b");
    auto writer = [&](const CallId& id) {
        for (int i = 0; i < 50; ++i) store.record(id, EventKind::assistant_message, text_payload(std::to_string(i)));
    };
    std::thread t1(writer, a), t2(writer, b);
    t1.join();
    t2.join();
    auto snap = store.snapshot();
    CHECK(snap.event_count() == 100);
    for (auto& id : {a, b}) {
        auto& evs = snap.at(id).events;
        REQUIRE(evs.size() == 50);
        for (int i = 0; i < 50; ++i) CHECK(evs[i].payload.text == std::to_string(i));
        for (std::size_t i = 1; i < evs.size(); ++i) {
            CHECK(evs[i].timestamp >= evs[i - 1].timestamp);
            CHECK(evs[i].event_id > evs[i - 1].event_id);
        }
    }
}

TEST_CASE("open and close calls") {
    EventStore store;
    auto root = store.open_call(std::nullopt, "main");
    CHECK(store.snapshot().root()->parent == std::nullopt);
    CHECK(code_of([&] { store.open_call(std::nullopt, "other"); }) == ErrorCode::conflict);

    std::vector<CallId> kids;
    for (int i = 0; i < 3; ++i) kids.push_back(store.open_call(root, "child"));
    for (auto it = kids.rbegin(); it != kids.rend(); ++it) store.close_call(*it, NodeStatus::returned, "r");
    auto snap = store.snapshot();
    for (int i = 0; i < 3; ++i) {
        CHECK(snap.at(kids[i]).ordinal == i + 1);
        CHECK(snap.ordinal_path(kids[i]) == "1." + std::to_string(i + 1));
    }

    store.close_call(root, NodeStatus::returned, "done");
    CHECK(code_of([&] { store.close_call(root, NodeStatus::returned, "done"); }) == ErrorCode::conflict);
    CHECK(code_of([&] { store.close_call("agent_x", NodeStatus::returned, "x"); }) == ErrorCode::not_found);
    CHECK(code_of([&] { store.open_call(root, "late"); }) == ErrorCode::conflict);
}

TEST_CASE("closing a parent with running children is refused") {
    EventStore store;
    auto root = store.open_call(std::nullopt, "main");
    auto child = store.open_call(root, "c");
    CHECK(code_of([&] { store.close_call(root, NodeStatus::returned, "x"); }) == ErrorCode::conflict);
    store.close_call(child, NodeStatus::cancelled, std::nullopt, "looping");
    store.close_call(root, NodeStatus::returned, "x");
    auto snap = store.snapshot();
    auto& c = snap.at(child);
    REQUIRE(!c.events.empty());
    CHECK(c.events.back().kind == EventKind::cancellation);
    CHECK(c.events.back().payload.text == "looping");
    CHECK(*c.end <= *snap.root()->end);
    CHECK(c.start >= snap.root()->start);
}

TEST_CASE("call ids are deterministic per seed") {
    auto ids = [](std::uint64_t seed) {
        EventStore s(seed);
        auto r = s.open_call(std::nullopt, "main");
        return std::vector<CallId>{r, s.open_call(r, "a"), s.open_call(r, "b")};
    };
    CHECK(ids(5) == ids(5));
    CHECK(ids(5) != ids(6));
    CHECK(ids(5)[0].rfind("agent_", 0) == 0);
    CHECK(ids(5)[0].size() == 14);
}

TEST_CASE("snapshots are immutable") {
    EventStore store;
    CHECK(store.snapshot().empty());
    auto root = store.open_call(std::nullopt, "main");
    store.record(root, EventKind::assistant_message, text_payload("x"));
    auto snap = store.snapshot();
    for (int i = 0; i < 5; ++i) store.record(root, EventKind::assistant_message, text_payload("y"));
    CHECK(snap.event_count() == 1);
    CHECK(store.snapshot().event_count() == 6);
}

TEST_CASE("snapshot under concurrent appends is a prefix of the log") {
    EventStore store;
    auto root = store.open_call(std::nullopt, "main");
    auto child = store.open_call(root, "c");
    std::atomic<bool> done{false};
    std::thread writer([&] {
        for (int i = 0; i < 400; ++i)
            store.record(i % 2 ? root : child, EventKind::assistant_message, text_payload(std::to_string(i)));
        done = true;
    });
    std::vector<TreeSnapshot> snaps;
    while (!done) snaps.push_back(store.snapshot());
    writer.join();
    auto log = store.events_since(0);
    REQUIRE(log.size() == 400);
    for (auto& s : snaps) {
        auto evs = s.all_events();
        REQUIRE(evs.size() <= log.size());
        for (std::size_t i = 0; i < evs.size(); ++i) CHECK(evs[i] == log[i]);
    }
}

TEST_CASE("usage totals equal the sum over events") {
    std::mt19937_64 rng(42);
    EventStore store;
    auto root = store.open_call(std::nullopt, "main");
    std::vector<CallId> ids{root};
    Usage expected;
    for (int i = 0; i < 300; ++i) {
        if (rng() % 10 == 0) ids.push_back(store.open_call(ids[rng() % ids.size()], "sub"));
        std::int64_t prompt = static_cast<std::int64_t>(rng() % 5000);
        Usage u{prompt, static_cast<std::int64_t>(rng() % 800), static_cast<std::int64_t>(rng() % (prompt + 1)),
                Money::from_pico(static_cast<std::int64_t>(rng() % 10'000'000'000))};
        expected += u;
        store.record(ids[rng() % ids.size()], EventKind::assistant_message, {}, u);
    }
    auto t = store.snapshot().totals();
    CHECK(t.tokens == expected.tokens());
    CHECK(t.prompt_tokens == expected.prompt_tokens);
    CHECK(t.cached_tokens == expected.cached_tokens);
    CHECK(t.cost == expected.cost);
}

TEST_CASE("render: single root") {
    EventStore store(3);
    store.set_clock([] { return Millis{0}; });
    auto root = store.open_call(std::nullopt, "main");
    auto out = render_trace(store.snapshot());
    CHECK(out == "EXECUTION TREE\n==============\n1 main [" + root +
                     "] (0.0s | 0 tokens (cached 0.00))\n\nTotal Duration: 0.0s\nTotal Tokens: 0 (of which cached "
                     "0)\nTotal Cost: $0.000\n");
}

TEST_CASE("render: nesting, tools, stats and truncation") {
    EventStore store(9);
    Millis clock = 0;
    store.set_clock([&] { return clock; });
    auto root = store.open_call(std::nullopt, "main");
    clock = 100;
    store.record(root, EventKind::assistant_message, text_payload(std::string(500, 'x')), usage(100, 10, 57, "0.01"));
    auto child = store.open_call(root, "reasoning_agent");
    Payload call;
    call.name = "reasoning_agent";
    call.target = child;
    store.record(root, EventKind::agent_call, call);
    auto grandchild = store.open_call(child, "reasoning_agent");
    clock = 2000;
    store.close_call(grandchild, NodeStatus::returned, "ok");
    store.close_call(child, NodeStatus::returned, "ok");
    Payload tc;
    tc.name = "calculate";
    store.record(root, EventKind::tool_call, tc);
    clock = 2300;
    tc.success = true;
    store.record(root, EventKind::tool_result, tc);
    clock = 5000;
    store.close_call(root, NodeStatus::returned, "404");

    auto snap = store.snapshot();
    auto text = render_trace(snap, 50);
    CHECK(text.find("\n   [Stats] Events: 1 tool calls, 1 messages\n") != std::string::npos);
    CHECK(text.find("[Assistant] t+0.1s | \"" + std::string(50, 'x') + "...\"") != std::string::npos);
    CHECK(text.find("\n   1.1 reasoning_agent [" + child + "]") != std::string::npos);
    CHECK(text.find("\n      1.1.1 reasoning_agent [" + grandchild + "]") != std::string::npos);
    CHECK(text.find("[Tool] calculate | 0.3s → Success") != std::string::npos);
    CHECK(text.find("(5.0s | 110 tokens (cached 0.57)) returned") != std::string::npos);
    CHECK(text.find("Total Tokens: 110 (of which cached 57)") != std::string::npos);
    CHECK(text.find("Total Cost: $0.010") != std::string::npos);
    // The child block sits where the agent_call happened: before the tool line.
    CHECK(text.find("1.1 reasoning_agent") < text.find("[Tool] calculate"));
    CHECK(render_trace(snap, 50) == text);
}

TEST_CASE("elide") {
    CHECK(elide(std::string(500, 'a'), 50).size() == 53);
    CHECK(elide("a\nb", 80) == "ab...");
    CHECK(elide("", 80) == "...");
}

TEST_CASE("event log and tree json roundtrip") {
    EventStore store(11);
    auto root = store.open_call(std::nullopt, "main");
    Payload p;
    p.name = "calculate";
    p.args = {{"expression", "floor(2024/5)"}, {"note", "{\"a\": 1}"}};
    store.record(root, EventKind::tool_call, p, usage(10, 2, 3, "0.000123"));
    auto child = store.open_call(root, "solve_problem");
    store.record(child, EventKind::overseer_notification, text_payload("stop looping"));
    store.close_call(child, NodeStatus::cancelled, std::nullopt, "looping", "overseer");
    store.close_call(root, NodeStatus::returned, "404");

    std::stringstream log;
    auto events = store.events_since(0);
    write_event_log(log, events);
    CHECK(read_event_log(log) == events);

    auto line = to_json(events.front());
    std::vector<std::string> keys;
    for (auto& [k, _] : line.items()) keys.push_back(k);
    CHECK(keys == std::vector<std::string>{"event_id", "call_id", "kind", "timestamp", "payload", "usage"});

    auto snap = store.snapshot();
    auto back = tree_from_json(tree_to_json(snap));
    CHECK(render_trace(back) == render_trace(snap));
    CHECK(back.all_events() == snap.all_events());
    CHECK(back.at(child).status == NodeStatus::cancelled);
}
