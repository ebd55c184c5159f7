#include "doctest.h"

#include "common/error.hpp"
#include "common/fs_util.hpp"
#include "events/render.hpp"
#include "events/serialize.hpp"
#include "llm/scripted.hpp"
#include "serve/control_server.hpp"
#include "support/agents.hpp"

#include "httplib.h"

#include <future>

using namespace ouro;
using namespace std::chrono_literals;
using json = nlohmann::json;
namespace fs = std::filesystem;
using llm::ScriptReply;
using protocol::format_agent_call;
using protocol::format_tool_call;

namespace {

// main -> solve_problem, which stalls until cancelled; main then submits what it heard.
struct LiveRun {
    fsx::TempDir tmp{"ouro-serve"};
    std::optional<runtime::Codebase> cb;
    std::optional<tools::Workspace> ws;
    events::EventStore store{3};
    std::shared_ptr<llm::ScriptedGateway> g;
    std::optional<runtime::Runtime> rt;
    std::future<runtime::AgentResult> done;

    LiveRun() {
        testing::copy_initial_agents(tmp.path() / "agent");
        fs::create_directories(tmp.path() / "work");
        cb = runtime::Codebase::load(tmp.path() / "agent");
        ws.emplace(tmp.path() / "work");
        g = llm::ScriptedGateway::from_policy([](const llm::CompletionRequest& r) -> ScriptReply {
            auto text = llm::request_text(r);
            if (r.caller == "solve_problem") {
                ScriptReply s;
                s.stall = true;
                return s;
            }
            if (text.find("was cancelled by the human") != std::string::npos)
                return {format_tool_call("submit_answer", {{"answer", "stopped by human"}})};
            if (text.find("<AGENT_RESULT") != std::string::npos)
                return {format_tool_call("submit_answer", {{"answer", "other"}})};
            return {format_agent_call("solve_problem", {{"problem_to_solve", "spin"}})};
        });
        rt.emplace(*cb, *g, store, *ws);
        done = std::async(std::launch::async, [this] {
            runtime::Budget b;
            b.wall_clock = 20s;
            return rt->run("do it", b);
        });
    }

    ~LiveRun() {
        if (auto root = store.root_id(); root && store.running(*root)) rt->cancel(*root, "test over", "human");
    }

    std::string child() {
        for (int i = 0; i < 400; ++i) {
            for (auto* n : store.snapshot().nodes())
                if (n->agent_name == "solve_problem") return n->call_id;
            std::this_thread::sleep_for(10ms);
        }
        FAIL("sub-agent never started");
        return {};
    }
};

json parse(const httplib::Result& r) {
    REQUIRE(r);
    return json::parse(r->body);
}

} // namespace

TEST_CASE("control API over a live run") {
    LiveRun run;
    serve::ControlServer server;
    server.set_run(&run.store, &*run.rt);
    auto port = server.start();
    httplib::Client c("127.0.0.1", port);
    auto id = run.child();

    auto tree = parse(c.Get("/api/tree"));
    CHECK(tree["root"]["agent_name"] == "main");
    CHECK(tree["root"]["children"][0]["call_id"] == id);

    SUBCASE("cancel requires a prior notification unless forced") {
        auto post = [&](const std::string& path, const json& body) {
            return c.Post(path, body.dump(), "application/json");
        };
        auto r = post("/api/cancel", {{"call_id", id}, {"reason", "looping"}});
        REQUIRE(r);
        CHECK(r->status == 409);
        CHECK(run.store.running(id));

        r = post("/api/notify", {{"call_id", id}, {"message", "you seem stuck"}});
        REQUIRE(r);
        CHECK(r->status == 200);
        CHECK(run.store.notification_count(id) == 1);

        r = post("/api/cancel", {{"call_id", id}, {"reason", "still looping"}});
        REQUIRE(r);
        CHECK(r->status == 200);
        auto result = run.done.get();
        CHECK(result.answer == "stopped by human");
        CHECK(run.store.status(id) == events::NodeStatus::cancelled);

        // The node is terminal now.
        r = post("/api/notify", {{"call_id", id}, {"message", "hello?"}});
        REQUIRE(r);
        CHECK(r->status == 409);
        r = post("/api/cancel", {{"call_id", id}, {"force", true}});
        REQUIRE(r);
        CHECK(r->status == 409);
        r = post("/api/notify", {{"call_id", "nope"}, {"message", "x"}});
        REQUIRE(r);
        CHECK(r->status == 404);
        r = post("/api/notify", {{"call_id", id}});
        REQUIRE(r);
        CHECK(r->status == 400);
        r = c.Post("/api/cancel", "not json", "application/json");
        REQUIRE(r);
        CHECK(r->status == 400);
    }
    SUBCASE("force bypasses the policy") {
        auto r = c.Post("/api/cancel", json{{"call_id", id}, {"reason", "now"}, {"force", true}}.dump(),
                        "application/json");
        REQUIRE(r);
        CHECK(r->status == 200);
        CHECK(run.done.get().answer == "stopped by human");
        auto snap = run.store.snapshot();
        auto& parent = snap.at(*snap.root()->children.begin());
        CHECK(parent.status == events::NodeStatus::cancelled);
        auto& root = *snap.root();
        bool told = false;
        for (auto& e : root.events)
            if (e.kind == events::EventKind::overseer_notification && e.payload.source == "human") told = true;
        CHECK(told);
    }
    server.stop();
}

TEST_CASE("event stream pages and long-polls") {
    LiveRun run;
    serve::ControlServer server;
    server.set_run(&run.store, &*run.rt);
    httplib::Client c("127.0.0.1", server.start());
    auto id = run.child();

    auto first = parse(c.Get("/api/events?since=0"));
    REQUIRE(first["events"].size() >= 2);
    CHECK(first["events"][0]["event_id"] == 1);
    auto last = first["last_event_id"].get<std::uint64_t>();

    auto t0 = SteadyClock::now();
    auto idle = parse(c.Get("/api/events?since=" + std::to_string(last) + "&wait_ms=300"));
    CHECK(idle["events"].empty());
    CHECK(SteadyClock::now() - t0 >= 280ms);

    auto waiter = std::async(std::launch::async, [&] {
        httplib::Client c2("127.0.0.1", server.port());
        return parse(c2.Get("/api/events?since=" + std::to_string(last) + "&wait_ms=5000"));
    });
    std::this_thread::sleep_for(100ms);
    run.rt->notify(id, "ping", "human");
    auto woke = waiter.get();
    REQUIRE(woke["events"].size() >= 1);
    CHECK(woke["events"][0]["kind"] == "overseer_notification");
    CHECK(woke["events"][0]["event_id"].get<std::uint64_t>() == last + 1);

    CHECK(c.Get("/api/events?since=abc")->status == 400);
    run.rt->cancel(*run.store.root_id(), "test over", "human");
    run.done.get();
}

TEST_CASE("replayed runs, archives and port conflicts") {
    fsx::TempDir tmp("ouro-serve2");
    events::EventStore store;
    auto root = store.open_call(std::nullopt, "main");
    store.close_call(root, events::NodeStatus::returned, "42");
    auto replay = events::EventStore::from_snapshot(store.snapshot());

    meta::Archive archive(tmp.path() / "archive");
    archive.append(testing::initial_agents_dir());

    serve::ControlServer server;
    auto port = server.start();
    httplib::Client c("127.0.0.1", port);
    CHECK(parse(c.Get("/api/tree"))["root"].is_null());
    CHECK(parse(c.Get("/api/archive"))["iterations"].empty());

    server.set_run(replay.get(), nullptr);
    server.set_archive(&archive);
    CHECK(parse(c.Get("/api/tree"))["root"]["result"] == "42");
    auto it = parse(c.Get("/api/archive"))["iterations"];
    REQUIRE(it.size() == 1);
    CHECK(it[0]["description"] == "initial agent");
    CHECK(it[0]["evaluated"] == false);
    auto r = c.Post("/api/notify", json{{"call_id", root}, {"message", "x"}}.dump(), "application/json");
    REQUIRE(r);
    CHECK(r->status == 409);

    serve::ServeOptions taken;
    taken.port = port;
    serve::ControlServer clash(taken);
    CHECK_THROWS_AS(clash.start(), ouro::Error);
}
