#include "doctest.h"

#include "cli/process.hpp"
#include "ouro/ouro.h"

#include "json.hpp"

#include <memory>
#include <thread>

using namespace cli_test;
using json = nlohmann::json;

namespace {

std::string take(char* s) {
    std::string out = s ? s : "";
    ouro_string_free(s);
    return out;
}

struct SessionPtr {
    ouro_session* s = nullptr;
    explicit SessionPtr(const std::string& config) {
        REQUIRE(ouro_session_open(agents_dir().c_str(), fixture("cli/" + config).c_str(), &s) == OURO_OK);
    }
    ~SessionPtr() { ouro_session_close(s); }
};

std::string child_of_root(ouro_run* run) {
    for (int i = 0; i < 500; ++i) {
        char* tree = nullptr;
        REQUIRE(ouro_run_tree_json(run, &tree) == OURO_OK);
        auto j = json::parse(take(tree));
        if (j["root"].is_object() && !j["root"]["children"].empty()) return j["root"]["children"][0]["call_id"];
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    FAIL("no sub-agent started");
    return {};
}

} // namespace

TEST_CASE("status codes and argument checks") {
    CHECK(std::string(ouro_status_name(OURO_ERR_CONFIG)) == "config");
    CHECK(std::string(ouro_version()).size() > 0);

    ouro_session* s = nullptr;
    CHECK(ouro_session_open(nullptr, "x", &s) == OURO_ERR_INVALID_ARGUMENT);
    CHECK(std::string(ouro_last_error()).find("agent_dir") != std::string::npos);
    CHECK(ouro_session_open(agents_dir().c_str(), "/no/such/gateway.json", &s) == OURO_ERR_CONFIG);
    CHECK(std::string(ouro_last_error()).find("/no/such/gateway.json") != std::string::npos);
    CHECK(s == nullptr);

    SessionPtr session("gateway.json");
    CHECK(ouro_session_set_budget(session.s, 0, "not money", 0) != OURO_OK);
    CHECK(ouro_session_set_budget(session.s, 5, "0.50", 10) == OURO_OK);
    CHECK(std::string(ouro_last_error()).empty());
    CHECK(ouro_session_set_workers(session.s, 0) == OURO_ERR_INVALID_ARGUMENT);
    CHECK(ouro_session_set_overseer_delay(session.s, -1) == OURO_ERR_INVALID_ARGUMENT);

    char* out = nullptr;
    CHECK(ouro_archive_json("/no/such/archive", &out) == OURO_ERR_NOT_FOUND);
    CHECK(ouro_report_table("{not json", &out) == OURO_ERR_PARSE);
    ouro_session_close(nullptr);
    ouro_run_free(nullptr);
    ouro_server_close(nullptr);
}

TEST_CASE("a run through the C API") {
    TempDir tmp;
    SessionPtr session("gateway.json");
    REQUIRE(ouro_session_set_workspace(session.s, (tmp.path / "work").c_str()) == OURO_OK);
    REQUIRE(ouro_session_set_overseer(session.s, 0) == OURO_OK);
    ouro_run* run = nullptr;
    REQUIRE(ouro_run_start(session.s, "say hi", &run) == OURO_OK);

    ouro_run_status st;
    char* answer = nullptr;
    CHECK(ouro_run_result(run, &st, &answer) == OURO_ERR_CONFLICT);
    int finished = 0;
    REQUIRE(ouro_run_wait(run, -1, &finished) == OURO_OK);
    CHECK(finished == 1);
    REQUIRE(ouro_run_result(run, &st, &answer) == OURO_OK);
    CHECK(st == OURO_RUN_RETURNED);
    CHECK(take(answer) == "hi");

    char* events = nullptr;
    REQUIRE(ouro_run_events_json(run, 0, &events) == OURO_OK);
    auto all = json::parse(take(events));
    REQUIRE(all.size() >= 3);
    REQUIRE(ouro_run_events_json(run, all[1]["event_id"].get<std::uint64_t>(), &events) == OURO_OK);
    CHECK(json::parse(take(events)).size() == all.size() - 2);

    char* text = nullptr;
    REQUIRE(ouro_run_trace_text(run, &text) == OURO_OK);
    CHECK(take(text).find("submit_answer") != std::string::npos);
    REQUIRE(ouro_run_save(run, (tmp.path / "saved").c_str()) == OURO_OK);
    CHECK(fs::exists(tmp.path / "saved/events.jsonl"));

    char* root = nullptr;
    REQUIRE(ouro_run_root_id(run, &root) == OURO_OK);
    auto id = take(root);
    CHECK(ouro_run_notify(run, id.c_str(), "too late") == OURO_ERR_CONFLICT);
    CHECK(ouro_run_notify(run, "agent_nope", "x") == OURO_ERR_NOT_FOUND);
    CHECK(ouro_run_cancel(run, id.c_str(), "late", 1) == OURO_ERR_CONFLICT);
    ouro_run_free(run);
}

TEST_CASE("cancel policy and freeing a live run") {
    SessionPtr session("stall_gateway.json");
    TempDir tmp;
    REQUIRE(ouro_session_set_workspace(session.s, tmp.path.c_str()) == OURO_OK);
    ouro_run* run = nullptr;
    REQUIRE(ouro_run_start(session.s, "do it", &run) == OURO_OK);
    auto child = child_of_root(run);

    CHECK(ouro_run_cancel(run, child.c_str(), "spinning", 0) == OURO_ERR_CONFLICT);
    CHECK(ouro_run_notify(run, child.c_str(), "") == OURO_ERR_INVALID_ARGUMENT);
    REQUIRE(ouro_run_notify(run, child.c_str(), "you look stuck") == OURO_OK);
    REQUIRE(ouro_run_cancel(run, child.c_str(), "still spinning", 0) == OURO_OK);
    int finished = 0;
    REQUIRE(ouro_run_wait(run, 20000, &finished) == OURO_OK);
    REQUIRE(finished == 1);
    ouro_run_status st;
    char* answer = nullptr;
    REQUIRE(ouro_run_result(run, &st, &answer) == OURO_OK);
    CHECK(st == OURO_RUN_RETURNED);
    CHECK(take(answer) == "stopped");
    ouro_run_free(run);

    // Freed while the sub-agent still stalls: the handle cancels and joins.
    SessionPtr again("stall_gateway.json");
    REQUIRE(ouro_session_set_workspace(again.s, tmp.path.c_str()) == OURO_OK);
    REQUIRE(ouro_run_start(again.s, "do it", &run) == OURO_OK);
    child_of_root(run);
    auto t0 = std::chrono::steady_clock::now();
    ouro_run_free(run);
    CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(10));
}

TEST_CASE("bench and report table through the C API") {
    TempDir tmp;
    SessionPtr session("bench_gateway.json");
    char* report = nullptr;
    CHECK(ouro_bench_run(session.s, (tmp.path / "none.jsonl").c_str(), nullptr, &report) == OURO_ERR_NOT_FOUND);
    REQUIRE(ouro_bench_run(session.s, fixture("cli/tasks_one.jsonl").c_str(), nullptr, &report) == OURO_OK);
    auto j = take(report);
    CHECK(json::parse(j)["p_score"] == 1.0);
    char* table = nullptr;
    REQUIRE(ouro_report_table(j.c_str(), &table) == OURO_OK);
    CHECK(take(table).find("arith") != std::string::npos);
}
