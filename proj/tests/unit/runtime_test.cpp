#include "doctest.h"

#include "common/error.hpp"
#include "common/fs_util.hpp"
#include "common/text.hpp"
#include "llm/scripted.hpp"
#include "runtime/runtime.hpp"
#include "support/agents.hpp"

#include <atomic>
#include <thread>

using namespace ouro;
using namespace ouro::runtime;
using namespace std::chrono_literals;
using llm::ScriptReply;
using protocol::format_agent_call;
using protocol::format_tool_call;

namespace {

struct Harness {
    fsx::TempDir tmp{"ouro-runtime"};
    fs::path agent_dir = tmp.path() / "agent";
    fs::path work = tmp.path() / "work";
    std::optional<Codebase> codebase;
    std::optional<tools::Workspace> ws;
    events::EventStore store{7};

    explicit Harness(const std::function<void(nlohmann::json&)>& patch = {}) {
        testing::copy_initial_agents(agent_dir, patch);
        fs::create_directories(work);
        codebase = Codebase::load(agent_dir);
        ws.emplace(work);
    }

    Runtime runtime(llm::Gateway& g, RuntimeOptions opts = {}) { return Runtime(*codebase, g, store, *ws, opts); }
};

// Root agent that can calculate and submit.
void calculator_main(nlohmann::json& j) {
    j["agents"]["main"]["tools"] = {"calculate", "submit_answer", "early_exit"};
}

std::vector<events::EventKind> kinds(const events::ExecutionNode& n) {
    std::vector<events::EventKind> out;
    for (auto& e : n.events) out.push_back(e.kind);
    return out;
}

bool request_mentions(const llm::CompletionRequest& r, const std::string& needle) {
    return llm::request_text(r).find(needle) != std::string::npos;
}

} // namespace

TEST_CASE("shipped codebase loads four agents") {
    auto cb = Codebase::load(testing::initial_agents_dir());
    CHECK(cb.agent_names().size() == 4);
    CHECK(cb.entry() == "main");
    auto& main = cb.agent("main");
    CHECK(main.sub_agents == std::vector<std::string>{"software_developer", "solve_problem", "reasoning_agent"});
    CHECK(cb.agent("reasoning_agent").model == "reasoning");
    CHECK(cb.agent("software_developer").system_prompt.find("As a professional and experienced programmer") !=
          std::string::npos);
    CHECK(cb.overseer_prompt().find("{graph_repr}") != std::string::npos);
    CHECK(cb.description() == "initial agent");
    CHECK_THROWS_AS(cb.agent("nope"), Error);
}

TEST_CASE("core prompt places the statement between its delimiters") {
    auto cb = Codebase::load(testing::initial_agents_dir());
    auto core = cb.core_prompt(cb.agent("main"), {{"problem_statement", "S-UNIQUE"}, {"initial_request", "x"},
                                                  {"problem_to_solve", "x"}});
    auto open = core.find("Problem Statement ==");
    auto s = core.find("S-UNIQUE");
    auto close = core.find("End Problem Statement ==");
    REQUIRE(open != std::string::npos);
    CHECK(open < s);
    CHECK(s < close);
}

TEST_CASE("system section documents tools, sub-agents and their tools") {
    auto cb = Codebase::load(testing::initial_agents_dir());
    auto sys = cb.system_section(cb.agent("main"), false);
    CHECK(sys.find("### submit_answer") != std::string::npos);
    CHECK(sys.find("### software_developer") != std::string::npos);
    CHECK(sys.find("Tools: open_file, close_file, overwrite_file") != std::string::npos);
    CHECK(sys.find("### best_problems") == std::string::npos); // no archive attached
    CHECK(cb.system_section(cb.agent("main"), true).find("### best_problems") != std::string::npos);
}

TEST_CASE("load rejects broken codebases") {
    fsx::TempDir tmp("ouro-cb");
    auto expect_config = [](const fs::path& dir) {
        try {
            Codebase::load(dir);
            FAIL("expected a config error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::config);
        }
    };
    SUBCASE("unknown slot") {
        testing::copy_initial_agents(tmp.path() / "a");
        fsx::write_file(tmp.path() / "a/prompts/main_core.txt", "Solve {problem_statement} using {bogus}.");
        expect_config(tmp.path() / "a");
    }
    SUBCASE("missing asset") {
        testing::copy_initial_agents(tmp.path() / "a");
        fs::remove(tmp.path() / "a/prompts/solve_problem_core.txt");
        expect_config(tmp.path() / "a");
    }
    SUBCASE("unknown tool") {
        testing::copy_initial_agents(tmp.path() / "a", [](auto& j) { j["agents"]["main"]["tools"].push_back("teleport"); });
        expect_config(tmp.path() / "a");
    }
    SUBCASE("self reference") {
        testing::copy_initial_agents(tmp.path() / "a",
                                     [](auto& j) { j["agents"]["solve_problem"]["sub_agents"] = {"solve_problem"}; });
        expect_config(tmp.path() / "a");
    }
    SUBCASE("unknown sub-agent") {
        testing::copy_initial_agents(tmp.path() / "a", [](auto& j) { j["agents"]["main"]["sub_agents"].push_back("ghost"); });
        expect_config(tmp.path() / "a");
    }
}

TEST_CASE("immediate submit_answer returns after one completion") {
    Harness h;
    llm::ScriptedGateway g({llm::reply(format_tool_call("submit_answer", {{"answer", "42"}}))});
    auto rt = h.runtime(g);
    auto r = rt.run("What is six times seven?", {});
    CHECK(r.status == RunStatus::returned);
    CHECK(r.value == "42");
    CHECK(r.answer == std::optional<std::string>("42"));
    CHECK(g.calls() == 1);
    auto snap = h.store.snapshot();
    CHECK(snap.root()->status == events::NodeStatus::returned);
    CHECK(snap.root()->result == std::optional<std::string>("42"));
    // The model saw the statement and the tool documentation.
    auto req = g.requests().at(0);
    CHECK(req.caller == "main");
    CHECK(request_mentions(req, "What is six times seven?"));
    CHECK(std::find(req.stop.begin(), req.stop.end(), "</TOOL_CALL>") != req.stop.end());
}

TEST_CASE("calculate then submit leaves a full trace") {
    Harness h(calculator_main);
    llm::ScriptedGateway g({
        llm::reply(format_tool_call("calculate", {{"expression", "floor(2024/5)"}})),
        llm::expect(
            [](const llm::CompletionRequest& r) { return request_mentions(r, "<TOOL_RESULT name=\"calculate\" success=\"true\">\n404\n"); },
            {format_tool_call("submit_answer", {{"answer", "404"}})}),
    });
    auto rt = h.runtime(g);
    auto r = rt.run("floor(2024/5)?", {});
    REQUIRE(g.failures().empty());
    CHECK(r.answer == std::optional<std::string>("404"));
    auto root = *h.store.snapshot().root();
    using K = events::EventKind;
    CHECK(kinds(root) == std::vector<K>{K::assistant_message, K::tool_call, K::tool_result, K::assistant_message,
                                        K::tool_call, K::tool_result});
    CHECK(root.events[1].payload.name == "calculate");
    CHECK(root.events[2].payload.text == "404");
    CHECK(root.events[2].payload.success == std::optional<bool>(true));
    // The stop sequence is restored in the recorded generation.
    CHECK(text::ends_with(root.events[0].payload.text, "</TOOL_CALL>"));
}

TEST_CASE("parse errors are fed back rather than ending the call") {
    Harness h(calculator_main);
    llm::ScriptedGateway g({
        llm::reply("<TOOL_CALL>\n<TOOL_NAME>teleport</TOOL_NAME>\n</TOOL_CALL>"),
        llm::reply(format_tool_call("submit_answer", {{"answer", "ok"}})),
    });
    auto rt = h.runtime(g);
    auto r = rt.run("p", {});
    CHECK(r.status == RunStatus::returned);
    auto root = *h.store.snapshot().root();
    CHECK(root.events[1].kind == events::EventKind::tool_result);
    CHECK(root.events[1].payload.success == std::optional<bool>(false));
    CHECK(request_mentions(g.requests().at(1), "success=\"false\""));
}

TEST_CASE("a stalled model times out within the grace period") {
    Harness h;
    ScriptReply stall;
    stall.stall = true;
    llm::ScriptedGateway g({llm::reply(stall)});
    auto rt = h.runtime(g);
    Budget b;
    b.wall_clock = 1s;
    auto t0 = SteadyClock::now();
    auto r = rt.run("p", b);
    auto elapsed = SteadyClock::now() - t0;
    CHECK(r.status == RunStatus::timed_out);
    CHECK(elapsed < 1500ms);
    auto root = *h.store.snapshot().root();
    CHECK(root.status == events::NodeStatus::timed_out);
    REQUIRE(!root.events.empty());
    CHECK(root.events.back().kind == events::EventKind::cancellation);
}

TEST_CASE("completion cap and dollar budget") {
    SUBCASE("completion cap") {
        Harness h(calculator_main);
        auto g = llm::ScriptedGateway::from_policy(
            [](const llm::CompletionRequest&) { return ScriptReply{format_tool_call("calculate", {{"expression", "1+1"}})}; });
        auto rt = h.runtime(*g);
        Budget b;
        b.max_completions = 3;
        auto r = rt.run("p", b);
        CHECK(r.status == RunStatus::budget_exhausted);
        CHECK(g->calls() == 3);
        CHECK(h.store.snapshot().root()->status == events::NodeStatus::cancelled);
    }
    SUBCASE("dollars") {
        Harness h(calculator_main);
        auto g = llm::ScriptedGateway::from_policy([](const llm::CompletionRequest&) {
            ScriptReply r{format_tool_call("calculate", {{"expression", "1+1"}})};
            r.usage = events::Usage{10, 10, 0, Money::parse("0.40")};
            return r;
        });
        auto rt = h.runtime(*g);
        Budget b;
        b.dollars = Money::parse("1.00");
        auto r = rt.run("p", b);
        CHECK(r.status == RunStatus::budget_exhausted);
        CHECK(g->calls() == 3); // 0.40, 0.80, 1.20
        CHECK(r.usage.cost == Money::parse("1.20"));
    }
    CHECK_THROWS_AS(Budget{0ms}.validate(), Error);
}

TEST_CASE("sub-agent result reaches the parent as exactly the returned string") {
    Harness h;
    auto g = llm::ScriptedGateway::from_policy([](const llm::CompletionRequest& r) -> ScriptReply {
        if (r.caller == "reasoning_agent") return {"insight: use a heap<COMPLETE></COMPLETE>"};
        if (request_mentions(r, "<AGENT_RESULT"))
            return {format_tool_call("submit_answer", {{"answer", "done"}})};
        return {format_agent_call("reasoning_agent", {{"problem_to_solve", "how to merge k lists?"}})};
    });
    auto rt = h.runtime(*g);
    auto r = rt.run("merge k sorted lists", {});
    CHECK(r.status == RunStatus::returned);
    auto reqs = g->requests();
    REQUIRE(reqs.size() == 3);
    CHECK(reqs[1].caller == "reasoning_agent");
    CHECK(reqs[1].model == "reasoning");
    // Fresh context for the child: its instruction and the root request, none of the parent's stream.
    CHECK(request_mentions(reqs[1], "how to merge k lists?"));
    CHECK(request_mentions(reqs[1], "merge k sorted lists"));
    CHECK_FALSE(request_mentions(reqs[1], "<AGENT_CALL>"));
    CHECK(request_mentions(reqs[2], "<AGENT_RESULT name=\"reasoning_agent\">\ninsight: use a heap\n</AGENT_RESULT>"));
    CHECK_FALSE(request_mentions(reqs[2], "insight: use a heap<COMPLETE>"));

    auto snap = h.store.snapshot();
    auto root = *snap.root();
    REQUIRE(root.children.size() == 1);
    auto& child = snap.at(root.children[0]);
    CHECK(child.status == events::NodeStatus::returned);
    CHECK(snap.ordinal_path(child.call_id) == "1.1");
    CHECK(root.events[1].kind == events::EventKind::agent_call);
    CHECK(root.events[1].payload.target == child.call_id);
    CHECK(root.events[2].kind == events::EventKind::agent_result);
    CHECK(root.events[2].payload.text == "insight: use a heap");
}

TEST_CASE("sub-agent early exit reports its reason to the parent") {
    Harness h;
    auto g = llm::ScriptedGateway::from_policy([](const llm::CompletionRequest& r) -> ScriptReply {
        if (r.caller == "solve_problem") return {format_tool_call("early_exit", {{"reason", "the input is ambiguous"}})};
        if (request_mentions(r, "<AGENT_RESULT")) return {format_tool_call("submit_answer", {{"answer", "?"}})};
        return {format_agent_call("solve_problem", {{"problem_to_solve", "x"}})};
    });
    auto rt = h.runtime(*g);
    rt.run("p", {});
    CHECK(request_mentions(g->requests().at(2), "Exited early: the input is ambiguous"));
}

TEST_CASE("sub-agents cannot submit and the root cannot return_result") {
    Harness h([](auto& j) { j["agents"]["solve_problem"]["tools"].push_back("submit_answer"); });
    auto g = llm::ScriptedGateway::from_policy([](const llm::CompletionRequest& r) -> ScriptReply {
        if (r.caller == "solve_problem") {
            if (request_mentions(r, "TOOL_RESULT")) return {format_tool_call("return_result", {{"result", "r"}})};
            return {format_tool_call("submit_answer", {{"answer", "sneaky"}})};
        }
        if (request_mentions(r, "<AGENT_RESULT")) return {format_tool_call("submit_answer", {{"answer", "fine"}})};
        return {format_agent_call("solve_problem", {{"problem_to_solve", "x"}})};
    });
    auto rt = h.runtime(*g);
    auto r = rt.run("p", {});
    CHECK(r.answer == std::optional<std::string>("fine"));
}

TEST_CASE("nesting beyond the depth limit is an error to the caller") {
    // a1 -> a2 -> ... -> a6, each calling the next once.
    Harness h([](nlohmann::json& j) {
        auto base = j["agents"]["solve_problem"];
        nlohmann::json agents;
        for (int i = 1; i <= 6; ++i) {
            auto a = base;
            a["tools"] = {"return_result", "submit_answer"};
            a["sub_agents"] = i < 6 ? nlohmann::json::array({"a" + std::to_string(i + 1)}) : nlohmann::json::array();
            agents["a" + std::to_string(i)] = a;
        }
        agents["a1"]["args"] = nlohmann::json::array();
        j["agents"] = agents;
        j["entry"] = "a1";
    });
    auto g = llm::ScriptedGateway::from_policy([](const llm::CompletionRequest& r) -> ScriptReply {
        int i = r.caller[1] - '0';
        auto terminal = i == 1 ? format_tool_call("submit_answer", {{"answer", "top"}})
                               : format_tool_call("return_result", {{"result", "from " + r.caller}});
        if (request_mentions(r, "<AGENT_RESULT")) return {terminal};
        return {format_agent_call("a" + std::to_string(i + 1), {{"problem_to_solve", "go"}})};
    });
    auto rt = h.runtime(*g, RuntimeOptions{.max_depth = 5});
    auto r = rt.run("p", {});
    CHECK(r.status == RunStatus::returned);
    auto snap = h.store.snapshot();
    CHECK(snap.node_count() == 5);
    for (auto* n : snap.nodes()) CHECK(n->agent_name != "a6");
    // a5 was told why.
    bool told = false;
    for (auto& req : g->requests())
        if (req.caller == "a5" && request_mentions(req, "nesting limit of 5")) told = true;
    CHECK(told);
}

TEST_CASE("notifications appear in arrival order and not after return") {
    Harness h(calculator_main);
    Runtime* rt_ptr = nullptr;
    int call = 0;
    auto g = llm::ScriptedGateway::from_policy([&](const llm::CompletionRequest&) -> ScriptReply {
        ++call;
        if (call == 1) {
            auto root = *rt_ptr->store().root_id();
            rt_ptr->notify(root, "first note");
            rt_ptr->notify(root, "second note", "human");
            return {format_tool_call("calculate", {{"expression", "1"}})};
        }
        return {format_tool_call("submit_answer", {{"answer", "ok"}})};
    });
    auto rt = h.runtime(*g);
    rt_ptr = &rt;
    rt.run("p", {});
    auto text = llm::request_text(g->requests().at(1));
    auto a = text.find("<OVERSEER_NOTIFICATION>\nfirst note\n</OVERSEER_NOTIFICATION>");
    auto b = text.find("<OVERSEER_NOTIFICATION>\nsecond note\n</OVERSEER_NOTIFICATION>");
    REQUIRE(a != std::string::npos);
    REQUIRE(b != std::string::npos);
    CHECK(a < b);
    auto root = *h.store.snapshot().root();
    CHECK(h.store.notification_count(root.call_id) == 2);
    CHECK(root.events[1].payload.source == "human");
    try {
        rt.notify(root.call_id, "too late");
        FAIL("expected conflict");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::conflict);
        CHECK(std::string(e.what()) == "Agents that have already returned cannot receive notifications");
    }
    CHECK_THROWS_AS(rt.cancel(root.call_id, "x"), Error);
    CHECK_THROWS_AS(rt.notify("nope", "x"), Error);
}

TEST_CASE("cancelling a node cancels its running descendants and notifies the parent") {
    Harness h;
    ScriptReply stall;
    stall.stall = true;
    auto g = llm::ScriptedGateway::from_policy([&](const llm::CompletionRequest& r) -> ScriptReply {
        if (r.caller == "reasoning_agent") return stall;
        if (r.caller == "software_developer")
            return {format_agent_call("reasoning_agent", {{"problem_to_solve", "think"}})};
        if (request_mentions(r, "<AGENT_RESULT")) return {format_tool_call("submit_answer", {{"answer", "after"}})};
        return {format_agent_call("software_developer", {{"problem_to_solve", "build"}})};
    });
    auto rt = h.runtime(*g);
    std::thread canceller([&] {
        for (int i = 0; i < 500; ++i) {
            auto snap = h.store.snapshot();
            for (auto* n : snap.nodes())
                if (n->agent_name == "reasoning_agent") {
                    rt.cancel(*n->parent, "your software developer agent was looping");
                    return;
                }
            std::this_thread::sleep_for(10ms);
        }
    });
    Budget b;
    b.wall_clock = 10s;
    auto t0 = SteadyClock::now();
    auto r = rt.run("p", b);
    canceller.join();
    CHECK(SteadyClock::now() - t0 < 5s);
    CHECK(r.status == RunStatus::returned);
    auto snap = h.store.snapshot();
    for (auto* n : snap.nodes()) {
        if (n->agent_name == "main") CHECK(n->status == events::NodeStatus::returned);
        else CHECK(n->status == events::NodeStatus::cancelled);
    }
    auto last = g->requests().back();
    CHECK(last.caller == "main");
    CHECK(request_mentions(last, "Agent software_developer was cancelled: your software developer agent was looping"));
    CHECK(request_mentions(last, "<OVERSEER_NOTIFICATION>\nYour sub-agent software_developer"));
}

TEST_CASE("cancelling the root ends the whole run") {
    Harness h;
    ScriptReply stall;
    stall.stall = true;
    auto g = llm::ScriptedGateway::from_policy([&](const llm::CompletionRequest& r) -> ScriptReply {
        if (r.caller == "reasoning_agent") return stall;
        return {format_agent_call("reasoning_agent", {{"problem_to_solve", "think"}})};
    });
    auto rt = h.runtime(*g);
    std::thread canceller([&] {
        while (h.store.snapshot().node_count() < 2) std::this_thread::sleep_for(5ms);
        rt.cancel(*h.store.root_id(), "operator stop", "human");
    });
    auto r = rt.run("p", {});
    canceller.join();
    CHECK(r.status == RunStatus::cancelled);
    CHECK(r.value == "operator stop");
    for (auto* n : h.store.snapshot().nodes()) CHECK(n->status == events::NodeStatus::cancelled);
}

TEST_CASE("scripted runs are deterministic") {
    auto run_once = [] {
        Harness h;
        auto g = llm::ScriptedGateway::from_policy([](const llm::CompletionRequest& r) -> ScriptReply {
            if (r.caller == "reasoning_agent") return {"think hard<COMPLETE></COMPLETE>"};
            if (r.caller == "solve_problem") {
                if (request_mentions(r, "TOOL_RESULT")) return {format_tool_call("return_result", {{"result", "7"}})};
                return {format_tool_call("calculate", {{"expression", "3+4"}})};
            }
            if (request_mentions(r, "name=\"solve_problem\""))
                return {format_tool_call("submit_answer", {{"answer", "7"}})};
            if (request_mentions(r, "<AGENT_RESULT"))
                return {format_agent_call("solve_problem", {{"problem_to_solve", "3+4"}})};
            return {format_agent_call("reasoning_agent", {{"problem_to_solve", "plan"}})};
        });
        auto rt = h.runtime(*g);
        rt.run("add three and four", {});
        std::string out;
        for (auto& e : h.store.snapshot().all_events()) {
            out += e.call_id + "|" + events::to_string(e.kind) + "|" + e.payload.name + "|" + e.payload.text + "|" +
                   e.payload.target + "|";
            for (auto& [k, v] : e.payload.args) out += k + "=" + v + ";";
            if (e.usage) out += std::to_string(e.usage->tokens());
            out += "\n";
        }
        return out;
    };
    auto a = run_once();
    CHECK(a.find("submit_answer") != std::string::npos);
    CHECK(a == run_once());
}
