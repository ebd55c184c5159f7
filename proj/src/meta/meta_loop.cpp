#include "meta/meta_loop.hpp"

#include "common/error.hpp"
#include "common/fs_util.hpp"
#include "common/scope.hpp"
#include "common/text.hpp"
#include "events/render.hpp"
#include "events/serialize.hpp"
#include "llm/scripted.hpp"

#include <sstream>
#include <thread>

namespace ouro::meta {

namespace {

void say(const MetaOptions& o, const std::string& msg) {
    if (o.log) o.log(msg);
}

std::string read_optional(const fs::path& p) {
    std::error_code ec;
    return fs::is_regular_file(p, ec) ? fsx::read_file(p) : std::string();
}

} // namespace

std::string smoke_check(const fs::path& code_dir, std::chrono::milliseconds limit) {
    try {
        auto cb = runtime::Codebase::load(code_dir);
        auto model = llm::ScriptedGateway::from_policy(
            [](const llm::CompletionRequest&) { return llm::ScriptReply{"ok\n<COMPLETE></COMPLETE>"}; });
        fsx::TempDir work("ouro-smoke");
        tools::Workspace ws(work.path());
        events::EventStore store;
        runtime::Runtime rt(cb, *model, store, ws);
        runtime::Budget b;
        b.wall_clock = limit;
        b.max_completions = 5;
        auto r = rt.run("Reply with the word ok.", b);
        if (r.status != runtime::RunStatus::returned)
            return std::string("smoke prompt ended ") + runtime::to_string(r.status) + ": " + r.value;
        return {};
    } catch (const Error& e) {
        return e.what();
    }
}

bench::Report evaluate_iteration(Archive& archive, int index, const std::vector<bench::BenchmarkTask>& tasks,
                                 llm::Gateway& gateway, const MetaOptions& options) {
    auto rec = archive.record(index);
    auto cb = runtime::Codebase::load(rec.code_ref);
    say(options, "evaluating iteration " + std::to_string(index) + " on " + std::to_string(tasks.size()) + " tasks");
    auto report = bench::run_benchmark(cb, gateway, tasks, options.bench);
    archive.set_evaluation(index, report);
    std::ostringstream u;
    u << "iteration " << index << ": utility " << report.utility << ", score " << report.p_score;
    say(options, u.str());
    return report;
}

MetaOutcome run_meta_improvement(Archive& archive, llm::Gateway& gateway, const MetaOptions& options) {
    MetaOutcome out;
    out.meta_agent = select_meta_agent(archive.records());
    auto parent = archive.record(out.meta_agent);
    say(options, "meta-agent is iteration " + std::to_string(out.meta_agent));

    std::optional<fsx::TempDir> own_scratch;
    fs::path base = options.scratch;
    if (base.empty()) {
        own_scratch.emplace("ouro-meta");
        base = own_scratch->path();
    }
    fs::create_directories(base);
    auto work = base / ("candidate-" + std::to_string(archive.size()));
    std::error_code ec;
    fsx::set_tree_writable(work, true);
    fs::remove_all(work, ec);
    materialize_iteration(archive, out.meta_agent, work);

    auto cb = runtime::Codebase::load(parent.code_ref);
    tools::Workspace ws(work);
    events::EventStore store;
    auto& model = options.meta_gateway ? *options.meta_gateway : gateway;
    runtime::Runtime rt(cb, model, store, ws, options.runtime);
    rt.set_archive(&archive);

    std::optional<oversight::Overseer> overseer;
    std::thread watcher;
    CancelToken stop_watching;
    if (options.judge) {
        overseer.emplace(rt, *options.judge, options.overseer);
        watcher = std::thread([&] { overseer->observe(stop_watching); });
    }
    runtime::AgentResult result;
    if (options.on_run) options.on_run(&store, &rt);
    ScopeExit detach([&] {
        if (options.on_run) options.on_run(nullptr, nullptr);
    });
    try {
        result = rt.run(cb.meta_prompt(), options.meta_budget);
    } catch (...) {
        stop_watching.cancel("meta run failed");
        if (watcher.joinable()) watcher.join();
        throw;
    }
    stop_watching.cancel("meta run finished");
    if (watcher.joinable()) watcher.join();

    out.status = result.status;
    out.answer = result.answer.value_or(result.value);
    auto cleanup = [&] {
        fsx::set_tree_writable(work, true);
        fs::remove_all(work, ec);
    };
    if (result.status != runtime::RunStatus::returned) {
        out.rejected = std::string("meta-agent ") + runtime::to_string(result.status) + ": " + result.value;
        say(options, "rejected: " + out.rejected);
        cleanup();
        return out;
    }
    if (auto why = smoke_check(work); !why.empty()) {
        out.rejected = "candidate failed validation: " + why;
        say(options, "rejected: " + out.rejected);
        cleanup();
        return out;
    }
    if (read_optional(work / "agent_change_log.md") == read_optional(parent.code_ref / "agent_change_log.md"))
        out.warnings.push_back("agent_change_log.md was not updated");
    if (read_optional(work / "description.txt") == read_optional(parent.code_ref / "description.txt"))
        out.warnings.push_back("description.txt was not updated");
    for (auto& w : out.warnings) say(options, "warning: " + w);

    out.produced = archive.append(work, out.meta_agent);
    auto snap = store.snapshot();
    archive.attach(*out.produced, "meta_trace.txt", events::render_trace(snap));
    std::ostringstream log;
    events::write_event_log(log, snap.all_events());
    archive.attach(*out.produced, "meta_events.jsonl", log.str());
    say(options, "recorded iteration " + std::to_string(*out.produced));
    cleanup();
    return out;
}

int run_meta_loop(Archive& archive, const fs::path& initial_code, const std::vector<bench::BenchmarkTask>& tasks,
                  llm::Gateway& gateway, int n, const MetaOptions& options, std::vector<MetaOutcome>* outcomes) {
    if (n < 1) fail(ErrorCode::invalid_argument, "iteration count must be at least 1");
    if (archive.empty()) {
        runtime::Codebase::load(initial_code);
        archive.append(initial_code);
        say(options, "recorded iteration 0 from " + initial_code.string());
    }
    for (int round = 0; round < n; ++round) {
        auto last = static_cast<int>(archive.size()) - 1;
        if (!archive.record(last).evaluated()) evaluate_iteration(archive, last, tasks, gateway, options);
        auto outcome = run_meta_improvement(archive, gateway, options);
        if (outcomes) outcomes->push_back(outcome);
    }
    return static_cast<int>(archive.size()) - 1;
}

} // namespace ouro::meta
