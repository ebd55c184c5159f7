#include "bench/harness.hpp"

#include "common/error.hpp"
#include "common/fs_util.hpp"
#include "common/scope.hpp"
#include "events/render.hpp"
#include "events/serialize.hpp"

#include <atomic>
#include <fstream>
#include <mutex>
#include <thread>

namespace ouro::bench {

namespace {

std::string file_stem(const std::string& id) {
    std::string out;
    for (char c : id) out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' ? c : '_';
    return out;
}

void write_trace(const fs::path& dir, const BenchmarkTask& task, const events::EventStore& store) {
    auto base = dir / file_stem(task.benchmark_id);
    fs::create_directories(base);
    auto snap = store.snapshot();
    fsx::write_file(base / (file_stem(task.problem_id) + ".trace.txt"), events::render_trace(snap));
    std::ofstream log(base / (file_stem(task.problem_id) + ".events.jsonl"));
    events::write_event_log(log, snap.all_events());
}

} // namespace

ProblemResult run_task(const runtime::Codebase& codebase, llm::Gateway& gateway, const BenchmarkTask& task,
                       const BenchOptions& options, std::uint64_t id_seed) {
    ProblemResult res;
    res.benchmark_id = task.benchmark_id;
    res.problem_id = task.problem_id;

    fsx::TempDir work("ouro-task");
    seed_workspace(task, work.path());
    tools::Workspace ws(work.path());
    events::EventStore store(id_seed);
    runtime::Runtime rt(codebase, gateway, store, ws, options.runtime);
    rt.set_archive(options.archive);

    runtime::Budget budget;
    budget.wall_clock = options.limits.time;
    budget.dollars = options.limits.cost_cap;
    budget.max_completions = options.limits.max_completions;

    std::optional<oversight::Overseer> overseer;
    std::thread watcher;
    CancelToken stop_watching;
    if (options.judge) {
        overseer.emplace(rt, *options.judge, options.overseer);
        watcher = std::thread([&] { overseer->observe(stop_watching); });
    }

    if (options.on_run) options.on_run(&store, &rt);
    ScopeExit detach([&] {
        if (options.on_run) options.on_run(nullptr, nullptr);
    });
    auto t0 = SteadyClock::now();
    std::optional<std::string> answer;
    try {
        auto r = rt.run(task.statement, budget);
        res.status = runtime::to_string(r.status);
        answer = r.answer;
        if (!answer && r.status == runtime::RunStatus::returned) answer = r.value;
        res.metrics.timed_out = r.status == runtime::RunStatus::timed_out;
    } catch (const Error& e) {
        res.status = "error";
        res.error = e.what();
    }
    auto elapsed = std::chrono::duration<double>(SteadyClock::now() - t0).count();
    stop_watching.cancel("task finished");
    if (watcher.joinable()) watcher.join();

    auto totals = store.snapshot().totals();
    res.answer = answer.value_or("");
    res.metrics.cost = totals.cost;
    res.metrics.time = elapsed;
    res.metrics.tokens = totals.tokens;
    res.metrics.cached_fraction = totals.cached_fraction();
    res.metrics.score = res.status == "error" ? 0.0 : score_task(task, answer, work.path());
    double u = base_utility(res.metrics.score, res.metrics.cost.to_double(), res.metrics.time, options.weights);
    res.utility = final_utility(u, res.metrics.timed_out, options.weights.tau);
    if (options.trace_dir) write_trace(*options.trace_dir, task, store);
    return res;
}

Report run_benchmark(const runtime::Codebase& codebase, llm::Gateway& gateway, const std::vector<BenchmarkTask>& tasks,
                     const BenchOptions& options) {
    if (tasks.empty()) fail(ErrorCode::invalid_argument, "no benchmark tasks");
    options.weights.validate();
    for (auto& t : tasks) {
        std::error_code ec;
        if (t.seed_dir && !fs::is_directory(*t.seed_dir, ec))
            fail(ErrorCode::not_found, "workspace seed missing for " + t.problem_id + ": " + t.seed_dir->string());
    }

    std::vector<ProblemResult> results(tasks.size());
    std::atomic<std::size_t> next{0};
    std::mutex cb_mu;
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < tasks.size();) {
            try {
                results[i] = run_task(codebase, gateway, tasks[i], options, i + 1);
            } catch (const std::exception& e) {
                results[i] = {tasks[i].benchmark_id, tasks[i].problem_id, {}, 0.0, "", "error", e.what()};
            }
            if (options.on_result) {
                std::lock_guard lock(cb_mu);
                options.on_result(results[i]);
            }
        }
    };
    auto n = std::max<std::size_t>(1, std::min(options.workers, tasks.size()));
    std::vector<std::thread> pool;
    for (std::size_t k = 1; k < n; ++k) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return Report::summarize(std::move(results));
}

} // namespace ouro::bench
