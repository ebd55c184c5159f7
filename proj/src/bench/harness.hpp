#pragma once

#include "bench/report.hpp"
#include "bench/task.hpp"
#include "bench/utility.hpp"
#include "llm/gateway.hpp"
#include "oversight/overseer.hpp"
#include "runtime/codebase.hpp"
#include "runtime/runtime.hpp"
#include "tools/archive_query.hpp"

#include <chrono>
#include <functional>
#include <optional>
#include <vector>

namespace ouro::bench {

struct BenchLimits {
    std::chrono::milliseconds time{300'000};
    Money cost_cap = Money::from_cents(1000);
    int max_completions = 100;
};

struct BenchOptions {
    BenchLimits limits;
    UtilityWeights weights;
    runtime::RuntimeOptions runtime;
    std::size_t workers = 1;
    const tools::ArchiveSource* archive = nullptr;
    // When set, an overseer watches each task.
    llm::Gateway* judge = nullptr;
    oversight::OverseerPolicy overseer;
    // When set, each task's trace and event log land in <trace_dir>/<benchmark>/<problem>.*
    std::optional<fs::path> trace_dir;
    // Called after each task finishes, from the worker that ran it.
    std::function<void(const ProblemResult&)> on_result;
    // Called with a task's store and runtime before it runs, and with nulls once it ends.
    std::function<void(events::EventStore*, runtime::Runtime*)> on_run;
};

// Runs every task in a fresh workspace seeded from the task, under the time and cost
// limits, scores it, and summarizes. Task failures become rows with status "error";
// a missing workspace seed throws Error(not_found) before anything runs.
Report run_benchmark(const runtime::Codebase& codebase, llm::Gateway& gateway, const std::vector<BenchmarkTask>& tasks,
                     const BenchOptions& options = {});

// One task, exposed for tests and the CLI.
ProblemResult run_task(const runtime::Codebase& codebase, llm::Gateway& gateway, const BenchmarkTask& task,
                       const BenchOptions& options, std::uint64_t id_seed = 0);

} // namespace ouro::bench
