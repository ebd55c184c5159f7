#pragma once

#include "bench/harness.hpp"
#include "meta/archive.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ouro::meta {

struct MetaOptions {
    // Settings for evaluating each iteration.
    bench::BenchOptions bench;
    // Limits for one meta-agent run.
    runtime::Budget meta_budget{std::chrono::minutes(30), Money::from_cents(2000), 200};
    runtime::RuntimeOptions runtime;
    // Serves the meta-agent's model calls; the task gateway is used when null.
    llm::Gateway* meta_gateway = nullptr;
    // When set, an overseer watches each meta-agent run.
    llm::Gateway* judge = nullptr;
    oversight::OverseerPolicy overseer;
    // Parent for meta-agent working copies; the system temp dir when empty.
    fs::path scratch;
    std::function<void(const std::string&)> log;
    // Called with the meta-agent's store and runtime before it runs, and with nulls after.
    std::function<void(events::EventStore*, runtime::Runtime*)> on_run;
};

struct MetaOutcome {
    int meta_agent = 0;                // iteration that ran as the meta-agent
    std::optional<int> produced;       // new iteration, empty when rejected
    runtime::RunStatus status = runtime::RunStatus::returned;
    std::string answer;                // the meta-agent's closing summary
    std::string rejected;              // why no iteration was recorded
    std::vector<std::string> warnings; // soft validation findings
};

// Benchmarks one archived iteration and stores its report. Errors propagate.
bench::Report evaluate_iteration(Archive& archive, int index, const std::vector<bench::BenchmarkTask>& tasks,
                                 llm::Gateway& gateway, const MetaOptions& options);

// Selects the best evaluated iteration, runs it on a writable copy of its own code with
// the meta-improvement instruction and the archive tools attached, validates the edited
// copy and appends it unevaluated. A cancelled, timed-out or over-budget meta-agent, or a
// copy that no longer loads or fails the smoke prompt, is rejected and the archive is
// left unchanged.
MetaOutcome run_meta_improvement(Archive& archive, llm::Gateway& gateway, const MetaOptions& options);

// Seeds the archive with `initial_code` as iteration 0 when empty, then runs `n` rounds of
// evaluate-the-latest, select, improve. Resumes from whatever the archive holds: an
// unevaluated last record is evaluated first. Returns the last iteration's index, which
// is left unevaluated. `outcomes` collects one entry per round.
int run_meta_loop(Archive& archive, const fs::path& initial_code, const std::vector<bench::BenchmarkTask>& tasks,
                  llm::Gateway& gateway, int n, const MetaOptions& options = {},
                  std::vector<MetaOutcome>* outcomes = nullptr);

// Checks that a codebase loads and that its entry agent answers a trivial prompt under a
// canned model. Returns an empty string on success, otherwise the reason.
std::string smoke_check(const fs::path& code_dir, std::chrono::milliseconds limit = std::chrono::seconds(20));

} // namespace ouro::meta
