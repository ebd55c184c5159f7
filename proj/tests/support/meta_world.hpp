#pragma once

#include "bench/task.hpp"
#include "llm/scripted.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace ouro::testing {

// A scripted model that plays both sides of the meta-loop.
//
// Benchmark runs (file-edit tasks): the main agent calls smart_edit with the diff from
// the statement when its tool list offers it, otherwise it submits without editing.
//
// Meta runs: the k-th meta run follows plan[k] (the last entry repeats):
//   "v1" / "v2"     install that smart_edit fixture and list it for main
//   "none"          return without touching anything
//   "no_changelog"  install v2 but leave agent_change_log.md alone
//   "break"         corrupt agent.json
//   "stall"         the meta-agent's model never answers
// Main hands the work to software_developer, which runs one shell command.
std::shared_ptr<llm::ScriptedGateway> meta_world_gateway(std::vector<std::string> plan);

std::filesystem::path smart_edit_fixture(const std::string& version);

// File-edit tasks from the bundled fixture repository whose diffs have at least two
// hunks, so that a first-hunk-only patcher is measurably worse than a complete one.
std::vector<bench::BenchmarkTask> multi_hunk_edit_tasks(const std::filesystem::path& scratch, std::size_t count);

} // namespace ouro::testing
