#pragma once

#include "common/cancel.hpp"

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>

namespace ouro::tools {

inline constexpr std::size_t kOutputCap = 64 * 1024;

struct CommandOptions {
    std::filesystem::path cwd;
    std::chrono::milliseconds timeout{120'000};
    Deadline deadline; // an outer deadline, e.g. the agent's budget
    std::optional<CancelToken> cancel;
    std::string stdin_data;
    std::size_t output_cap = kOutputCap;
};

struct CommandResult {
    int exit_code = -1; // -1 when killed or not started
    std::string output; // stdout and stderr interleaved, capped
    bool timed_out = false;
    bool cancelled = false;
    bool truncated = false;
    std::size_t total_bytes = 0;
    std::chrono::milliseconds elapsed{0};
};

// Runs `sh -c command` in its own process group. On timeout, deadline or
// cancellation the whole group is killed. Throws Error(io) if the process cannot
// be spawned.
CommandResult run_command(const std::string& command, const CommandOptions& options);

} // namespace ouro::tools
