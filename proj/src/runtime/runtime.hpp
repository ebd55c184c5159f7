#pragma once

#include "common/cancel.hpp"
#include "common/money.hpp"
#include "events/event_store.hpp"
#include "llm/gateway.hpp"
#include "runtime/codebase.hpp"
#include "tools/toolkit.hpp"

#include <chrono>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace ouro::runtime {

using events::CallId;

// Run-wide limits. Sub-agents share whatever the caller has left of the wall clock
// and the dollar budget; the completion cap applies to each call separately.
struct Budget {
    std::chrono::milliseconds wall_clock{300'000};
    Money dollars = Money::from_cents(1000);
    int max_completions = 100;

    // Throws Error(invalid_argument) unless every limit is positive.
    void validate() const;
};

enum class RunStatus { returned, cancelled, timed_out, budget_exhausted };
const char* to_string(RunStatus s);

struct AgentResult {
    RunStatus status = RunStatus::returned;
    std::string value; // answer, returned result, or the reason the call stopped
    events::UsageTotals usage;
    std::optional<std::string> answer; // set when submit_answer ended the call
    CallId call_id;
};

struct RuntimeOptions {
    int max_depth = 5; // the root call is depth 1
    std::chrono::milliseconds command_timeout{120'000};
    llm::RetryPolicy retry;
    int max_tokens = 4096;
};

// Executes agents from a codebase against a gateway, recording everything in `store`.
// notify() and cancel() may be called from other threads while run() is active.
class Runtime {
public:
    Runtime(const Codebase& codebase, llm::Gateway& gateway, events::EventStore& store, tools::Workspace& workspace,
            RuntimeOptions options = {});
    Runtime(const Runtime&) = delete;
    Runtime& operator=(const Runtime&) = delete;

    void set_archive(const tools::ArchiveSource* archive) { archive_ = archive; }

    // Runs the entry agent on `problem`. Returns when the root call is terminal.
    AgentResult run(const std::string& problem, const Budget& budget);
    // Same, starting from any agent in the codebase; `problem` fills every core slot.
    AgentResult run_agent(const std::string& agent_name, const std::string& problem, const Budget& budget);

    // Records an overseer_notification on a running call and queues it for its next
    // completion. Throws Error(conflict) when the call is terminal.
    void notify(const CallId& id, const std::string& message, const std::string& source = "overseer");
    // Closes the call and its running descendants as cancelled and tells the parent why.
    // Throws Error(conflict) when the call is already terminal.
    void cancel(const CallId& id, const std::string& reason, const std::string& source = "overseer");

    events::EventStore& store() { return store_; }
    const Codebase& codebase() const { return codebase_; }

private:
    struct Control {
        CancelToken cancel;
        std::deque<std::string> inbox;
        std::string cancel_source; // guarded by mu_
    };
    struct RunState {
        std::string initial_request;
        Deadline deadline;
        std::chrono::milliseconds wall_clock{0};
        Money dollar_limit;
        Money spent;
        int max_completions = 0;
    };

    AgentResult start(const std::string& agent_name, const std::string& problem, const Budget& budget);
    AgentResult execute(const AgentDefinition& def, const CallId& id, int depth,
                        const std::map<std::string, std::string>& slots, RunState& run);
    std::shared_ptr<Control> control(const CallId& id);
    std::deque<std::string> drain_inbox(const CallId& id);
    AgentResult finish(const CallId& id, RunStatus status, std::string value, std::optional<std::string> answer = {});

    const Codebase& codebase_;
    llm::Gateway& gateway_;
    events::EventStore& store_;
    tools::Workspace& workspace_;
    RuntimeOptions options_;
    const tools::ArchiveSource* archive_ = nullptr;

    std::mutex mu_;
    std::map<CallId, std::shared_ptr<Control>> controls_;
};

} // namespace ouro::runtime
