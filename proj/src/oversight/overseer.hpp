#pragma once

#include "common/cancel.hpp"
#include "events/render.hpp"
#include "llm/gateway.hpp"
#include "runtime/runtime.hpp"

#include <chrono>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace ouro::oversight {

using events::CallId;
using WallClock = std::chrono::system_clock;

enum class CheckType { time, events };

struct Judgement {
    bool making_progress = true;
    bool is_looping = false;
    std::optional<CallId> currently_running_agent;
    std::optional<std::string> needs_notification_reasoning;
    bool needs_notification = false;
    std::optional<CallId> agent_to_notify;
    std::optional<std::string> notification_content;
    bool force_cancel_agent = false;
    std::optional<CallId> force_cancel_agent_id;
    CheckType next_check_type = CheckType::time;
    double next_check_delay = 30; // seconds, or a number of new events
    std::optional<std::string> notes_for_next_iteration;
};

// Extracts the first judgement block. Accepts both `</OVERSEER_JUDGEMENT>` and a
// repeated opening tag as the terminator. Throws Error(parse) when the block or a
// required field (the two progress flags and the next-check pair) is missing, when a
// flag is not true/false, or when a requested intervention lacks its target.
Judgement parse_judgement(std::string_view text);

struct OverseerState {
    std::string previous_notes;
    std::optional<WallClock::time_point> last_check_time;
    std::map<CallId, int> notified; // overseer notifications delivered per call
};

// "2026-10-15 09:30:00 UTC"
std::string format_timestamp(WallClock::time_point t);

// Fills the overseer template. Empty notes become "No notes."; a first check shows "N/A".
std::string build_overseer_prompt(const std::string& tmpl, const std::string& examples, const std::string& tree_text,
                                  const OverseerState& state, WallClock::time_point now);

struct Intervention {
    enum class Kind { notified, cancelled, downgraded, dropped };
    Kind kind;
    CallId target;
    std::string text;
};
const char* to_string(Intervention::Kind k);

// Applies a judgement through the runtime's notify/cancel entry points. A cancellation
// is only issued for a call the overseer has notified before; otherwise the call gets a
// warning instead. Interventions aimed at terminal calls are dropped and noted.
std::vector<Intervention> apply_judgement(const Judgement& j, runtime::Runtime& rt, OverseerState& state);

struct OverseerPolicy {
    std::string model = "overseer";
    std::chrono::milliseconds initial_delay{30'000};
    std::chrono::milliseconds min_delay{5'000};
    std::chrono::milliseconds max_delay{300'000};
    // Multiplies every wait; tests use small values to compress the schedule.
    double time_scale = 1.0;
    std::size_t truncation = events::kDefaultTruncation;
    int max_tokens = 2048;
    std::function<WallClock::time_point()> clock; // defaults to the system clock
};

// The asynchronous monitor. observe() blocks until the root call is terminal or `stop`
// fires; it is meant to run on its own thread next to Runtime::run().
class Overseer {
public:
    Overseer(runtime::Runtime& rt, llm::Gateway& judge, OverseerPolicy policy = {});

    void observe(const CancelToken& stop = {});

    OverseerState state() const;
    std::vector<Intervention> interventions() const;
    std::size_t checks() const;
    std::vector<std::string> log() const;
    events::Usage usage() const;

private:
    // Returns false when the loop should end.
    bool wait(CheckType type, double amount, const CancelToken& stop);
    bool root_done() const;
    std::chrono::milliseconds scaled(std::chrono::milliseconds d) const;
    void note(std::string line);

    runtime::Runtime& rt_;
    llm::Gateway& judge_;
    OverseerPolicy policy_;

    mutable std::mutex mu_;
    OverseerState state_;
    std::vector<Intervention> interventions_;
    std::size_t checks_ = 0;
    std::vector<std::string> log_;
    events::Usage usage_;
};

} // namespace ouro::oversight
