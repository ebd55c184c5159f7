#pragma once

#include "llm/gateway.hpp"

#include <deque>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>

namespace ouro::llm {

struct ScriptReply {
    std::string text;
    // Inferred when absent: the earliest requested stop sequence found in `text`
    // truncates it, otherwise end_of_turn.
    std::optional<protocol::StopReason> stop;
    // Token counts; synthesized from character counts when absent.
    std::optional<Usage> usage;
    std::chrono::milliseconds latency{0};
    bool stall = false;           // block until the deadline or cancellation
    bool transport_error = false; // throw a retryable error
};

using Predicate = std::function<bool(const CompletionRequest&)>;
using Responder = std::function<ScriptReply(const CompletionRequest&)>;

struct ScriptStep {
    std::string label;
    Predicate expect; // may be empty
    Responder respond;
};

ScriptStep reply(std::string text, std::string label = {});
ScriptStep reply(ScriptReply r, std::string label = {});
ScriptStep expect(Predicate p, ScriptReply r, std::string label = {});

Predicate context_contains(std::string needle);
Predicate caller_is(std::string caller);
Predicate model_is(std::string model);
Predicate all_of(std::vector<Predicate> ps);

// Flattened request text, the same bytes used for cache-prefix accounting.
std::string request_text(const CompletionRequest& request);

// Deterministic offline gateway. Each call consumes one step in order; a predicate
// mismatch or an exhausted script throws Error(script) and is remembered in failures().
class ScriptedGateway : public Gateway {
public:
    ScriptedGateway() = default;
    explicit ScriptedGateway(std::vector<ScriptStep> steps);
    // Unlimited script: every call is answered by `policy`.
    static std::shared_ptr<ScriptedGateway> from_policy(Responder policy);
    // JSON script file; see README for the schema.
    static std::shared_ptr<ScriptedGateway> load(const std::filesystem::path& path);

    void push(ScriptStep step);

    CompletionResponse complete(const CompletionRequest& request, const CallOptions& options) override;

    std::size_t calls() const;
    std::size_t remaining() const;
    std::vector<CompletionRequest> requests() const;
    std::vector<std::string> failures() const;

private:
    mutable std::mutex mu_;
    std::deque<ScriptStep> steps_;
    Responder policy_;
    std::size_t calls_ = 0;
    std::vector<CompletionRequest> requests_;
    std::vector<std::string> failures_;
    std::deque<std::string> recent_prompts_;
};

// Pure helpers, exposed for tests.
std::int64_t synth_tokens(std::size_t chars);
std::size_t common_prefix(std::string_view a, std::string_view b);
// Applies stop-sequence semantics to a raw reply text.
std::pair<std::string, protocol::StopReason> apply_stops(std::string text, const std::vector<std::string>& stops);

} // namespace ouro::llm
