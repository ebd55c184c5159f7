#pragma once

#include "common/cancel.hpp"
#include "common/money.hpp"
#include "context/context.hpp"
#include "events/event.hpp"
#include "protocol/protocol.hpp"

#include <chrono>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace ouro::llm {

using context::ChatMessage;
using events::Usage;

struct CompletionRequest {
    std::string model; // logical model id from the gateway config
    std::vector<ChatMessage> messages;
    std::vector<std::string> stop;
    int max_tokens = 4096;
    std::string caller; // agent name or "overseer"; informational
};

struct CompletionResponse {
    std::string text; // stop sequence excluded
    protocol::StopReason stop;
    Usage usage;
};

// Per-call controls: an absolute deadline and a cancellation token. Gateways throw
// Error(timeout) / Error(cancelled) when either fires mid-call.
struct CallOptions {
    Deadline deadline;
    CancelToken cancel;
};

class Gateway {
public:
    virtual ~Gateway() = default;
    // Throws Error(transport) for retryable failures, Error(config) for bad model ids.
    virtual CompletionResponse complete(const CompletionRequest& request, const CallOptions& options) = 0;
};

struct PriceRow {
    TokenRate prompt;
    TokenRate completion;
    TokenRate cached;
};

class PriceTable {
public:
    // Throws Error(config) if cached > prompt rate.
    void set(const std::string& model, PriceRow row);
    const PriceRow* find(const std::string& model) const;
    bool empty() const { return rows_.empty(); }

private:
    std::map<std::string, PriceRow> rows_;
};

// Uncached prompt tokens at the prompt rate, cached tokens at the cached rate,
// completion tokens at the completion rate. Throws Error(config) for an unknown model.
Money account_usage(const Usage& usage, const PriceTable& prices, const std::string& model);
Money account_usage(const Usage& usage, const PriceRow& row);

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds initial_backoff{200};
    double multiplier = 2.0;
};

// Retries only Error(transport); backoff sleeps honour the deadline and cancellation.
CompletionResponse complete_with_retry(Gateway& gateway, const CompletionRequest& request,
                                       const CallOptions& options, const RetryPolicy& policy = {});

// Sleeps for `d` unless cancelled or past the deadline, in which case it throws.
void interruptible_sleep(std::chrono::milliseconds d, const CallOptions& options);

// Dispatches on request.model and stamps cost from the price table.
class GatewayRouter : public Gateway {
public:
    void route(const std::string& model, std::shared_ptr<Gateway> gateway, PriceRow price);
    bool has(const std::string& model) const { return routes_.count(model) > 0; }
    std::vector<std::string> models() const;
    const PriceTable& prices() const { return prices_; }

    CompletionResponse complete(const CompletionRequest& request, const CallOptions& options) override;

private:
    std::map<std::string, std::shared_ptr<Gateway>> routes_;
    PriceTable prices_;
};

} // namespace ouro::llm
