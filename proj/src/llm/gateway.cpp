#include "llm/gateway.hpp"

#include "common/error.hpp"

#include <thread>

namespace ouro::llm {

void PriceTable::set(const std::string& model, PriceRow row) {
    if (row.prompt < TokenRate() || row.completion < TokenRate() || row.cached < TokenRate())
        fail(ErrorCode::config, "negative price for model " + model);
    if (row.cached > row.prompt) fail(ErrorCode::config, "cached rate exceeds prompt rate for model " + model);
    rows_[model] = row;
}

const PriceRow* PriceTable::find(const std::string& model) const {
    auto it = rows_.find(model);
    return it == rows_.end() ? nullptr : &it->second;
}

Money account_usage(const Usage& usage, const PriceRow& row) {
    usage.validate();
    return row.prompt.cost(usage.prompt_tokens - usage.cached_tokens) + row.cached.cost(usage.cached_tokens) +
           row.completion.cost(usage.completion_tokens);
}

Money account_usage(const Usage& usage, const PriceTable& prices, const std::string& model) {
    const PriceRow* row = prices.find(model);
    if (!row) fail(ErrorCode::config, "no price row for model '" + model + "'");
    return account_usage(usage, *row);
}

void interruptible_sleep(std::chrono::milliseconds d, const CallOptions& options) {
    auto until = SteadyClock::now() + d;
    bool deadline_first = options.deadline && *options.deadline < until;
    if (options.cancel.wait_until(deadline_first ? options.deadline : Deadline(until)))
        fail(ErrorCode::cancelled, options.cancel.reason());
    if (deadline_first) fail(ErrorCode::timeout, "deadline reached");
}

CompletionResponse complete_with_retry(Gateway& gateway, const CompletionRequest& request,
                                       const CallOptions& options, const RetryPolicy& policy) {
    auto backoff = policy.initial_backoff;
    for (int attempt = 1;; ++attempt) {
        try {
            return gateway.complete(request, options);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::transport || attempt >= policy.attempts) throw;
        }
        interruptible_sleep(backoff, options);
        backoff = std::chrono::milliseconds(static_cast<long>(static_cast<double>(backoff.count()) * policy.multiplier));
    }
}

void GatewayRouter::route(const std::string& model, std::shared_ptr<Gateway> gateway, PriceRow price) {
    prices_.set(model, price);
    routes_[model] = std::move(gateway);
}

std::vector<std::string> GatewayRouter::models() const {
    std::vector<std::string> out;
    for (auto& [k, _] : routes_) out.push_back(k);
    return out;
}

CompletionResponse GatewayRouter::complete(const CompletionRequest& request, const CallOptions& options) {
    auto it = routes_.find(request.model);
    if (it == routes_.end()) fail(ErrorCode::config, "unknown model id '" + request.model + "'");
    auto resp = it->second->complete(request, options);
    resp.usage.cost = account_usage(resp.usage, prices_, request.model);
    return resp;
}

} // namespace ouro::llm
