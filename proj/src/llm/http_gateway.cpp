#include "llm/http_gateway.hpp"

#include "common/error.hpp"

#include "httplib.h"
#include "json.hpp"

#include <cstdlib>
#include <future>
#include <thread>

namespace ouro::llm {

namespace {

using json = nlohmann::json;

// Many servers do not say which stop sequence fired. If generation stopped on
// "stop" and a call block is open without its closing tag, the closing tag is the one.
protocol::StopReason infer_stop(const std::string& text, const std::string& finish,
                                const std::vector<std::string>& stops) {
    if (finish == "length") return protocol::StopReason::length();
    if (finish != "stop") return protocol::StopReason::end_of_turn();
    std::size_t best_open = std::string::npos;
    std::string best;
    for (auto& s : stops) {
        if (s.size() < 3 || s.compare(0, 2, "</") != 0) continue;
        std::string open = "<" + s.substr(2);
        auto at = text.rfind(open);
        if (at == std::string::npos) continue;
        if (text.find(s, at) != std::string::npos) continue;
        if (best_open == std::string::npos || at > best_open) best_open = at, best = s;
    }
    if (!best.empty()) return protocol::StopReason::stop(best);
    return protocol::StopReason::end_of_turn();
}

} // namespace

HttpGateway::HttpGateway(HttpModelConfig config) : config_(std::move(config)) {
    const auto& ep = config_.endpoint;
    auto scheme_end = ep.find("://");
    if (scheme_end == std::string::npos) fail(ErrorCode::config, "endpoint must start with http:// or https://: " + ep);
    auto path_start = ep.find('/', scheme_end + 3);
    origin_ = ep.substr(0, path_start);
    base_path_ = path_start == std::string::npos ? "" : ep.substr(path_start);
    while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
}

std::string HttpGateway::request_body(const CompletionRequest& request) const {
    json j;
    j["model"] = config_.model;
    j["messages"] = json::array();
    for (auto& m : request.messages) j["messages"].push_back({{"role", m.role}, {"content", m.content}});
    if (!request.stop.empty()) j["stop"] = request.stop;
    j["max_tokens"] = request.max_tokens;
    return j.dump();
}

CompletionResponse HttpGateway::decode_response(const std::string& body, const std::vector<std::string>& stops) {
    CompletionResponse out;
    try {
        auto j = json::parse(body);
        auto& choice = j.at("choices").at(0);
        auto& content = choice.at("message").at("content");
        out.text = content.is_null() ? "" : content.get<std::string>();
        auto finish = choice.value("finish_reason", std::string("stop"));
        // vLLM and friends report the matched string directly.
        if (choice.contains("stop_reason") && choice["stop_reason"].is_string()) {
            auto s = choice["stop_reason"].get<std::string>();
            if (std::find(stops.begin(), stops.end(), s) != stops.end()) out.stop = protocol::StopReason::stop(s);
            else out.stop = infer_stop(out.text, finish, stops);
        } else {
            out.stop = infer_stop(out.text, finish, stops);
        }
        if (j.contains("usage")) {
            auto& u = j["usage"];
            out.usage.prompt_tokens = u.value("prompt_tokens", std::int64_t{0});
            out.usage.completion_tokens = u.value("completion_tokens", std::int64_t{0});
            if (u.contains("prompt_tokens_details") && u["prompt_tokens_details"].is_object())
                out.usage.cached_tokens = u["prompt_tokens_details"].value("cached_tokens", std::int64_t{0});
            out.usage.cached_tokens = std::min(out.usage.cached_tokens, out.usage.prompt_tokens);
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::transport, std::string("malformed completion response: ") + e.what());
    }
    return out;
}

CompletionResponse HttpGateway::complete(const CompletionRequest& request, const CallOptions& options) {
    httplib::Headers headers;
    if (!config_.auth_env.empty()) {
        const char* key = std::getenv(config_.auth_env.c_str());
        if (!key || !*key) fail(ErrorCode::config, "environment variable " + config_.auth_env + " is not set");
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    httplib::Client client(origin_);
    client.set_connection_timeout(config_.connect_timeout);
    if (options.deadline) {
        auto left = std::chrono::duration_cast<std::chrono::seconds>(*options.deadline - SteadyClock::now());
        client.set_read_timeout(std::max<std::chrono::seconds>(left, std::chrono::seconds(1)));
    } else {
        client.set_read_timeout(std::chrono::seconds(600));
    }

    auto body = request_body(request);
    auto path = base_path_ + "/chat/completions";
    // The request runs on a worker so cancellation can abort it by closing the socket.
    auto fut = std::async(std::launch::async, [&] { return client.Post(path, headers, body, "application/json"); });
    for (;;) {
        if (fut.wait_for(std::chrono::milliseconds(50)) == std::future_status::ready) break;
        if (options.cancel.cancelled() || expired(options.deadline)) {
            client.stop();
            fut.wait();
            if (options.cancel.cancelled()) fail(ErrorCode::cancelled, options.cancel.reason());
            fail(ErrorCode::timeout, "model call exceeded its deadline");
        }
    }
    auto res = fut.get();
    if (!res) fail(ErrorCode::transport, "request to " + origin_ + path + " failed: " + httplib::to_string(res.error()));
    if (res->status == 429 || res->status >= 500)
        fail(ErrorCode::transport, "endpoint returned HTTP " + std::to_string(res->status));
    if (res->status != 200)
        fail(ErrorCode::config, "endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 500));
    auto out = decode_response(res->body, request.stop);
    // Some servers echo the stop string; strip it so callers see a uniform contract.
    if (out.stop.kind == protocol::StopKind::stop_sequence) {
        auto& s = out.stop.sequence;
        if (out.text.size() >= s.size() && out.text.compare(out.text.size() - s.size(), s.size(), s) == 0)
            out.text.resize(out.text.size() - s.size());
    }
    return out;
}

} // namespace ouro::llm
