#pragma once

#include "llm/gateway.hpp"

namespace ouro::llm {

struct HttpModelConfig {
    std::string endpoint;  // e.g. https://api.openai.com/v1
    std::string model;     // provider-side model name
    std::string auth_env;  // environment variable holding the API key; empty for none
    std::chrono::seconds connect_timeout{10};
};

// OpenAI-compatible /chat/completions client. The API key is read from the
// environment on every call and never stored.
class HttpGateway : public Gateway {
public:
    explicit HttpGateway(HttpModelConfig config);
    CompletionResponse complete(const CompletionRequest& request, const CallOptions& options) override;

    // Exposed for tests: request body and response decoding.
    std::string request_body(const CompletionRequest& request) const;
    static CompletionResponse decode_response(const std::string& body, const std::vector<std::string>& stops);

private:
    HttpModelConfig config_;
    std::string origin_;    // scheme://host[:port]
    std::string base_path_; // path prefix without trailing slash
};

} // namespace ouro::llm
