#pragma once

#include "llm/gateway.hpp"
#include "llm/http_gateway.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <string>

namespace ouro::llm {

// {
//   "models": {
//     "agent":     {"provider": "openai", "endpoint": "https://api.openai.com/v1", "model": "gpt-4o",
//                   "auth_env": "OPENAI_API_KEY",
//                   "price": {"prompt": "2.50", "completion": "10", "cached": "1.25"}},
//     "reasoning": {"provider": "scripted", "script": "scripts/reasoning.json", "price": {...}}
//   },
//   "overseer_model": "agent"
// }
// Prices are dollars per million tokens. Relative script paths resolve against the
// config file's directory.
struct ModelConfig {
    std::string id;
    std::string provider; // "openai" (any OpenAI-compatible endpoint) or "scripted"
    HttpModelConfig http;
    std::filesystem::path script;
    PriceRow price;
};

struct GatewayConfig {
    std::map<std::string, ModelConfig> models;
    std::string overseer_model;

    // Throws Error(config) with the offending path or key in the message.
    static GatewayConfig load(const std::filesystem::path& path);
    static GatewayConfig parse(const std::string& text, const std::filesystem::path& base_dir);

    // Scripted models that name the same script file share one gateway instance,
    // so a single ordered script can drive several logical models.
    std::shared_ptr<GatewayRouter> build() const;
};

} // namespace ouro::llm
