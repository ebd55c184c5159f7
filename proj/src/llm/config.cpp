#include "llm/config.hpp"

#include "common/error.hpp"
#include "common/fs_util.hpp"
#include "llm/scripted.hpp"

#include "json.hpp"

namespace ouro::llm {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

TokenRate rate(const json& price, const char* key, const std::string& model) {
    if (!price.contains(key)) return TokenRate();
    auto& v = price[key];
    try {
        if (v.is_string()) return TokenRate::per_million(v.get<std::string>());
        if (v.is_number_integer()) return TokenRate::per_million(std::to_string(v.get<long long>()));
    } catch (const Error& e) {
        fail(ErrorCode::config, "model '" + model + "': bad price." + key + ": " + e.what());
    }
    fail(ErrorCode::config, "model '" + model + "': price." + key + " must be a decimal string such as \"3.00\"");
}

} // namespace

GatewayConfig GatewayConfig::load(const fs::path& path) {
    if (!fs::is_regular_file(path)) fail(ErrorCode::config, "gateway config not found: " + path.string());
    try {
        return parse(fsx::read_file(path), path.parent_path());
    } catch (const Error& e) {
        fail(ErrorCode::config, path.string() + ": " + e.what());
    }
}

GatewayConfig GatewayConfig::parse(const std::string& text, const fs::path& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorCode::config, std::string("invalid JSON: ") + e.what());
    }
    GatewayConfig cfg;
    if (!j.contains("models") || !j["models"].is_object() || j["models"].empty())
        fail(ErrorCode::config, "\"models\" must be a non-empty object");
    for (auto& [id, m] : j["models"].items()) {
        ModelConfig mc;
        mc.id = id;
        mc.provider = m.value("provider", "");
        if (mc.provider == "openai") {
            mc.http.endpoint = m.value("endpoint", "");
            mc.http.model = m.value("model", "");
            mc.http.auth_env = m.value("auth_env", "");
            if (mc.http.endpoint.empty() || mc.http.model.empty())
                fail(ErrorCode::config, "model '" + id + "': openai provider needs \"endpoint\" and \"model\"");
        } else if (mc.provider == "scripted") {
            if (!m.contains("script")) fail(ErrorCode::config, "model '" + id + "': scripted provider needs \"script\"");
            fs::path p = m["script"].get<std::string>();
            mc.script = p.is_absolute() ? p : base_dir / p;
        } else {
            fail(ErrorCode::config, "model '" + id + "': unknown provider '" + mc.provider + "'");
        }
        auto price = m.value("price", json::object());
        mc.price = {rate(price, "prompt", id), rate(price, "completion", id), rate(price, "cached", id)};
        if (mc.price.cached > mc.price.prompt)
            fail(ErrorCode::config, "model '" + id + "': cached rate exceeds prompt rate");
        cfg.models.emplace(id, std::move(mc));
    }
    cfg.overseer_model = j.value("overseer_model", cfg.models.begin()->first);
    if (!cfg.models.count(cfg.overseer_model))
        fail(ErrorCode::config, "overseer_model '" + cfg.overseer_model + "' is not a configured model");
    return cfg;
}

std::shared_ptr<GatewayRouter> GatewayConfig::build() const {
    auto router = std::make_shared<GatewayRouter>();
    std::map<fs::path, std::shared_ptr<Gateway>> scripts;
    for (auto& [id, m] : models) {
        std::shared_ptr<Gateway> g;
        if (m.provider == "scripted") {
            auto key = fs::weakly_canonical(m.script);
            auto it = scripts.find(key);
            if (it == scripts.end()) {
                if (!fs::is_regular_file(m.script))
                    fail(ErrorCode::config, "model '" + id + "': script not found: " + m.script.string());
                it = scripts.emplace(key, ScriptedGateway::load(m.script)).first;
            }
            g = it->second;
        } else {
            g = std::make_shared<HttpGateway>(m.http);
        }
        router->route(id, g, m.price);
    }
    return router;
}

} // namespace ouro::llm
