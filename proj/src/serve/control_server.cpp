#include "serve/control_server.hpp"

#include "common/error.hpp"
#include "events/serialize.hpp"

#include "httplib.h"

namespace ouro::serve {

using json = nlohmann::ordered_json;

namespace {

void send(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& msg) { send(res, status, {{"error", msg}}); }

int http_status(ErrorCode c) {
    switch (c) {
    case ErrorCode::not_found: return 404;
    case ErrorCode::conflict: return 409;
    case ErrorCode::invalid_argument:
    case ErrorCode::parse: return 400;
    default: return 500;
    }
}

std::optional<json> body_json(const httplib::Request& req, httplib::Response& res) {
    try {
        auto j = json::parse(req.body);
        if (!j.is_object()) throw json::type_error::create(302, "body must be a JSON object", nullptr);
        return j;
    } catch (const json::exception& e) {
        send_error(res, 400, std::string("invalid JSON body: ") + e.what());
        return std::nullopt;
    }
}

std::optional<std::string> string_field(const json& j, const char* name, httplib::Response& res, bool required = true) {
    auto it = j.find(name);
    if (it == j.end() || it->is_null()) {
        if (required) send_error(res, 400, std::string("missing field: ") + name);
        return required ? std::nullopt : std::optional<std::string>("");
    }
    if (!it->is_string()) {
        send_error(res, 400, std::string("field must be a string: ") + name);
        return std::nullopt;
    }
    return it->get<std::string>();
}

} // namespace

ControlServer::ControlServer(ServeOptions options)
    : options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
    // Without SO_REUSEPORT, so a second server on a taken port fails to bind.
    server_->set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    routes();
}

ControlServer::~ControlServer() { stop(); }

void ControlServer::set_run(events::EventStore* store, runtime::Runtime* runtime) {
    std::unique_lock lock(mu_);
    store_ = store;
    runtime_ = runtime;
}

void ControlServer::set_archive(const meta::Archive* archive) {
    std::unique_lock lock(mu_);
    archive_ = archive;
}

void ControlServer::routes() {
    server_->Get("/api/tree", [this](const httplib::Request&, httplib::Response& res) {
        std::shared_lock lock(mu_);
        if (!store_) return send(res, 200, events::tree_to_json(events::TreeSnapshot{}));
        send(res, 200, events::tree_to_json(store_->snapshot()));
    });

    server_->Get("/api/events", [this](const httplib::Request& req, httplib::Response& res) {
        events::EventId since = 0;
        long wait_ms = 0;
        try {
            if (req.has_param("since")) since = std::stoull(req.get_param_value("since"));
            if (req.has_param("wait_ms")) wait_ms = std::stol(req.get_param_value("wait_ms"));
        } catch (const std::exception&) {
            return send_error(res, 400, "since and wait_ms must be non-negative integers");
        }
        if (wait_ms < 0) return send_error(res, 400, "since and wait_ms must be non-negative integers");
        auto until = SteadyClock::now() + std::min(std::chrono::milliseconds(wait_ms), options_.max_wait);
        std::vector<events::Event> batch;
        // Waits in short slices so set_run() is never blocked for a whole long-poll.
        for (;;) {
            std::shared_lock lock(mu_);
            if (store_) {
                auto slice = std::min(until, SteadyClock::now() + std::chrono::milliseconds(200));
                batch = store_->wait_events_since(since, slice);
            }
            if (!batch.empty() || SteadyClock::now() >= until) break;
            if (!store_) {
                lock.unlock();
                std::this_thread::sleep_for(std::chrono::milliseconds(50));
            }
        }
        json events = json::array();
        for (auto& e : batch) events.push_back(events::to_json(e));
        auto last = batch.empty() ? since : batch.back().event_id;
        send(res, 200, {{"events", std::move(events)}, {"last_event_id", last}});
    });

    server_->Post("/api/notify", [this](const httplib::Request& req, httplib::Response& res) {
        auto j = body_json(req, res);
        if (!j) return;
        auto id = string_field(*j, "call_id", res);
        if (!id) return;
        auto msg = string_field(*j, "message", res);
        if (!msg) return;
        if (msg->empty()) return send_error(res, 400, "message must not be empty");
        std::shared_lock lock(mu_);
        if (!runtime_) return send_error(res, 409, "no live run to notify");
        try {
            runtime_->notify(*id, *msg, "human");
        } catch (const Error& e) {
            return send_error(res, http_status(e.code()), e.what());
        }
        send(res, 200, {{"ok", true}, {"call_id", *id}});
    });

    server_->Post("/api/cancel", [this](const httplib::Request& req, httplib::Response& res) {
        auto j = body_json(req, res);
        if (!j) return;
        auto id = string_field(*j, "call_id", res);
        if (!id) return;
        auto reason = string_field(*j, "reason", res, false);
        if (!reason) return;
        bool force = false;
        if (auto it = j->find("force"); it != j->end() && !it->is_null()) {
            if (!it->is_boolean()) return send_error(res, 400, "force must be a boolean");
            force = it->get<bool>();
        }
        std::shared_lock lock(mu_);
        if (!runtime_) return send_error(res, 409, "no live run to cancel");
        if (!store_->status(*id)) return send_error(res, 404, "unknown call id: " + *id);
        if (!force && store_->running(*id) && store_->notification_count(*id) == 0)
            return send_error(res, 409,
                              "call " + *id + " has not been notified yet; notify it first or pass force=true");
        try {
            runtime_->cancel(*id, reason->empty() ? "cancelled by a human overseer" : *reason, "human");
        } catch (const Error& e) {
            return send_error(res, http_status(e.code()), e.what());
        }
        send(res, 200, {{"ok", true}, {"call_id", *id}, {"forced", force}});
    });

    server_->Get("/api/archive", [this](const httplib::Request&, httplib::Response& res) {
        std::shared_lock lock(mu_);
        send(res, 200, {{"iterations", archive_ ? archive_->summaries() : json::array()}});
    });

    server_->set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            send_error(res, 500, e.what());
        }
    });
}

int ControlServer::start() {
    if (thread_.joinable()) fail(ErrorCode::conflict, "server already started");
    int port = options_.port;
    if (port == 0) {
        port = server_->bind_to_any_port(options_.host);
        if (port < 0) fail(ErrorCode::io, "could not bind " + options_.host);
    } else if (!server_->bind_to_port(options_.host, port)) {
        fail(ErrorCode::conflict, "port " + std::to_string(port) + " on " + options_.host + " is in use");
    }
    port_ = port;
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port_;
}

void ControlServer::stop() {
    if (!thread_.joinable()) return;
    server_->stop();
    thread_.join();
}

} // namespace ouro::serve
