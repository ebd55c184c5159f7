#pragma once

#include "events/event_store.hpp"
#include "meta/archive.hpp"
#include "runtime/runtime.hpp"

#include <memory>
#include <shared_mutex>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace ouro::serve {

struct ServeOptions {
    std::string host = "127.0.0.1";
    int port = 0; // 0 picks a free port
    // Upper bound for a long-poll on /api/events.
    std::chrono::milliseconds max_wait{30'000};
};

// JSON control API over one run and, optionally, an archive:
//   GET  /api/tree                      full execution tree
//   GET  /api/events?since=ID&wait_ms=N events after ID, waiting up to N ms for one
//   POST /api/notify {call_id, message}
//   POST /api/cancel {call_id, reason, force}
//   GET  /api/archive                   iteration summaries
// Interventions go through Runtime::notify and Runtime::cancel with source "human".
// Cancelling a node that has never received a notification is refused with 409
// unless force is true.
class ControlServer {
public:
    explicit ControlServer(ServeOptions options = {});
    ~ControlServer();
    ControlServer(const ControlServer&) = delete;
    ControlServer& operator=(const ControlServer&) = delete;

    // Swaps the run being served. `runtime` may be null for a finished or replayed run,
    // in which case interventions answer 409. Blocks until in-flight requests release
    // the previous target.
    void set_run(events::EventStore* store, runtime::Runtime* runtime);
    void set_archive(const meta::Archive* archive);

    // Binds and serves on a background thread; returns the bound port.
    // Throws Error(conflict) when the port is taken.
    int start();
    void stop();
    int port() const { return port_; }

private:
    void routes();

    ServeOptions options_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
    mutable std::shared_mutex mu_;
    events::EventStore* store_ = nullptr;
    runtime::Runtime* runtime_ = nullptr;
    const meta::Archive* archive_ = nullptr;
};

} // namespace ouro::serve
