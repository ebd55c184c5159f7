#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace ouro {

using SteadyClock = std::chrono::steady_clock;
using Deadline = std::optional<SteadyClock::time_point>;

// Shared cancellation flag with a reason. Copies observe the same state.
class CancelToken {
public:
    CancelToken() : state_(std::make_shared<State>()) {}

    // Returns false if the token was already cancelled (the first reason wins).
    bool cancel(std::string reason) const {
        {
            std::lock_guard lock(state_->mu);
            if (state_->cancelled) return false;
            state_->reason = std::move(reason);
            state_->cancelled = true;
        }
        state_->cv.notify_all();
        return true;
    }

    bool cancelled() const {
        std::lock_guard lock(state_->mu);
        return state_->cancelled;
    }

    std::string reason() const {
        std::lock_guard lock(state_->mu);
        return state_->reason;
    }

    // Blocks until cancelled or the deadline passes. Returns true if cancelled.
    bool wait_until(Deadline deadline) const {
        std::unique_lock lock(state_->mu);
        if (!deadline) {
            state_->cv.wait(lock, [&] { return state_->cancelled; });
            return true;
        }
        return state_->cv.wait_until(lock, *deadline, [&] { return state_->cancelled; });
    }

    bool wait_for(std::chrono::milliseconds d) const { return wait_until(SteadyClock::now() + d); }

private:
    struct State {
        mutable std::mutex mu;
        std::condition_variable cv;
        bool cancelled = false;
        std::string reason;
    };
    std::shared_ptr<State> state_;
};

inline Deadline earliest(Deadline a, Deadline b) {
    if (!a) return b;
    if (!b) return a;
    return std::min(*a, *b);
}

inline bool expired(Deadline d) { return d && SteadyClock::now() >= *d; }

} // namespace ouro
