#pragma once

#include "facehci/error.hpp"

#include <chrono>
#include <deque>
#include <functional>

namespace facehci {

/// Seconds on some monotonic timeline. Injected so tests can drive time.
using Clock = std::function<double()>;

inline Clock steady_clock_seconds() {
    return [] {
        using namespace std::chrono;
        return duration<double>(steady_clock::now().time_since_epoch()).count();
    };
}

/// Clock that advances by a fixed step on every read, starting at 0.
inline Clock fixed_step_clock(double step) {
    return [t = -step, step]() mutable { return t += step; };
}

/// Rolling frame-rate meter: frames completed over the wall time they took,
/// across the most recent `window` frame intervals.
class FpsMeter {
public:
    explicit FpsMeter(std::size_t window = 60) : window_(window) {}

    void tick(double t) {
        stamps_.push_back(t);
        while (stamps_.size() > window_ + 1) stamps_.pop_front();
        ++frames_;
    }

    bool ready() const noexcept { return stamps_.size() >= 2 && stamps_.back() > stamps_.front(); }

    double fps() const {
        if (!ready()) fail(Errc::NotReady, "fps needs at least two processed frames");
        return static_cast<double>(stamps_.size() - 1) / (stamps_.back() - stamps_.front());
    }

    long long frames() const noexcept { return frames_; }
    void reset() noexcept {
        stamps_.clear();
        frames_ = 0;
    }

private:
    std::size_t window_;
    std::deque<double> stamps_;
    long long frames_ = 0;
};

} // namespace facehci
