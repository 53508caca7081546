/**
 * @file pointer.hpp
 * @brief Virtual pointer: calibration, nose-to-cursor mapping and click
 *        events from voluntary single-eye blinks.
 */
#pragma once

#include "facehci/error.hpp"
#include "facehci/motionblink.hpp"
#include "facehci/nose.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string_view>

namespace facehci {

enum class PointerMode { Absolute, Relative };

inline std::string_view to_string(PointerMode m) noexcept { return m == PointerMode::Absolute ? "absolute" : "relative"; }

struct PointerConfig {
    PointerMode mode = PointerMode::Absolute;
    double gain = 4.0;
    bool mirror_x = false;
    int screen_width = 1280;
    int screen_height = 720;
    double dead_zone = 2.0;  // px around the origin, absolute mode only
    double smoothing = 0.5;  // weight of the previous smoothed nose position
};

struct Calibration {
    PointF origin;         // nose position at calibration
    PointF screen_center;
};

struct PointerState {
    double x = 0.0;
    double y = 0.0;
    int screen_w = 1280;
    int screen_h = 720;
    double gain = 4.0;
    PointerMode mode = PointerMode::Absolute;
};

enum class Button { Left, Right };

inline std::string_view to_string(Button b) noexcept { return b == Button::Left ? "left" : "right"; }

struct ClickEvent {
    Button button = Button::Left;
    int frame = 0;
};

inline Calibration calibrate(PointF nose, int screen_w, int screen_h) {
    require(screen_w >= 1 && screen_h >= 1, Errc::InvalidInput, "screen must be at least 1x1");
    return {nose, {screen_w / 2.0, screen_h / 2.0}};
}

inline PointerState centered_pointer(const Calibration& cal, const PointerConfig& cfg) {
    return {cal.screen_center.x, cal.screen_center.y, cfg.screen_width, cfg.screen_height, cfg.gain, cfg.mode};
}

inline PointerState clamp_to_screen(PointerState s) {
    s.x = std::clamp(s.x, 0.0, static_cast<double>(s.screen_w - 1));
    s.y = std::clamp(s.y, 0.0, static_cast<double>(s.screen_h - 1));
    return s;
}

/// Absolute mode: centre + gain * (nose - origin), zero inside the dead
/// zone. Relative mode: pointer += gain * (nose - nose_prev). Mirroring
/// flips the x displacement; the result is clamped to the screen.
inline PointerState update_pointer(const PointerState& state, const std::optional<Calibration>& cal, PointF nose,
                                   const PointerConfig& cfg, std::optional<PointF> nose_prev = std::nullopt) {
    if (!cal) fail(Errc::NotCalibrated, "pointer update before calibration");
    require(cfg.gain > 0.0, Errc::InvalidInput, "pointer gain must be positive");
    PointerState next = state;
    next.screen_w = cfg.screen_width;
    next.screen_h = cfg.screen_height;
    next.gain = cfg.gain;
    next.mode = cfg.mode;
    const double sign_x = cfg.mirror_x ? -1.0 : 1.0;
    if (cfg.mode == PointerMode::Absolute) {
        double dx = nose.x - cal->origin.x;
        double dy = nose.y - cal->origin.y;
        if (std::hypot(dx, dy) <= cfg.dead_zone) dx = dy = 0.0;
        next.x = cal->screen_center.x + sign_x * cfg.gain * dx;
        next.y = cal->screen_center.y + cfg.gain * dy;
    } else {
        const PointF prev = nose_prev.value_or(nose);
        next.x += sign_x * cfg.gain * (nose.x - prev.x);
        next.y += cfg.gain * (nose.y - prev.y);
    }
    return clamp_to_screen(next);
}

/// Only voluntary single-eye blinks click.
inline std::optional<ClickEvent> blink_to_click(const BlinkEvent& event, int frame) {
    if (!event.voluntary || event.side == BlinkSide::Both) return std::nullopt;
    return ClickEvent{event.side == BlinkSide::Left ? Button::Left : Button::Right, frame};
}

/// Session-owned pointer: exponential smoothing of the nose input in front
/// of update_pointer, plus calibration bookkeeping.
class VirtualPointer {
public:
    explicit VirtualPointer(PointerConfig cfg = {}) : cfg_(cfg) {}

    void calibrate(PointF nose) {
        cal_ = facehci::calibrate(nose, cfg_.screen_width, cfg_.screen_height);
        state_ = centered_pointer(*cal_, cfg_);
        smoothed_ = nose;
        prev_ = nose;
    }

    void reset() {
        cal_.reset();
        smoothed_.reset();
        prev_.reset();
    }

    bool calibrated() const noexcept { return cal_.has_value(); }
    const PointerState& state() const noexcept { return state_; }
    const std::optional<Calibration>& calibration() const noexcept { return cal_; }
    const PointerConfig& config() const noexcept { return cfg_; }
    void set_config(const PointerConfig& cfg) { cfg_ = cfg; }

    const PointerState& update(PointF nose) {
        const double a = std::clamp(cfg_.smoothing, 0.0, 1.0);
        const PointF s = smoothed_ ? PointF{a * smoothed_->x + (1.0 - a) * nose.x, a * smoothed_->y + (1.0 - a) * nose.y}
                                   : nose;
        state_ = update_pointer(state_, cal_, s, cfg_, prev_);
        smoothed_ = s;
        prev_ = s;
        return state_;
    }

private:
    PointerConfig cfg_;
    std::optional<Calibration> cal_;
    PointerState state_;
    std::optional<PointF> smoothed_;
    std::optional<PointF> prev_;
};

} // namespace facehci
