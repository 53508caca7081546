/**
 * @file motionblink.hpp
 * @brief Frame differencing, stillness-gated blink detection, blink-length
 *        debouncing, voluntary/involuntary classification and the online
 *        open-eye template used for correlation tracking.
 */
#pragma once

#include "facehci/error.hpp"
#include "facehci/image.hpp"
#include "facehci/ncc.hpp"

#include <cmath>
#include <deque>
#include <optional>
#include <string_view>
#include <vector>

namespace facehci {

struct MotionRegion {
    Rect region;
    int pixel_threshold = 15;
};

/// Pixels inside the region whose absolute difference to the previous frame
/// exceeds the threshold.
inline int motion_pixel_count(const GrayImage& cur, const GrayImage& prev, const MotionRegion& m) {
    require(cur.width() == prev.width() && cur.height() == prev.height(), Errc::InvalidInput,
            "frames differ in size");
    require(inside(m.region, cur.width(), cur.height()), Errc::InvalidInput, "motion region outside frame");
    require(m.pixel_threshold >= 1 && m.pixel_threshold <= 255, Errc::InvalidInput, "pixel threshold out of range");
    int count = 0;
    for (int y = m.region.y; y < m.region.bottom(); ++y) {
        const std::uint8_t* a = cur.row(y);
        const std::uint8_t* b = prev.row(y);
        for (int x = m.region.x; x < m.region.right(); ++x)
            if (std::abs(static_cast<int>(a[x]) - static_cast<int>(b[x])) > m.pixel_threshold) ++count;
    }
    return count;
}

// =============================================================================
// Stillness gate
// =============================================================================

struct EyeTrackState {
    PointF position;
    double correlation = 0.0;
    bool moving = false;
    int frames_still = 0;
};

inline EyeTrackState update_eye_motion(EyeTrackState state, PointF displacement, double move_eps) {
    state.moving = std::hypot(displacement.x, displacement.y) > move_eps;
    state.frames_still = state.moving ? 0 : state.frames_still + 1;
    return state;
}

/// Raw per-frame blink signal: enough motion pixels while the eye is still.
inline bool detect_blink(int motion_count, const EyeTrackState& state, int count_threshold, int min_still_frames) {
    return motion_count > count_threshold && !state.moving && state.frames_still >= min_still_frames;
}

// =============================================================================
// Blink events
// =============================================================================

enum class BlinkSide { Left, Right, Both };

inline std::string_view to_string(BlinkSide s) noexcept {
    switch (s) {
    case BlinkSide::Left: return "left";
    case BlinkSide::Right: return "right";
    case BlinkSide::Both: return "both";
    }
    return "?";
}

struct BlinkEvent {
    BlinkSide side = BlinkSide::Left;
    int start_frame = 0;
    int end_frame = 0;
    double duration_ms = 0.0;
    bool voluntary = false;

    friend bool operator==(const BlinkEvent&, const BlinkEvent&) = default;
};

inline double frames_to_ms(int frames, double frame_rate) { return frames * 1000.0 / frame_rate; }

/// Streaming blink-length debouncer. The first true signal opens an event;
/// every signal up to start + length - 1 is absorbed; the event is emitted
/// once that window has been fully observed.
class Debouncer {
public:
    explicit Debouncer(int blink_length_frames, double frame_rate = 30.0, BlinkSide side = BlinkSide::Left)
        : length_(blink_length_frames), frame_rate_(frame_rate), side_(side) {
        require(blink_length_frames >= 1, Errc::InvalidInput, "blink length must be >= 1 frame");
        require(frame_rate > 0.0, Errc::InvalidInput, "frame rate must be positive");
    }

    /// Feeds one frame; returns the events whose window closed. Frame
    /// indices must increase but may skip.
    std::vector<BlinkEvent> push(int frame, bool signal) {
        std::vector<BlinkEvent> out;
        if (open_ && frame > window_end()) out.push_back(close());
        if (open_ && signal) last_ = frame;
        if (!open_ && signal) {
            open_ = true;
            start_ = last_ = frame;
        }
        if (open_ && frame >= window_end()) out.push_back(close());
        return out;
    }

    /// Emits the open event, if any, at end of stream.
    std::optional<BlinkEvent> flush() {
        if (!open_) return std::nullopt;
        return close();
    }

    bool is_open() const noexcept { return open_; }
    int open_start() const noexcept { return start_; }
    int length() const noexcept { return length_; }
    int window_end() const noexcept { return start_ + length_ - 1; }

private:
    BlinkEvent close() {
        open_ = false;
        return {side_, start_, last_, frames_to_ms(last_ - start_ + 1, frame_rate_), false};
    }

    int length_;
    double frame_rate_;
    BlinkSide side_;
    bool open_ = false;
    int start_ = 0;
    int last_ = 0;
};

inline std::vector<BlinkEvent> debounce(const std::vector<bool>& signals, int blink_length_frames,
                                        double frame_rate = 30.0) {
    Debouncer d(blink_length_frames, frame_rate);
    std::vector<BlinkEvent> out;
    for (std::size_t f = 0; f < signals.size(); ++f)
        for (const auto& e : d.push(static_cast<int>(f), signals[f])) out.push_back(e);
    if (auto e = d.flush()) out.push_back(*e);
    return out;
}

inline BlinkEvent classify_voluntary(BlinkEvent event, double voluntary_min_ms) {
    event.voluntary = event.duration_ms >= voluntary_min_ms;
    return event;
}

// =============================================================================
// Online eye template
// =============================================================================

/// Bounded history of recent frames keyed by frame index.
class FrameRing {
public:
    explicit FrameRing(std::size_t capacity = 32) : capacity_(capacity) {}

    void push(int frame, GrayImage img) {
        frames_.emplace_back(frame, std::move(img));
        while (frames_.size() > capacity_) frames_.pop_front();
    }

    const GrayImage* find(int frame) const noexcept {
        for (const auto& [idx, img] : frames_)
            if (idx == frame) return &img;
        return nullptr;
    }

    void clear() noexcept { frames_.clear(); }
    std::size_t size() const noexcept { return frames_.size(); }
    std::size_t capacity() const noexcept { return capacity_; }

private:
    std::size_t capacity_;
    std::deque<std::pair<int, GrayImage>> frames_;
};

struct EyeTemplate {
    GrayImage patch;
    std::vector<double> variance;  // per pixel, floored at 1
    int frame = 0;
};

/// Open-eye template from the frame `margin` frames after the blink ended;
/// the variance map spans the `margin` post-blink frames.
inline EyeTemplate acquire_template(const FrameRing& ring, const BlinkEvent& event, Point eye, int size,
                                    int margin = 3) {
    require(size >= 3 && size % 2 == 1, Errc::InvalidInput, "eye template side must be odd and >= 3");
    require(margin >= 1, Errc::InvalidInput, "template margin must be >= 1");
    std::vector<const GrayImage*> post;
    for (int f = event.end_frame + 1; f <= event.end_frame + margin; ++f) {
        const GrayImage* img = ring.find(f);
        if (!img) fail(Errc::NotReady, "post-blink frames not buffered yet");
        post.push_back(img);
    }
    const GrayImage& last = *post.back();
    const Rect r = centered_square(eye, size, last.width(), last.height());
    require(r.w == size && r.h == size, Errc::InvalidInput, "eye template does not fit in frame");

    EyeTemplate tmpl{crop(last, r), std::vector<double>(static_cast<std::size_t>(size) * size, 0.0), event.end_frame + margin};
    const double n = static_cast<double>(post.size());
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            double sum = 0.0, sum_sq = 0.0;
            for (const auto* img : post) {
                const double v = img->at(r.x + x, r.y + y);
                sum += v;
                sum_sq += v * v;
            }
            const double mean = sum / n;
            tmpl.variance[static_cast<std::size_t>(y) * size + x] = std::max(1.0, sum_sq / n - mean * mean);
        }
    }
    return tmpl;
}

/// NCC peak of the template within `radius` pixels of `prev`.
inline EyeTrackState correlation_track(const GrayImage& cur, const EyeTemplate& tmpl, Point prev, int radius,
                                       EyeTrackState state = {}) {
    require(radius >= 0, Errc::InvalidInput, "search radius must be non-negative");
    const int side = std::max(tmpl.patch.width(), tmpl.patch.height()) + 2 * radius;
    const Rect search = centered_square(prev, side, cur.width(), cur.height());
    const auto m = match_template(cur, tmpl.patch, search);
    state.position = {static_cast<double>(m.center.x), static_cast<double>(m.center.y)};
    state.correlation = m.correlation;
    return state;
}

} // namespace facehci
