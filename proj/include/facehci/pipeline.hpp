/**
 * @file pipeline.hpp
 * @brief Per-session frame processing: detect or track the face, locate and
 *        track the nose tip, detect and classify blinks, drive the virtual
 *        pointer and emit event records.
 *
 * State machine: UNLOCKED -> (face found) LOCKED -> (eye correlation below the
 * re-init threshold, or nose confidence below its minimum, for lost_frames
 * consecutive frames) UNLOCKED.
 */
#pragma once

#include "facehci/config.hpp"
#include "facehci/events.hpp"
#include "facehci/fixtures.hpp"
#include "facehci/fps.hpp"
#include "facehci/hough.hpp"
#include "facehci/image_io.hpp"
#include "facehci/motionblink.hpp"
#include "facehci/nose.hpp"
#include "facehci/pointer.hpp"
#include "facehci/ssr.hpp"

#include <array>
#include <deque>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace facehci {

/// Built-in between-the-eyes template, computed once per process.
inline const EyeTemplatePair& builtin_bte_template() {
    static const EyeTemplatePair tmpl = fixtures::default_bte_template();
    return tmpl;
}

inline EyeTemplatePair load_bte_template(const PipelineConfig& cfg) {
    if (cfg.ssr.template_path.empty()) return builtin_bte_template();
    return decode_template(read_file(cfg.ssr.template_path));
}

struct EyebrowOverlay {
    Rect region;
    Line line;
};

/// Overlay inputs captured while processing one frame.
struct FrameDebug {
    std::optional<CandidateMask> candidates;
    std::optional<Point> bte;
    std::array<std::optional<Rect>, 2> eye_boxes;  // image-left, image-right
    std::optional<NoseDebug> nose;
    std::vector<EyebrowOverlay> eyebrows;
    std::array<bool, 2> blink_flash{false, false};
};

struct SessionSnapshot {
    int frame = -1;
    bool locked = false;
    bool calibrated = false;
    std::optional<Point> bte;
    std::array<std::optional<PointF>, 2> eyes;  // image-left, image-right
    std::optional<NosePoint> nose;
    std::optional<PointerState> pointer;
    std::optional<double> fps;
};

struct FrameResult {
    int frame = 0;
    std::vector<EventRecord> events;
    FrameDebug debug;
};

inline nlohmann::json point_json(Point p) { return {{"x", p.x}, {"y", p.y}}; }
inline nlohmann::json point_json(PointF p) { return {{"x", p.x}, {"y", p.y}}; }

inline int odd_at_least(int v, int lo) {
    v = std::max(v, lo);
    return v % 2 == 1 ? v : v + 1;
}

class Session {
public:
    explicit Session(PipelineConfig cfg = {}, Clock clock = steady_clock_seconds())
        : cfg_(std::move(cfg)), clock_(std::move(clock)), pointer_(cfg_.pointer), ring_(cfg_.blink.ring_buffer) {
        cfg_.validate();
        bte_template_ = load_bte_template(cfg_);
        reset_tracking();
    }

    const PipelineConfig& config() const noexcept { return cfg_; }

    /// Replaces the configuration; tracking restarts, calibration survives
    /// unless the pointer screen changed.
    void set_config(const PipelineConfig& cfg) {
        cfg.validate();
        if (cfg.ssr.template_path != cfg_.ssr.template_path) bte_template_ = load_bte_template(cfg);
        cfg_ = cfg;
        pointer_.set_config(cfg_.pointer);
        ring_ = FrameRing(cfg_.blink.ring_buffer);
        reset_tracking();
    }

    /// Drops calibration, templates and lock; the next face re-calibrates.
    void reset() {
        pointer_.reset();
        reset_tracking();
    }

    /// Frame index that the next call to process() will use.
    int next_frame() const noexcept { return next_frame_; }
    void skip_frame() { ++next_frame_; }

    const SessionSnapshot& snapshot() const noexcept { return snap_; }

    FrameResult process(const GrayImage& frame) {
        if (fps_.frames() == 0) fps_.tick(clock_());
        FrameResult out;
        out.frame = next_frame_++;
        frame_ = out.frame;
        events_ = &out.events;
        debug_ = &out.debug;

        if (prev_ && (prev_->width() != frame.width() || prev_->height() != frame.height())) {
            reset_tracking();
        }
        ring_.push(frame_, frame);

        if (!locked_) {
            try_lock(frame);
        } else {
            track(frame);
        }
        prev_ = frame;

        fps_.tick(clock_());
        snap_.fps = fps_.ready() ? std::optional<double>(fps_.fps()) : std::nullopt;
        if (fps_.frames() > 1 && (fps_.frames() - 1) % 30 == 0 && snap_.fps)
            emit("metrics", {{"fps", *snap_.fps}, {"frames", fps_.frames() - 1}});

        fill_snapshot();
        events_ = nullptr;
        debug_ = nullptr;
        return out;
    }

private:
    struct EyeTrack {
        PointF pos;
        std::optional<EyeTemplate> tmpl;
        double correlation = 0.0;
        int low_corr_frames = 0;
    };

    struct PendingBlink {
        BlinkEvent event;
        int image_side = 0;
    };

    struct PendingAcquire {
        BlinkEvent event;
        int image_side = 0;
    };

    void emit(std::string kind, nlohmann::json data) { events_->push_back({frame_, std::move(kind), std::move(data)}); }

    BlinkSide user_side(int image_side) const noexcept {
        const bool image_right = image_side == 1;
        const bool user_left = cfg_.blink.user_left_is_image_right ? image_right : !image_right;
        return user_left ? BlinkSide::Left : BlinkSide::Right;
    }

    void reset_tracking() {
        locked_ = false;
        prev_.reset();
        nose_tmpl_.reset();
        eyes_ = {};
        pending_.clear();
        acquire_.clear();
        eye_history_.clear();
        motion_ = {};
        nose_low_frames_ = 0;
        ring_.clear();
        debouncers_ = {Debouncer(cfg_.blink.blink_length_frames, cfg_.frame_rate, user_side(0)),
                       Debouncer(cfg_.blink.blink_length_frames, cfg_.frame_rate, user_side(1))};
    }

    int eye_template_side() const {
        if (cfg_.blink.eye_template_size > 0) return cfg_.blink.eye_template_size;
        return odd_at_least(static_cast<int>(std::lround(iod_ / 2.0)), 5);
    }

    Rect eye_box(PointF eye, int width, int height) const {
        const int side = eye_template_side();
        return clip(centered_square({static_cast<int>(std::lround(eye.x)), static_cast<int>(std::lround(eye.y))}, side,
                                    width, height),
                    width, height);
    }

    // -------------------------------------------------------------------------
    // UNLOCKED: detection
    // -------------------------------------------------------------------------

    void try_lock(const GrayImage& frame) {
        ScanDebug scan;
        const auto det = multiscale_scan(frame, cfg_.ssr.geometries(), bte_template_, cfg_.ssr.accept_threshold, &scan);
        if (!scan.mask.bits.empty()) debug_->candidates = std::move(scan.mask);
        if (!det) return;

        NoseRoi roi;
        NosePoint tip;
        NoseDebug nose_dbg;
        try {
            roi = build_roi(det->left_eye, det->right_eye, frame.width(), frame.height());
            tip = locate_nose_tip(frame, roi, NoseTipConfig{cfg_.nose.s2_width}, &nose_dbg);
        } catch (const Error& e) {
            if (e.code() == Errc::InvalidInput) return;  // eyes unusable: stay unlocked
            throw;
        }
        if (cfg_.nose.template_size > frame.width() || cfg_.nose.template_size > frame.height()) return;

        locked_ = true;
        bte_ = det->bte;
        iod_ = std::hypot(det->right_eye.x - det->left_eye.x, det->right_eye.y - det->left_eye.y);
        eyes_[0].pos = {static_cast<double>(det->left_eye.x), static_cast<double>(det->left_eye.y)};
        eyes_[1].pos = {static_cast<double>(det->right_eye.x), static_cast<double>(det->right_eye.y)};
        nose_ = tip;
        nose_tmpl_ = make_nose_template(frame, {tip.x, tip.y}, cfg_.nose.template_size, frame_);
        remember_eyes();

        nlohmann::json face{{"bte", point_json(det->bte)},
                            {"left_eye", point_json(det->left_eye)},
                            {"right_eye", point_json(det->right_eye)},
                            {"filter", {{"w", det->geom.w()}, {"h", det->geom.h()}}},
                            {"score", det->score},
                            {"area", det->area},
                            {"mismatch", {{"left", det->mismatch.d_left}, {"right", det->mismatch.d_right}}}};
        nlohmann::json brows = nlohmann::json::array();
        for (int side = 0; side < 2; ++side) {
            const Point eye = side == 0 ? det->left_eye : det->right_eye;
            const Rect region = eyebrow_region(eye, iod_, frame.width(), frame.height());
            if (region.w < 3 || region.h < 3) continue;
            const auto edges = sobel_edges(frame, region, cfg_.hough.edge_threshold);
            const auto lines = hough_lines(edges, cfg_.hough.theta_bins, cfg_.hough.rho_bin_size, cfg_.hough.top_k);
            if (lines.empty()) continue;
            const Line brow =
                refine_line(edges, eyebrow_line(lines, {cfg_.hough.merge_theta_deg, cfg_.hough.merge_rho}));
            debug_->eyebrows.push_back({region, brow});
            brows.push_back({{"side", side == 0 ? "image_left" : "image_right"},
                             {"theta", brow.theta},
                             {"rho", brow.rho},
                             {"support", brow.support}});
        }
        face["eyebrows"] = std::move(brows);
        emit("face", std::move(face));

        nose_dbg.tip = Point{tip.x, tip.y};
        debug_->nose = std::move(nose_dbg);
        debug_->bte = bte_;
        fill_eye_debug(frame);

        emit_nose();
        if (!pointer_.calibrated()) pointer_.calibrate({static_cast<double>(tip.x), static_cast<double>(tip.y)});
        update_pointer();
    }

    // -------------------------------------------------------------------------
    // LOCKED: tracking
    // -------------------------------------------------------------------------

    void track(const GrayImage& frame) {
        const auto& bc = cfg_.blink;

        // Nose tip: the head-motion reference.
        const NosePoint tracked = track_nose(frame, *nose_tmpl_, {nose_.x, nose_.y}, cfg_.nose.search_factor);
        const PointF shift{static_cast<double>(tracked.x - nose_.x), static_cast<double>(tracked.y - nose_.y)};
        nose_ = tracked;
        motion_ = update_eye_motion(motion_, shift, bc.move_eps);
        bte_.x += static_cast<int>(shift.x);
        bte_.y += static_cast<int>(shift.y);
        nose_low_frames_ = tracked.confidence < cfg_.nose.min_confidence ? nose_low_frames_ + 1 : 0;


        // Blink detection on the eye ROIs of the previous frame, gated by the
        // head motion measured just above.
        for (int side = 0; side < 2; ++side) {
            const Rect box = eye_box(eyes_[side].pos, frame.width(), frame.height());
            bool signal = false;
            if (box.w >= 1 && box.h >= 1) {
                const int count = motion_pixel_count(frame, *prev_, {box, bc.pixel_threshold});
                const int threshold = static_cast<int>(std::floor(bc.count_fraction * static_cast<double>(box.area())));
                signal = detect_blink(count, motion_, threshold, bc.min_still_frames);
            }
            debug_->blink_flash[side] = signal;
            for (const auto& e : debouncers_[side].push(frame_, signal)) pending_.push_back({e, side});
        }

        // Eyes: correlation tracking once an online template exists, otherwise
        // they ride along with the nose.
        bool eye_lost = false;
        for (auto& eye : eyes_) {
            const PointF predicted{eye.pos.x + shift.x, eye.pos.y + shift.y};
            if (!eye.tmpl) {
                eye.pos = predicted;
                continue;
            }
            const int radius = bc.search_radius > 0 ? bc.search_radius : eye.tmpl->patch.width();
            const Point at{static_cast<int>(std::lround(predicted.x)), static_cast<int>(std::lround(predicted.y))};
            const auto st = correlation_track(frame, *eye.tmpl, at, radius);
            eye.correlation = st.correlation;
            if (st.correlation >= bc.reinit_threshold) {
                eye.pos = st.position;
                eye.low_corr_frames = 0;
            } else {
                eye.pos = predicted;
                ++eye.low_corr_frames;
            }
            eye_lost = eye_lost || eye.low_corr_frames >= cfg_.nose.lost_frames;
        }
        remember_eyes();

        if (eye_lost || nose_low_frames_ >= cfg_.nose.lost_frames) {
            emit("reinit", {{"phase", "lost"}, {"reason", eye_lost ? "eye-correlation" : "nose-confidence"}});
            reset_tracking();
            return;
        }

        debug_->bte = bte_;
        NoseDebug nd;
        nd.roi = centered_square({nose_.x, nose_.y}, cfg_.nose.search_factor * cfg_.nose.template_size, frame.width(),
                                 frame.height());
        nd.tip = Point{nose_.x, nose_.y};
        debug_->nose = std::move(nd);
        fill_eye_debug(frame);

        emit_nose();
        update_pointer();
        resolve_blinks();
        acquire_templates();
    }

    void resolve_blinks() {
        bool progress = true;
        while (progress) {
            progress = false;
            for (std::size_t i = 0; i < pending_.size(); ++i) {
                const PendingBlink p = pending_[i];
                const int other = 1 - p.image_side;
                auto overlaps = [&](const BlinkEvent& e) {
                    return e.start_frame <= p.event.end_frame && p.event.start_frame <= e.end_frame;
                };
                std::optional<std::size_t> partner;
                for (std::size_t j = 0; j < pending_.size(); ++j)
                    if (pending_[j].image_side == other && overlaps(pending_[j].event)) {
                        partner = j;
                        break;
                    }
                if (partner) {
                    const BlinkEvent& q = pending_[*partner].event;
                    BlinkEvent both{BlinkSide::Both, std::min(p.event.start_frame, q.start_frame),
                                    std::max(p.event.end_frame, q.end_frame), 0.0, false};
                    both.duration_ms = frames_to_ms(both.end_frame - both.start_frame + 1, cfg_.frame_rate);
                    const std::size_t hi = std::max(i, *partner), lo = std::min(i, *partner);
                    pending_.erase(pending_.begin() + static_cast<std::ptrdiff_t>(hi));
                    pending_.erase(pending_.begin() + static_cast<std::ptrdiff_t>(lo));
                    finish_blink(classify_voluntary(both, cfg_.blink.voluntary_min_ms), {0, 1});
                    progress = true;
                    break;
                }
                const auto& d = debouncers_[other];
                if (d.is_open() && d.open_start() <= p.event.end_frame) continue;  // partner may still come
                pending_.erase(pending_.begin() + static_cast<std::ptrdiff_t>(i));
                finish_blink(classify_voluntary(p.event, cfg_.blink.voluntary_min_ms), {p.image_side});
                progress = true;
                break;
            }
        }
    }

    void finish_blink(const BlinkEvent& e, std::vector<int> image_sides) {
        emit("blink", {{"side", std::string(to_string(e.side))},
                       {"start_frame", e.start_frame},
                       {"end_frame", e.end_frame},
                       {"duration_ms", e.duration_ms},
                       {"voluntary", e.voluntary}});
        if (auto click = blink_to_click(e, frame_)) {
            nlohmann::json data{{"button", std::string(to_string(click->button))}};
            if (pointer_.calibrated()) data["pointer"] = {{"x", pointer_.state().x}, {"y", pointer_.state().y}};
            emit("click", std::move(data));
        }
        if (!e.voluntary)
            for (int side : image_sides)
                if (!eyes_[side].tmpl) acquire_.push_back({e, side});
    }

    void acquire_templates() {
        for (std::size_t i = 0; i < acquire_.size();) {
            const auto& a = acquire_[i];
            auto& eye = eyes_[a.image_side];
            if (eye.tmpl) {
                acquire_.erase(acquire_.begin() + static_cast<std::ptrdiff_t>(i));
                continue;
            }
            const int at_frame = a.event.end_frame + cfg_.blink.template_margin;
            const auto pos = eye_at(at_frame, a.image_side);
            if (!pos) {
                if (at_frame < frame_ - static_cast<int>(ring_.capacity())) {
                    acquire_.erase(acquire_.begin() + static_cast<std::ptrdiff_t>(i));
                } else {
                    ++i;
                }
                continue;
            }
            try {
                eye.tmpl = acquire_template(ring_, a.event, *pos, eye_template_side(), cfg_.blink.template_margin);
            } catch (const Error& e) {
                if (e.code() == Errc::NotReady) {
                    ++i;
                    continue;
                }
                if (e.code() != Errc::InvalidInput) throw;
                acquire_.erase(acquire_.begin() + static_cast<std::ptrdiff_t>(i));
                continue;
            }
            eye.low_corr_frames = 0;
            emit("reinit", {{"phase", "acquired"},
                            {"side", std::string(to_string(user_side(a.image_side)))},
                            {"template_frame", eye.tmpl->frame}});
            acquire_.erase(acquire_.begin() + static_cast<std::ptrdiff_t>(i));
        }
    }

    void remember_eyes() {
        eye_history_.push_back({frame_, {eyes_[0].pos, eyes_[1].pos}});
        while (eye_history_.size() > ring_.capacity()) eye_history_.pop_front();
    }

    std::optional<Point> eye_at(int frame, int side) const {
        for (const auto& [f, pos] : eye_history_)
            if (f == frame)
                return Point{static_cast<int>(std::lround(pos[side].x)), static_cast<int>(std::lround(pos[side].y))};
        return std::nullopt;
    }

    void emit_nose() {
        emit("nose", {{"x", nose_.x}, {"y", nose_.y}, {"confidence", nose_.confidence}});
    }

    void update_pointer() {
        if (!pointer_.calibrated()) return;
        const auto& s = pointer_.update({static_cast<double>(nose_.x), static_cast<double>(nose_.y)});
        emit("pointer", {{"x", s.x}, {"y", s.y}});
    }

    void fill_eye_debug(const GrayImage& frame) {
        for (int side = 0; side < 2; ++side) debug_->eye_boxes[side] = eye_box(eyes_[side].pos, frame.width(), frame.height());
    }

    void fill_snapshot() {
        snap_.frame = frame_;
        snap_.locked = locked_;
        snap_.calibrated = pointer_.calibrated();
        if (locked_) {
            snap_.bte = bte_;
            snap_.eyes = {eyes_[0].pos, eyes_[1].pos};
            snap_.nose = nose_;
        } else {
            snap_.bte.reset();
            snap_.eyes = {};
            snap_.nose.reset();
        }
        snap_.pointer = pointer_.calibrated() ? std::optional<PointerState>(pointer_.state()) : std::nullopt;
    }

    PipelineConfig cfg_;
    Clock clock_;
    EyeTemplatePair bte_template_;
    VirtualPointer pointer_;
    FrameRing ring_;
    FpsMeter fps_{60};

    int next_frame_ = 0;
    int frame_ = 0;
    std::vector<EventRecord>* events_ = nullptr;
    FrameDebug* debug_ = nullptr;
    SessionSnapshot snap_;

    bool locked_ = false;
    std::optional<GrayImage> prev_;
    Point bte_;
    double iod_ = 16.0;
    NosePoint nose_;
    std::optional<NoseTemplate> nose_tmpl_;
    int nose_low_frames_ = 0;
    std::array<EyeTrack, 2> eyes_{};
    EyeTrackState motion_;
    std::array<Debouncer, 2> debouncers_{Debouncer(10), Debouncer(10)};
    std::vector<PendingBlink> pending_;
    std::vector<PendingAcquire> acquire_;
    std::deque<std::pair<int, std::array<PointF, 2>>> eye_history_;
};

// =============================================================================
// Frame sources and the batch runner
// =============================================================================

/// Image files of a directory in lexicographic byte order of their names.
inline std::vector<std::filesystem::path> list_frames(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) fail(Errc::Io, "not a directory: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
    std::sort(files.begin(), files.end(),
              [](const auto& a, const auto& b) { return a.filename().string() < b.filename().string(); });
    return files;
}

struct RunSummary {
    int frames = 0;
    int skipped = 0;
    std::size_t events = 0;
    int clicks = 0;
    std::optional<double> fps;
};

using EventSink = std::function<void(const EventRecord&)>;
using FrameSink = std::function<void(const GrayImage&, const FrameResult&)>;

/// Runs every frame of `dir` through one session. Unreadable frames are
/// reported on `log` and skipped (their index is consumed).
inline RunSummary run_pipeline(const std::filesystem::path& dir, Session& session, const EventSink& on_event,
                               const FrameSink& on_frame = {}, std::ostream* log = &std::cerr) {
    RunSummary summary;
    for (const auto& path : list_frames(dir)) {
        GrayImage img;
        try {
            img = read_image(path);
        } catch (const Error& e) {
            if (log) *log << "skip frame " << session.next_frame() << " (" << path.filename().string() << "): " << e.what() << "\n";
            session.skip_frame();
            ++summary.skipped;
            continue;
        }
        const FrameResult r = session.process(img);
        ++summary.frames;
        for (const auto& e : r.events) {
            ++summary.events;
            if (e.kind == "click") ++summary.clicks;
            if (on_event) on_event(e);
        }
        if (on_frame) on_frame(img, r);
    }
    summary.fps = session.snapshot().fps;
    return summary;
}

} // namespace facehci
