/**
 * @file fixtures.hpp
 * @brief Synthetic parametric faces and scripted sessions with known ground
 *        truth. Used by the test suites and by `facehci gen-fixtures`.
 *
 * Face layout in units of u = scale (inter-ocular distance = 16u), relative
 * to the between-the-eyes point B:
 *   pupils        B + (+-8u, -2u)
 *   eyebrows      B + (+-8u, -5u)
 *   nose tip      pupil line + 9.6u
 *   nostril band  nose tip + 2.6u
 *   mouth         pupil line + 18u
 * B sits on the nose bridge just below the pupil line, where the SSR filter
 * puts the eyes and brows in its upper row.
 */
#pragma once

#include "facehci/image.hpp"
#include "facehci/ssr.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace facehci::fixtures {

struct FaceParams {
    double bte_x = 160.0;
    double bte_y = 110.0;
    double scale = 2.0;
    int skin = 170;
    double open_image_left = 1.0;   // eye openness in [0, 1]
    double open_image_right = 1.0;
};

struct FaceTruth {
    PointF bte;
    PointF left_eye;   // image-left
    PointF right_eye;  // image-right
    PointF nose_tip;
    double nostril_y = 0.0;
    double scale = 1.0;
};

inline FaceTruth face_truth(const FaceParams& f) {
    const double u = f.scale;
    const double pupil_y = f.bte_y - 2.0 * u;
    const double tip_y = pupil_y + 9.6 * u;
    return {{f.bte_x, f.bte_y},
            {f.bte_x - 8.0 * u, pupil_y},
            {f.bte_x + 8.0 * u, pupil_y},
            {f.bte_x, tip_y},
            tip_y + 2.6 * u,
            u};
}

namespace detail {

inline std::uint8_t to_u8(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

/// Normalized elliptic radius of (x, y) against an ellipse at (cx, cy).
inline double ellipse_r(double x, double y, double cx, double cy, double rx, double ry) {
    const double dx = (x - cx) / rx;
    const double dy = (y - cy) / ry;
    return std::sqrt(dx * dx + dy * dy);
}

template <typename Fn>
void for_box(GrayImage& img, double cx, double cy, double rx, double ry, Fn&& fn) {
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - rx)) - 1);
    const int x1 = std::min(img.width() - 1, static_cast<int>(std::ceil(cx + rx)) + 1);
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - ry)) - 1);
    const int y1 = std::min(img.height() - 1, static_cast<int>(std::ceil(cy + ry)) + 1);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) fn(x, y);
}

inline void fill_ellipse(GrayImage& img, double cx, double cy, double rx, double ry, double value) {
    for_box(img, cx, cy, rx, ry, [&](int x, int y) {
        if (ellipse_r(x, y, cx, cy, rx, ry) <= 1.0) img.at(x, y) = to_u8(value);
    });
}

/// Ellipse whose value moves from `center` to `edge` with the radius.
inline void shade_ellipse(GrayImage& img, double cx, double cy, double rx, double ry, double center, double edge) {
    for_box(img, cx, cy, rx, ry, [&](int x, int y) {
        const double r = ellipse_r(x, y, cx, cy, rx, ry);
        if (r <= 1.0) img.at(x, y) = to_u8(center + (edge - center) * r);
    });
}

inline void draw_eye(GrayImage& img, double cx, double cy, double u, int skin, double openness) {
    const double rx = 3.5 * u;
    const double ry = 1.8 * u;
    if (openness >= 0.999) {
        shade_ellipse(img, cx, cy, rx, ry, skin - 125.0, skin - 60.0);
        return;
    }
    // Lid covers the eye: skin-coloured ellipse, then what is left of the eye
    // opening, then the dark lash line.
    fill_ellipse(img, cx, cy, rx * 1.05, ry * 1.15, skin - 8.0);
    if (openness > 0.05) shade_ellipse(img, cx, cy + ry * (1.0 - openness) * 0.5, rx, ry * openness, skin - 110.0, skin - 60.0);
    fill_ellipse(img, cx, cy + ry * (1.0 - openness), rx, std::max(0.5, 0.35 * u), skin - 75.0);
}

} // namespace detail

/// Paints a face onto `img` (background already present).
inline void draw_face(GrayImage& img, const FaceParams& f) {
    using namespace detail;
    const double u = f.scale;
    const FaceTruth t = face_truth(f);
    const double bx = f.bte_x;
    const double s = f.skin;

    fill_ellipse(img, bx, f.bte_y + 6.0 * u, 17.0 * u, 22.0 * u, s);
    // eyebrows
    for (double ex : {t.left_eye.x, t.right_eye.x}) fill_ellipse(img, ex, f.bte_y - 5.0 * u, 5.0 * u, 1.1 * u, s - 95.0);
    // nose bridge, widening towards the tip
    for_box(img, bx, (t.left_eye.y + t.nose_tip.y) / 2.0, 2.0 * u, (t.nose_tip.y - t.left_eye.y) / 2.0, [&](int x, int y) {
        if (y < t.left_eye.y - 0.5 * u || y > t.nose_tip.y) return;
        const double frac = (y - t.left_eye.y) / (t.nose_tip.y - t.left_eye.y);
        const double half = (0.9 + 0.6 * std::clamp(frac, 0.0, 1.0)) * u;
        if (std::abs(x - bx) <= half) img.at(x, y) = to_u8(s + 28.0);
    });
    // tip: brightest, convex
    shade_ellipse(img, bx, t.nose_tip.y, 2.6 * u, 2.0 * u, s + 70.0, s + 30.0);
    // nostril band
    fill_ellipse(img, bx, t.nostril_y, 3.4 * u, 0.9 * u, s - 95.0);
    // mouth
    fill_ellipse(img, bx, t.left_eye.y + 18.0 * u, 6.0 * u, 1.2 * u, s - 85.0);
    // eyes last so the lids sit on top of everything
    draw_eye(img, t.left_eye.x, t.left_eye.y, u, f.skin, f.open_image_left);
    draw_eye(img, t.right_eye.x, t.right_eye.y, u, f.skin, f.open_image_right);
}

/// Cluttered background: base level, random blocks and discs.
inline GrayImage make_background(int width, int height, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> base_d(40, 100);
    GrayImage img(width, height, static_cast<std::uint8_t>(base_d(rng)));
    std::uniform_real_distribution<double> px(0.0, width), py(0.0, height), rad(4.0, 24.0), val(20.0, 160.0);
    std::uniform_int_distribution<int> kind(0, 1);
    for (int i = 0; i < 8; ++i) {
        const double cx = px(rng), cy = py(rng), rx = rad(rng), ry = rad(rng), v = val(rng);
        if (kind(rng) == 0) {
            detail::fill_ellipse(img, cx, cy, rx, ry, v);
        } else {
            const Rect r = clip({static_cast<int>(cx - rx), static_cast<int>(cy - ry), static_cast<int>(2 * rx),
                                 static_cast<int>(2 * ry)},
                                width, height);
            for (int y = r.y; y < r.bottom(); ++y)
                for (int x = r.x; x < r.right(); ++x) img.at(x, y) = detail::to_u8(v);
        }
    }
    return img;
}

inline void add_noise(GrayImage& img, double sigma, std::mt19937_64& rng) {
    if (sigma <= 0.0) return;
    std::normal_distribution<double> n(0.0, sigma);
    for (auto& p : img.pixels()) p = detail::to_u8(p + n(rng));
}

// =============================================================================
// Still renders for detection accuracy
// =============================================================================

struct Render {
    GrayImage image;
    FaceTruth truth;
};

/// One face at `scale` somewhere in a width x height cluttered frame.
inline Render render_face(double scale, std::uint64_t seed, int width = 320, int height = 240, double noise = 3.0) {
    std::mt19937_64 rng(seed);
    GrayImage img = make_background(width, height, rng);
    const double margin_x = 19.0 * scale + 2.0;
    const double margin_top = 16.0 * scale + 2.0;
    const double margin_bottom = 29.0 * scale + 2.0;
    std::uniform_int_distribution<int> xd(static_cast<int>(std::ceil(margin_x)), static_cast<int>(width - margin_x));
    std::uniform_int_distribution<int> yd(static_cast<int>(std::ceil(margin_top)), static_cast<int>(height - margin_bottom));
    std::uniform_int_distribution<int> skin(150, 185);
    FaceParams f;
    f.scale = scale;
    f.bte_x = xd(rng);
    f.bte_y = yd(rng);
    f.skin = skin(rng);
    draw_face(img, f);
    add_noise(img, noise, rng);
    return {std::move(img), face_truth(f)};
}

/// Average between-the-eyes template from synthetic renders across the
/// default filter scales. Training windows are jittered by up to +-2 px so
/// the variance map tolerates the offset between a candidate cluster's
/// centroid and the true point.
inline EyeTemplatePair default_bte_template(int renders_per_scale = 24, std::uint64_t seed = 0x5eed) {
    const SsrGeometry base(24, 12);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> jitter(-2, 2);
    std::vector<GrayImage> patches;
    for (double scale : {1.0, 1.5, 2.0, 3.0}) {
        const SsrGeometry geom = SsrGeometry::scaled(base, scale);
        for (int i = 0; i < renders_per_scale; ++i) {
            const Render r = render_face(scale, rng());
            const PointF at{r.truth.bte.x + jitter(rng), r.truth.bte.y + jitter(rng)};
            patches.push_back(extract_candidate_patch(r.image, at, geom));
        }
    }
    return build_template(patches);
}

// =============================================================================
// Scripted sessions
// =============================================================================

struct FrameSpec {
    int dx = 0;              // head offset from the start position
    int dy = 0;
    double open_user_left = 1.0;
    double open_user_right = 1.0;
};

enum class ScriptedKind { Involuntary, VoluntaryLeft, VoluntaryRight, WhileMoving };

struct ScriptedBlink {
    ScriptedKind kind;
    int first_closed_frame;
    int closed_frames;
};

/// Builder for per-frame head offsets and eye openness.
class Script {
public:
    Script& hold(int frames) {
        for (int i = 0; i < frames; ++i) frames_.push_back(current_);
        return *this;
    }

    /// Moves by (vx, vy) px per frame for `frames` frames.
    Script& move(int frames, int vx, int vy) {
        for (int i = 0; i < frames; ++i) {
            current_.dx += vx;
            current_.dy += vy;
            frames_.push_back(current_);
        }
        return *this;
    }

    /// Half-closed, fully closed for `closed` frames, half-open, open.
    Script& blink(bool user_left, bool user_right, int closed, ScriptedKind kind, int vx = 0) {
        blinks_.push_back({kind, static_cast<int>(frames_.size()) + 1, closed});
        auto frame = [&](double openness) {
            current_.dx += vx;
            FrameSpec f = current_;
            if (user_left) f.open_user_left = openness;
            if (user_right) f.open_user_right = openness;
            frames_.push_back(f);
        };
        frame(0.5);
        for (int i = 0; i < closed; ++i) frame(0.0);
        frame(0.5);
        return *this;
    }

    int size() const noexcept { return static_cast<int>(frames_.size()); }
    const std::vector<FrameSpec>& frames() const noexcept { return frames_; }
    const std::vector<ScriptedBlink>& blinks() const noexcept { return blinks_; }

private:
    FrameSpec current_;
    std::vector<FrameSpec> frames_;
    std::vector<ScriptedBlink> blinks_;
};

struct Session {
    std::vector<GrayImage> frames;
    std::vector<FaceTruth> truth;
    std::vector<ScriptedBlink> blinks;
};

/// Renders a script over a fixed cluttered background with fresh sensor
/// noise per frame. User's left eye is the image-right eye (mirror view).
inline Session render_session(const Script& script, std::uint64_t seed, double scale = 2.0, PointF start = {160, 100},
                              int width = 320, int height = 240, double noise = 2.0) {
    std::mt19937_64 rng(seed);
    const GrayImage background = make_background(width, height, rng);
    std::uniform_int_distribution<int> skin(155, 180);
    const int skin_value = skin(rng);
    Session s;
    s.blinks = script.blinks();
    for (const auto& spec : script.frames()) {
        GrayImage img = background;
        FaceParams f;
        f.scale = scale;
        f.skin = skin_value;
        f.bte_x = start.x + spec.dx;
        f.bte_y = start.y + spec.dy;
        f.open_image_right = spec.open_user_left;
        f.open_image_left = spec.open_user_right;
        draw_face(img, f);
        add_noise(img, noise, rng);
        s.frames.push_back(std::move(img));
        s.truth.push_back(face_truth(f));
    }
    return s;
}

/// 90 frames: settle, move, stop, one voluntary left blink.
inline Script short_script() {
    Script s;
    s.hold(20).move(10, 2, 1).hold(20).blink(true, false, 7, ScriptedKind::VoluntaryLeft).hold(31);
    return s;
}

/// 300 frames with 2 involuntary (both-eye) blinks, 3 voluntary left, 1
/// voluntary right and 1 voluntary-length blink while the head moves.
inline Script blink_script() {
    Script s;
    s.hold(30)
        .blink(true, true, 2, ScriptedKind::Involuntary)
        .hold(20)
        .move(15, 2, 0)
        .hold(15)
        .blink(true, false, 7, ScriptedKind::VoluntaryLeft)
        .hold(20)
        .blink(true, false, 7, ScriptedKind::VoluntaryLeft)
        .hold(16)
        .blink(true, true, 2, ScriptedKind::Involuntary)
        .hold(20)
        .blink(false, true, 7, ScriptedKind::VoluntaryRight)
        .hold(16)
        .move(4, -2, 1)
        .blink(true, false, 7, ScriptedKind::WhileMoving, -2)
        .move(4, -2, -1)
        .hold(20)
        .blink(true, false, 7, ScriptedKind::VoluntaryLeft);
    s.hold(300 - s.size());
    return s;
}

/// Continuous head motion for throughput runs: a slow Lissajous-like path with
/// a few blinks.
inline Script motion_script(int frames = 300) {
    Script s;
    s.hold(10);
    int step = 0;
    while (s.size() < frames - 12) {
        const int phase = (step / 10) % 4;
        const int vx = phase == 0 ? 1 : phase == 2 ? -1 : 0;
        const int vy = phase == 1 ? 1 : phase == 3 ? -1 : 0;
        s.move(1, vx, vy);
        if (++step % 70 == 0) s.hold(5).blink(true, true, 2, ScriptedKind::Involuntary);
    }
    s.hold(frames - s.size());
    return s;
}

} // namespace facehci::fixtures
