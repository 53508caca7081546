/**
 * @file overlay.hpp
 * @brief Annotated RGB copy of a frame from its FrameDebug record.
 */
#pragma once

#include "facehci/image_io.hpp"
#include "facehci/pipeline.hpp"

#include <array>
#include <cstdint>

namespace facehci {

using Rgb = std::array<std::uint8_t, 3>;

namespace overlay_colors {
inline constexpr Rgb kCandidate{40, 90, 255};
inline constexpr Rgb kBte{255, 0, 0};
inline constexpr Rgb kEyeBox{0, 220, 0};
inline constexpr Rgb kBlink{255, 255, 0};
inline constexpr Rgb kNoseRoi{255, 200, 0};
inline constexpr Rgb kBridge{0, 220, 220};
inline constexpr Rgb kNostril{220, 0, 220};
inline constexpr Rgb kTip{255, 60, 60};
inline constexpr Rgb kEyebrow{255, 140, 0};
} // namespace overlay_colors

inline void put(RgbImage& img, int x, int y, Rgb c) { img.set(x, y, c[0], c[1], c[2]); }

inline void draw_rect(RgbImage& img, const Rect& r, Rgb c) {
    if (r.w <= 0 || r.h <= 0) return;
    for (int x = r.x; x < r.right(); ++x) {
        put(img, x, r.y, c);
        put(img, x, r.bottom() - 1, c);
    }
    for (int y = r.y; y < r.bottom(); ++y) {
        put(img, r.x, y, c);
        put(img, r.right() - 1, y, c);
    }
}

/// Five-pixel plus sign centred on `p`.
inline void draw_cross(RgbImage& img, Point p, Rgb c, int arm = 2) {
    for (int d = -arm; d <= arm; ++d) {
        put(img, p.x + d, p.y, c);
        put(img, p.x, p.y + d, c);
    }
}

/// Bresenham segment.
inline void draw_segment(RgbImage& img, Point a, Point b, Rgb c) {
    const int dx = std::abs(b.x - a.x), sx = a.x < b.x ? 1 : -1;
    const int dy = -std::abs(b.y - a.y), sy = a.y < b.y ? 1 : -1;
    int err = dx + dy;
    for (;;) {
        put(img, a.x, a.y, c);
        if (a.x == b.x && a.y == b.y) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            a.x += sx;
        }
        if (e2 <= dx) {
            err += dx;
            a.y += sy;
        }
    }
}

/// Draws the frame's debug record over a grey copy. Layers are painted from
/// the coarsest (candidate mask) to the finest (point markers).
inline RgbImage render_overlay(const GrayImage& frame, const FrameDebug& dbg) {
    using namespace overlay_colors;
    RgbImage out(frame);

    if (dbg.candidates && dbg.candidates->width == frame.width() && dbg.candidates->height == frame.height()) {
        for (int y = 0; y < frame.height(); ++y)
            for (int x = 0; x < frame.width(); ++x)
                if (dbg.candidates->at(x, y)) put(out, x, y, kCandidate);
    }

    for (int side = 0; side < 2; ++side) {
        if (!dbg.eye_boxes[side]) continue;
        const Rect& r = *dbg.eye_boxes[side];
        draw_rect(out, r, dbg.blink_flash[side] ? kBlink : kEyeBox);
        if (dbg.blink_flash[side]) draw_rect(out, {r.x + 1, r.y + 1, r.w - 2, r.h - 2}, kBlink);
    }

    for (const auto& brow : dbg.eyebrows) {
        draw_rect(out, brow.region, kEyebrow);
        if (auto seg = clip_line(brow.line, brow.region)) {
            const auto [a, b] = *seg;
            draw_segment(out, {static_cast<int>(std::lround(a.x)), static_cast<int>(std::lround(a.y))},
                         {static_cast<int>(std::lround(b.x)), static_cast<int>(std::lround(b.y))}, kEyebrow);
        }
    }

    if (dbg.nose) {
        const NoseDebug& n = *dbg.nose;
        draw_rect(out, n.roi, kNoseRoi);
        for (std::size_t i = 1; i < n.bridge.size(); ++i) draw_segment(out, n.bridge[i - 1], n.bridge[i], kBridge);
        if (n.nostril_row >= 0)
            for (int x = n.roi.x; x < n.roi.right(); ++x) put(out, x, n.nostril_row, kNostril);
        if (n.tip) draw_cross(out, *n.tip, kTip);
    }

    if (dbg.bte) draw_cross(out, *dbg.bte, kBte, 3);
    return out;
}

} // namespace facehci
