/**
 * @file nose.hpp
 * @brief Nose-tip localization from accumulated intensity profiles and
 *        frame-to-frame tracking by template matching.
 *
 * The region of interest is the square hanging below the two pupils. Inside
 * it, per-row nose-bridge points (NBPs) are the brightest S2-wide sectors of
 * the column sums accumulated from the top of the ROI. The first difference of
 * the NBP sums dips at the dark nostrils and peaks at the bright, convex tip
 * just above them.
 */
#pragma once

#include "facehci/error.hpp"
#include "facehci/image.hpp"
#include "facehci/ncc.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace facehci {

struct NoseRoi {
    Rect rect;
    Point left_eye;
    Point right_eye;
};

enum class Axis { Horizontal, Vertical };

struct Profile {
    Axis axis = Axis::Horizontal;
    std::vector<double> values;
};

struct NosePoint {
    int x = 0;
    int y = 0;
    double confidence = 0.0;
};

struct NoseBridgePoint {
    int row = 0;        // image row
    int col = 0;        // image column at the centre of the brightest sector
    double sum = 0.0;   // accumulated sector sum from the ROI top to this row
};

struct NoseTemplate {
    GrayImage patch;
    int frame = 0;
};

/// Everything the overlay writer wants to draw for the nose stage.
struct NoseDebug {
    Rect roi;
    std::vector<Point> bridge;
    int nostril_row = -1;
    std::optional<Point> tip;
};

/// Square below the pupils: side = inter-ocular distance, top-left corner at
/// the image-left pupil. Clamped by shrinking the side to fit the image.
inline NoseRoi build_roi(Point left_eye, Point right_eye, int width, int height) {
    if (left_eye.x > right_eye.x) std::swap(left_eye, right_eye);
    const double dx = right_eye.x - left_eye.x;
    const double dy = right_eye.y - left_eye.y;
    const int side = static_cast<int>(std::lround(std::hypot(dx, dy)));
    require(!(left_eye == right_eye) && side >= 8, Errc::InvalidInput, "eye pair too close for a nose ROI");
    const int x0 = std::clamp(left_eye.x, 0, width - 1);
    const int y0 = std::clamp(static_cast<int>(std::lround((left_eye.y + right_eye.y) / 2.0)), 0, height - 1);
    const int fitted = std::min({side, width - x0, height - y0});
    return {{x0, y0, fitted, fitted}, left_eye, right_eye};
}

inline std::size_t argmax_first(const std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

/// Column profile: entry c is the running sum down the ROI rows, so the last
/// accumulation equals the full column sum. Its argmax is the bridge column.
inline Profile horizontal_profile(const GrayImage& gray, const NoseRoi& roi) {
    const Rect& r = roi.rect;
    require(inside(r, gray.width(), gray.height()), Errc::InvalidInput, "ROI outside image");
    Profile p{Axis::Horizontal, std::vector<double>(static_cast<std::size_t>(r.w), 0.0)};
    for (int y = r.y; y < r.bottom(); ++y) {
        const std::uint8_t* row = gray.row(y) + r.x;
        for (int c = 0; c < r.w; ++c) p.values[c] += row[c];
    }
    return p;
}

/// Row profile, the same construction turned by 90 degrees.
inline Profile vertical_profile(const GrayImage& gray, const NoseRoi& roi) {
    const Rect& r = roi.rect;
    require(inside(r, gray.width(), gray.height()), Errc::InvalidInput, "ROI outside image");
    Profile p{Axis::Vertical, std::vector<double>(static_cast<std::size_t>(r.h), 0.0)};
    for (int x = r.x; x < r.right(); ++x)
        for (int row = 0; row < r.h; ++row) p.values[row] += gray.at(x, r.y + row);
    return p;
}

inline int default_s2_width(int roi_side) { return std::max(1, (roi_side + 7) / 8); }

inline std::vector<NoseBridgePoint> nose_bridge_points(const GrayImage& gray, const NoseRoi& roi, int s2_width) {
    const Rect& r = roi.rect;
    require(inside(r, gray.width(), gray.height()), Errc::InvalidInput, "ROI outside image");
    require(s2_width >= 1 && s2_width < r.w, Errc::InvalidInput, "S2 width must be in [1, ROI side)");
    std::vector<double> column(static_cast<std::size_t>(r.w), 0.0);
    std::vector<NoseBridgePoint> out;
    out.reserve(static_cast<std::size_t>(r.h));
    for (int row = 0; row < r.h; ++row) {
        const std::uint8_t* src = gray.row(r.y + row) + r.x;
        for (int c = 0; c < r.w; ++c) column[c] += src[c];
        double window = 0.0;
        for (int c = 0; c < s2_width; ++c) window += column[c];
        double best = window;
        int best_start = 0;
        for (int start = 1; start + s2_width <= r.w; ++start) {
            window += column[start + s2_width - 1] - column[start - 1];
            if (window > best) {
                best = window;
                best_start = start;
            }
        }
        out.push_back({r.y + row, r.x + best_start + s2_width / 2, best});
    }
    return out;
}

namespace detail {

/// Extremum detection that treats a run of equal samples as one sample
/// (reported at its first index). `sign` = +1 finds maxima, -1 minima.
inline std::vector<std::size_t> strict_extrema(const std::vector<double>& v, int sign) {
    std::vector<std::size_t> out;
    std::size_t i = 1;
    while (i + 1 < v.size()) {
        std::size_t run_end = i;
        while (run_end + 1 < v.size() && v[run_end + 1] == v[i]) ++run_end;
        if (run_end + 1 >= v.size()) break;
        const double here = sign * v[i];
        if (here > sign * v[i - 1] && here > sign * v[run_end + 1]) out.push_back(i);
        i = run_end + 1;
    }
    return out;
}

inline std::vector<double> box3(const std::vector<double>& v) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        double s = v[i];
        int n = 1;
        if (i > 0) {
            s += v[i - 1];
            ++n;
        }
        if (i + 1 < v.size()) {
            s += v[i + 1];
            ++n;
        }
        out[i] = s / n;
    }
    return out;
}

} // namespace detail

struct NoseTipConfig {
    int s2_width = 0;  // 0 = ceil(roi side / 8)
};

inline NosePoint locate_nose_tip(const GrayImage& gray, const NoseRoi& roi, const NoseTipConfig& cfg = {},
                                 NoseDebug* debug = nullptr) {
    const Rect& r = roi.rect;
    require(r.h >= 5 && r.w >= 2, Errc::InvalidInput, "nose ROI needs at least 5 rows");
    const int s2 = cfg.s2_width > 0 ? std::min(cfg.s2_width, r.w - 1) : std::min(default_s2_width(r.w), r.w - 1);
    const auto nbps = nose_bridge_points(gray, roi, s2);

    std::vector<double> diff(nbps.size());
    for (std::size_t i = 0; i < nbps.size(); ++i) diff[i] = nbps[i].sum - (i ? nbps[i - 1].sum : 0.0);
    const auto smooth = detail::box3(diff);

    if (debug) {
        debug->roi = r;
        debug->bridge.clear();
        for (const auto& p : nbps) debug->bridge.push_back({p.col, p.row});
        debug->nostril_row = -1;
    }

    auto fallback = [&]() {
        const auto hx = argmax_first(horizontal_profile(gray, roi).values);
        const auto vy = argmax_first(vertical_profile(gray, roi).values);
        NosePoint p{r.x + static_cast<int>(hx), r.y + static_cast<int>(vy), 0.5};
        if (debug) debug->tip = Point{p.x, p.y};
        return p;
    };

    const auto minima = detail::strict_extrema(smooth, -1);
    if (minima.empty()) return fallback();
    std::size_t nostril = minima.front();
    for (auto m : minima)
        if (smooth[m] < smooth[nostril]) nostril = m;

    std::optional<std::size_t> tip;
    for (auto m : detail::strict_extrema(smooth, +1))
        if (m < nostril && (!tip || smooth[m] > smooth[*tip])) tip = m;
    if (!tip) return fallback();

    const auto [lo, hi] = std::minmax_element(smooth.begin(), smooth.end());
    const double range = *hi - *lo;
    const double confidence = range > 0.0 ? std::clamp((smooth[*tip] - smooth[nostril]) / range, 0.0, 1.0) : 0.0;
    NosePoint p{nbps[*tip].col, nbps[*tip].row, confidence};
    if (debug) {
        debug->nostril_row = nbps[nostril].row;
        debug->tip = Point{p.x, p.y};
    }
    return p;
}

// =============================================================================
// Tracking
// =============================================================================

/// Patch of odd side `size` centred on `tip`, shifted inward at the border.
inline NoseTemplate make_nose_template(const GrayImage& gray, Point tip, int size, int frame) {
    require(size >= 3 && size % 2 == 1, Errc::InvalidInput, "nose template side must be odd and >= 3");
    require(size <= gray.width() && size <= gray.height(), Errc::InvalidInput, "nose template larger than frame");
    const Rect r = centered_square(tip, size, gray.width(), gray.height());
    return {crop(gray, r), frame};
}

/// Best NCC placement of the template inside the square of side
/// search_factor x template side centred on `prev`. Confidence is the
/// correlation with negative values clipped to 0, so an uncorrelated frame
/// lands near 0 rather than near 0.5.
inline NosePoint track_nose(const GrayImage& gray, const NoseTemplate& tmpl, Point prev, int search_factor = 2) {
    const int side = search_factor * std::max(tmpl.patch.width(), tmpl.patch.height());
    const Rect search = centered_square(prev, side, gray.width(), gray.height());
    const auto m = match_template(gray, tmpl.patch, search);
    return {m.center.x, m.center.y, std::max(0.0, m.correlation)};
}

} // namespace facehci
