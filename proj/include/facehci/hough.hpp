/**
 * @file hough.hpp
 * @brief Sobel edge points and the normal-form (theta, rho) Hough line
 *        transform used to recover the eyebrow line above each eye.
 */
#pragma once

#include "facehci/error.hpp"
#include "facehci/image.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

namespace facehci {

struct EdgeMap {
    int width = 0;   // source dimensions
    int height = 0;
    std::vector<Point> points;
};

struct Line {
    double theta = 0.0;  // radians, [0, pi)
    double rho = 0.0;    // pixels, signed
    long long support = 0;
};

/// Sobel gradient with the |Gx| + |Gy| magnitude; the region's own border
/// pixels are skipped so every kernel stays inside the region.
inline EdgeMap sobel_edges(const GrayImage& gray, const Rect& region, int magnitude_threshold) {
    require(region.w >= 3 && region.h >= 3, Errc::InvalidInput, "edge region must be at least 3x3");
    require(inside(region, gray.width(), gray.height()), Errc::InvalidInput, "edge region outside image");
    EdgeMap out{gray.width(), gray.height(), {}};
    for (int y = region.y + 1; y < region.bottom() - 1; ++y) {
        const std::uint8_t* up = gray.row(y - 1);
        const std::uint8_t* mid = gray.row(y);
        const std::uint8_t* down = gray.row(y + 1);
        for (int x = region.x + 1; x < region.right() - 1; ++x) {
            const int gx = (up[x + 1] + 2 * mid[x + 1] + down[x + 1]) - (up[x - 1] + 2 * mid[x - 1] + down[x - 1]);
            const int gy = (down[x - 1] + 2 * down[x] + down[x + 1]) - (up[x - 1] + 2 * up[x] + up[x + 1]);
            if (std::abs(gx) + std::abs(gy) > magnitude_threshold) out.points.push_back({x, y});
        }
    }
    return out;
}

// =============================================================================
// Accumulator
// =============================================================================

class HoughAccumulator {
public:
    HoughAccumulator(int width, int height, int theta_bins, double rho_bin_size)
        : theta_bins_(theta_bins), rho_bin_size_(rho_bin_size) {
        require(theta_bins >= 2, Errc::InvalidInput, "need at least two theta bins");
        require(rho_bin_size > 0.0, Errc::InvalidInput, "rho bin size must be positive");
        const double diag = std::hypot(static_cast<double>(width), static_cast<double>(height));
        rho_offset_ = static_cast<int>(std::ceil(diag / rho_bin_size));
        rho_bins_ = 2 * rho_offset_ + 1;
        counts_.assign(static_cast<std::size_t>(theta_bins_) * rho_bins_, 0);
        cos_.resize(theta_bins_);
        sin_.resize(theta_bins_);
        for (int t = 0; t < theta_bins_; ++t) {
            cos_[t] = std::cos(theta(t));
            sin_[t] = std::sin(theta(t));
        }
    }

    int theta_bins() const noexcept { return theta_bins_; }
    int rho_bins() const noexcept { return rho_bins_; }
    double theta(int t) const noexcept { return std::numbers::pi * t / theta_bins_; }
    double rho(int r) const noexcept { return (r - rho_offset_) * rho_bin_size_; }
    int rho_index(double rho) const noexcept { return static_cast<int>(std::lround(rho / rho_bin_size_)) + rho_offset_; }

    long long at(int t, int r) const noexcept { return counts_[static_cast<std::size_t>(t) * rho_bins_ + r]; }

    void vote(Point p) {
        for (int t = 0; t < theta_bins_; ++t) {
            const int r = rho_index(p.x * cos_[t] + p.y * sin_[t]);
            ++counts_[static_cast<std::size_t>(t) * rho_bins_ + std::clamp(r, 0, rho_bins_ - 1)];
        }
    }

    long long total() const noexcept {
        long long n = 0;
        for (auto c : counts_) n += c;
        return n;
    }

private:
    int theta_bins_;
    double rho_bin_size_;
    int rho_offset_ = 0;
    int rho_bins_ = 0;
    std::vector<long long> counts_;
    std::vector<double> cos_, sin_;
};

inline HoughAccumulator accumulate(const EdgeMap& edges, int theta_bins, double rho_bin_size) {
    HoughAccumulator acc(edges.width, edges.height, theta_bins, rho_bin_size);
    for (const auto& p : edges.points) acc.vote(p);
    return acc;
}

/// Peaks after 3x3 non-maximum suppression, by support descending and then
/// (theta, rho) ascending. A plateau yields its first cell in raster order.
inline std::vector<Line> hough_lines(const EdgeMap& edges, int theta_bins = 180, double rho_bin_size = 1.0,
                                     int top_k = 8) {
    require(theta_bins >= 2, Errc::InvalidInput, "need at least two theta bins");
    if (edges.points.empty()) return {};
    const auto acc = accumulate(edges, theta_bins, rho_bin_size);
    std::vector<Line> peaks;
    for (int t = 0; t < acc.theta_bins(); ++t) {
        for (int r = 0; r < acc.rho_bins(); ++r) {
            const long long c = acc.at(t, r);
            if (c == 0) continue;
            bool peak = true;
            for (int dt = -1; dt <= 1 && peak; ++dt) {
                for (int dr = -1; dr <= 1; ++dr) {
                    if (dt == 0 && dr == 0) continue;
                    const int nt = t + dt;
                    const int nr = r + dr;
                    if (nt < 0 || nr < 0 || nt >= acc.theta_bins() || nr >= acc.rho_bins()) continue;
                    const long long n = acc.at(nt, nr);
                    const bool earlier = dt < 0 || (dt == 0 && dr < 0);
                    if (n > c || (earlier && n == c)) {
                        peak = false;
                        break;
                    }
                }
            }
            if (peak) peaks.push_back({acc.theta(t), acc.rho(r), c});
        }
    }
    std::sort(peaks.begin(), peaks.end(), [](const Line& a, const Line& b) {
        if (a.support != b.support) return a.support > b.support;
        if (a.theta != b.theta) return a.theta < b.theta;
        return a.rho < b.rho;
    });
    if (top_k >= 0 && peaks.size() > static_cast<std::size_t>(top_k)) peaks.resize(static_cast<std::size_t>(top_k));
    return peaks;
}

struct MergeWindow {
    double theta_deg = 10.0;
    double rho = 5.0;
};

/// Support-weighted average of the lines near the strongest one.
inline Line eyebrow_line(const std::vector<Line>& lines, MergeWindow window = {}) {
    if (lines.empty()) fail(Errc::NoLine, "no Hough lines to merge");
    const Line top = *std::min_element(lines.begin(), lines.end(), [](const Line& a, const Line& b) {
        if (a.support != b.support) return a.support > b.support;
        if (a.theta != b.theta) return a.theta < b.theta;
        return a.rho < b.rho;
    });
    const double max_dtheta = window.theta_deg * std::numbers::pi / 180.0;
    double w_sum = 0.0, theta = 0.0, rho = 0.0;
    long long support = 0;
    for (const auto& l : lines) {
        if (std::abs(l.theta - top.theta) > max_dtheta + 1e-12 || std::abs(l.rho - top.rho) > window.rho + 1e-12) continue;
        const double w = static_cast<double>(l.support);
        w_sum += w;
        theta += w * l.theta;
        rho += w * l.rho;
        support += l.support;
    }
    return {theta / w_sum, rho / w_sum, support};
}

/// Total-least-squares fit over the edge points within `band` px of `line`,
/// repeated `iterations` times. The accumulator only resolves a line to its
/// cell, and a one-bin theta error moves rho by the distance from the origin
/// times the bin width; the fit removes that quantization. Support becomes the
/// inlier count. Fewer than two inliers returns `line` unchanged.
inline Line refine_line(const EdgeMap& edges, Line line, double band = 2.0, int iterations = 3) {
    for (int it = 0; it < iterations; ++it) {
        const double c = std::cos(line.theta);
        const double s = std::sin(line.theta);
        auto near = [&](Point p) { return std::abs(p.x * c + p.y * s - line.rho) <= band; };
        double sx = 0.0, sy = 0.0;
        long long n = 0;
        for (auto p : edges.points)
            if (near(p)) {
                sx += p.x;
                sy += p.y;
                ++n;
            }
        if (n < 2) break;
        const double mx = sx / n;
        const double my = sy / n;
        double cxx = 0.0, cyy = 0.0, cxy = 0.0;
        for (auto p : edges.points)
            if (near(p)) {
                cxx += (p.x - mx) * (p.x - mx);
                cyy += (p.y - my) * (p.y - my);
                cxy += (p.x - mx) * (p.y - my);
            }
        // Principal direction of the scatter; the normal is a quarter turn away.
        const double direction = 0.5 * std::atan2(2.0 * cxy, cxx - cyy);
        const double theta = std::fmod(direction + 2.5 * std::numbers::pi, std::numbers::pi);
        line = {theta, mx * std::cos(theta) + my * std::sin(theta), n};
    }
    return line;
}

/// Search box above an eye: 0.6 x IOD wide, 0.4 of that tall, bottom edge
/// 0.2 IOD above the pupil. Clipped to the image; may come back empty.
inline Rect eyebrow_region(Point eye, double inter_ocular, int width, int height) {
    const int w = std::max(3, static_cast<int>(std::lround(1.2 * inter_ocular / 2.0)));
    const int h = std::max(3, static_cast<int>(std::lround(0.4 * w)));
    const int bottom = eye.y - static_cast<int>(std::lround(0.2 * inter_ocular));
    return clip({eye.x - w / 2, bottom - h, w, h}, width, height);
}

/// Endpoints of `line` clipped to `box`, for drawing.
inline std::optional<std::pair<PointF, PointF>> clip_line(const Line& line, const Rect& box) {
    const double c = std::cos(line.theta);
    const double s = std::sin(line.theta);
    std::vector<PointF> hits;
    const double x0 = box.x, x1 = box.right() - 1, y0 = box.y, y1 = box.bottom() - 1;
    if (std::abs(s) > 1e-9) {
        for (double x : {x0, x1}) {
            const double y = (line.rho - x * c) / s;
            if (y >= y0 - 1e-9 && y <= y1 + 1e-9) hits.push_back({x, y});
        }
    }
    if (std::abs(c) > 1e-9) {
        for (double y : {y0, y1}) {
            const double x = (line.rho - y * s) / c;
            if (x >= x0 - 1e-9 && x <= x1 + 1e-9) hits.push_back({x, y});
        }
    }
    if (hits.size() < 2) return std::nullopt;
    return std::pair{hits.front(), hits.back()};
}

} // namespace facehci
