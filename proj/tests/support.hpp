// Shared test helpers: seeded generators and brute-force oracles that share
// no code with the implementation under test.
#pragma once

#include "facehci/hough.hpp"
#include "facehci/image.hpp"
#include "facehci/motionblink.hpp"
#include "facehci/ssr.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <set>
#include <random>
#include <vector>

namespace testsupport {

using facehci::GrayImage;
using facehci::Rect;

/// Runs `stmt` and reports whether it threw facehci::Error with `code`.
template <typename F>
bool throws_code(F&& stmt, facehci::Errc code) {
    try {
        stmt();
    } catch (const facehci::Error& e) {
        return e.code() == code;
    }
    return false;
}

#define EXPECT_ERRC(stmt, code) EXPECT_TRUE(::testsupport::throws_code([&] { (void)(stmt); }, (code))) << #stmt
#define ASSERT_ERRC(stmt, code) ASSERT_TRUE(::testsupport::throws_code([&] { (void)(stmt); }, (code))) << #stmt

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }

    GrayImage image(int w, int h, int lo = 0, int hi = 255) {
        std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h);
        for (auto& v : px) v = static_cast<std::uint8_t>(uniform(lo, hi));
        return GrayImage(w, h, std::move(px));
    }

    GrayImage image_upto(int max_w, int max_h, int lo = 0, int hi = 255) {
        const int w = uniform(1, max_w);
        return image(w, uniform(1, max_h), lo, hi);
    }

    Rect rect_in(int w, int h) {
        const int x = uniform(0, w - 1), y = uniform(0, h - 1);
        return {x, y, uniform(1, w - x), uniform(1, h - y)};
    }

    std::vector<bool> signals(int n, double p) {
        std::vector<bool> s(static_cast<std::size_t>(n));
        for (auto&& b : s) b = coin(p);
        return s;
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

inline std::int64_t naive_sum(const GrayImage& img, const Rect& r) {
    std::int64_t s = 0;
    for (int y = r.y; y < r.y + r.h; ++y)
        for (int x = r.x; x < r.x + r.w; ++x) s += img.at(x, y);
    return s;
}

/// ii(x, y) by the definition: every pixel up and to the left, inclusive.
inline std::int64_t naive_ii(const GrayImage& img, int x, int y) { return naive_sum(img, {0, 0, x + 1, y + 1}); }

/// SSR predicate straight from the segment definition. Segments are the
/// 3x2 grid of the w x h rectangle whose top-left is (cx - w/2, cy - h/2);
/// index order is B1 B2 B3 over B4 B5 B6.
inline bool naive_ssr(const GrayImage& img, int cx, int cy, int w, int h) {
    const int x0 = cx - w / 2, y0 = cy - h / 2, sw = w / 3, sh = h / 2;
    std::int64_t b[6];
    for (int i = 0; i < 6; ++i) b[i] = naive_sum(img, {x0 + (i % 3) * sw, y0 + (i / 3) * sh, sw, sh});
    const auto sn = b[1] + b[4], ser = b[0] + b[3], sel = b[2] + b[5];
    const auto se = b[0] + b[1] + b[2], sc = b[3] + b[4] + b[5];
    return sn > ser && sn > sel && se < sc;
}

/// Number of 8-connected components by repeated flood fill.
inline int flood_fill_components(const std::vector<std::vector<int>>& grid) {
    const int h = static_cast<int>(grid.size());
    const int w = h ? static_cast<int>(grid[0].size()) : 0;
    std::vector<std::vector<int>> seen(h, std::vector<int>(w, 0));
    int count = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!grid[y][x] || seen[y][x]) continue;
            ++count;
            std::vector<std::pair<int, int>> todo{{x, y}};
            seen[y][x] = 1;
            while (!todo.empty()) {
                auto [px, py] = todo.back();
                todo.pop_back();
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = px + dx, ny = py + dy;
                        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                        if (grid[ny][nx] && !seen[ny][nx]) {
                            seen[ny][nx] = 1;
                            todo.push_back({nx, ny});
                        }
                    }
            }
        }
    return count;
}

struct OracleEvent {
    int start, end;
    bool operator==(const OracleEvent&) const = default;
};

/// Window walk: scan for the next true frame, claim [f, f + L - 1], record
/// the last true frame inside it, resume after the window.
inline std::vector<OracleEvent> window_walk(const std::vector<bool>& s, int L) {
    std::vector<OracleEvent> out;
    const int n = static_cast<int>(s.size());
    int f = 0;
    while (f < n) {
        if (!s[f]) {
            ++f;
            continue;
        }
        int last = f;
        for (int g = f; g < std::min(n, f + L); ++g)
            if (s[g]) last = g;
        out.push_back({f, last});
        f += L;
    }
    return out;
}

/// Mean and population standard deviation.
inline std::pair<double, double> mean_std(const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return {m, std::sqrt(s / static_cast<double>(v.size()))};
}

/// Line through a random point near the middle of a size x size frame, with
/// `n` distinct integer points along it, each pushed up to `jitter` px off
/// the line before rounding to the pixel grid.
struct JitteredLine {
    double theta = 0.0;
    double rho = 0.0;
    facehci::EdgeMap edges;
};

inline JitteredLine jittered_line(Gen& g, int size = 200, int n = 20, double jitter = 1.0) {
    JitteredLine out;
    out.theta = g.real(0.0, std::numbers::pi);
    const double c = std::cos(out.theta), s = std::sin(out.theta);
    const double px = g.real(0.4 * size, 0.6 * size), py = g.real(0.4 * size, 0.6 * size);
    out.rho = px * c + py * s;
    out.edges = {size, size, {}};
    std::set<std::pair<int, int>> seen;
    while (static_cast<int>(out.edges.points.size()) < n) {
        const double t = g.real(-0.3 * size, 0.3 * size);
        const double off = g.real(-jitter, jitter);
        const int x = static_cast<int>(std::lround(px - t * s + off * c));
        const int y = static_cast<int>(std::lround(py + t * c + off * s));
        if (seen.insert({x, y}).second) out.edges.points.push_back({x, y});
    }
    return out;
}

/// Accumulator-cell distance of at most one along each axis between a found
/// line and the true (theta, rho). Theta wraps at pi with rho changing sign.
inline bool within_one_cell(const facehci::Line& got, double theta, double rho, int theta_bins = 180,
                            double rho_bin = 1.0) {
    const double tb = std::numbers::pi / theta_bins;
    const long gt = std::lround(got.theta / tb), tt = std::lround(theta / tb);
    const long gr = std::lround(got.rho / rho_bin), tr = std::lround(rho / rho_bin);
    if (std::abs(gt - tt) <= 1 && std::abs(gr - tr) <= 1) return true;
    return std::abs(std::abs(gt - tt) - theta_bins) <= 1 && std::abs(gr + tr) <= 1;
}

} // namespace testsupport
