#include "facehci/hough.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <set>

using namespace facehci;
using namespace testsupport;

namespace {

constexpr double kPi = std::numbers::pi;

/// Direct 3x3 Sobel response at (x, y).
int sobel_mag(const GrayImage& img, int x, int y) {
    static constexpr int kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
    static constexpr int ky[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
    int gx = 0, gy = 0;
    for (int j = -1; j <= 1; ++j)
        for (int i = -1; i <= 1; ++i) {
            gx += kx[j + 1][i + 1] * img.at(x + i, y + j);
            gy += ky[j + 1][i + 1] * img.at(x + i, y + j);
        }
    return std::abs(gx) + std::abs(gy);
}

EdgeMap edges_of(std::vector<Point> pts, int w = 100, int h = 100) { return {w, h, std::move(pts)}; }

} // namespace

TEST(Sobel, UniformStepAndImpulse) {
    EXPECT_TRUE(sobel_edges(GrayImage(20, 20, 77), {0, 0, 20, 20}, 0).points.empty());

    GrayImage step(20, 20, 20);
    for (int y = 0; y < 20; ++y)
        for (int x = 10; x < 20; ++x) step.at(x, y) = 200;
    const auto e = sobel_edges(step, {0, 0, 20, 20}, 100);
    ASSERT_FALSE(e.points.empty());
    std::set<int> cols;
    for (auto p : e.points) cols.insert(p.x);
    EXPECT_EQ(cols, (std::set<int>{9, 10}));
    EXPECT_EQ(e.points.size(), 2u * 18u);

    GrayImage dot(11, 11, 0);
    dot.at(5, 5) = 255;
    const auto d = sobel_edges(dot, {0, 0, 11, 11}, 0);
    std::set<std::pair<int, int>> got;
    for (auto p : d.points) got.insert({p.x, p.y});
    std::set<std::pair<int, int>> want;
    for (int y = 4; y <= 6; ++y)
        for (int x = 4; x <= 6; ++x)
            if (x != 5 || y != 5) want.insert({x, y});
    EXPECT_EQ(got, want);

    EXPECT_ERRC(sobel_edges(dot, {0, 0, 2, 5}, 0), Errc::InvalidInput);
    EXPECT_ERRC(sobel_edges(dot, {5, 5, 10, 10}, 0), Errc::InvalidInput);
}

TEST(Sobel, MatchesDirectConvolution) {
    Gen g(50);
    for (int trial = 0; trial < 40; ++trial) {
        const GrayImage img = g.image(g.uniform(3, 30), g.uniform(3, 30));
        Rect r = g.rect_in(img.width(), img.height());
        if (r.w < 3 || r.h < 3) r = img.bounds();
        const int thr = g.uniform(0, 600);
        const auto e = sobel_edges(img, r, thr);
        std::vector<Point> want;
        for (int y = r.y + 1; y < r.bottom() - 1; ++y)
            for (int x = r.x + 1; x < r.right() - 1; ++x)
                if (sobel_mag(img, x, y) > thr) want.push_back({x, y});
        ASSERT_EQ(e.points, want);
        EXPECT_EQ(e.width, img.width());
        std::set<std::pair<int, int>> uniq;
        for (auto p : e.points) ASSERT_TRUE(uniq.insert({p.x, p.y}).second);
    }
}

TEST(HoughLines, SinglePointVotesOncePerTheta) {
    const auto edges = edges_of({{30, 40}});
    const auto acc = accumulate(edges, 180, 1.0);
    EXPECT_EQ(acc.total(), 180);
    for (int t = 0; t < acc.theta_bins(); ++t) {
        long long row = 0;
        for (int r = 0; r < acc.rho_bins(); ++r) row += acc.at(t, r);
        EXPECT_EQ(row, 1);
    }
    for (const auto& l : hough_lines(edges)) EXPECT_EQ(l.support, 1);
    EXPECT_TRUE(hough_lines(edges_of({})).empty());
    EXPECT_ERRC(hough_lines(edges, 1), Errc::InvalidInput);
}

TEST(HoughLines, HorizontalRow) {
    std::vector<Point> pts;
    for (int x = 10; x < 30; ++x) pts.push_back({x, 7});
    const auto lines = hough_lines(edges_of(pts));
    ASSERT_FALSE(lines.empty());
    EXPECT_TRUE(within_one_cell(lines[0], kPi / 2, 7.0));
    EXPECT_EQ(lines[0].support, 20);
}

TEST(HoughLines, TwoOrthogonalLines) {
    std::vector<Point> pts;
    for (int i = 0; i < 10; ++i) pts.push_back({20 + 3 * i, 50});  // row y = 50
    for (int i = 0; i < 10; ++i) pts.push_back({60, 10 + 3 * i});  // column x = 60
    const auto lines = hough_lines(edges_of(pts), 180, 1.0, 2);
    ASSERT_EQ(lines.size(), 2u);
    const bool a = within_one_cell(lines[0], kPi / 2, 50) && within_one_cell(lines[1], 0, 60);
    const bool b = within_one_cell(lines[1], kPi / 2, 50) && within_one_cell(lines[0], 0, 60);
    EXPECT_TRUE(a || b);
}

TEST(HoughLines, RandomJitteredLinesRecoveredAndVotesConserved) {
    Gen g(51);
    int recovered = 0, raw = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto line = jittered_line(g);
        EXPECT_EQ(accumulate(line.edges, 180, 1.0).total(), 20 * 180);
        const auto lines = hough_lines(line.edges);
        ASSERT_FALSE(lines.empty());
        raw += within_one_cell(lines[0], line.theta, line.rho);
        recovered += within_one_cell(refine_line(line.edges, lines[0]), line.theta, line.rho);
    }
    // The raw peak is off by a cell in rho whenever a one-bin theta error
    // meets a long lever arm; the fit absorbs that.
    EXPECT_GE(raw, 150);
    EXPECT_GE(recovered, 198);
}

TEST(RefineLine, ExactCollinearAndFallback) {
    const double deg = kPi / 180;
    std::vector<Point> pts;
    for (int i = 0; i < 30; ++i) pts.push_back({10 + 2 * i, 20 + i});
    const auto edges = edges_of(pts);
    const auto lines = hough_lines(edges);
    const Line fit = refine_line(edges, lines[0]);
    // Direction (2, 1): normal angle atan2(-2, 1) + pi, rho through (10, 20).
    const double theta = std::atan2(-2.0, 1.0) + kPi;
    EXPECT_NEAR(fit.theta, theta, 1e-9);
    EXPECT_NEAR(fit.rho, 10 * std::cos(theta) + 20 * std::sin(theta), 1e-9);
    EXPECT_EQ(fit.support, 30);
    EXPECT_LT(std::abs(lines[0].theta - theta), 2 * deg);

    const Line far{0.0, 500.0, 3};
    const Line same = refine_line(edges, far);
    EXPECT_EQ(same.theta, far.theta);
    EXPECT_EQ(same.rho, far.rho);

    const auto vertical = refine_line(edges_of({{5, 0}, {5, 10}, {5, 20}}), {0.02, 5.0, 3});
    EXPECT_NEAR(std::min(vertical.theta, kPi - vertical.theta), 0.0, 1e-9);
    EXPECT_NEAR(std::abs(vertical.rho), 5.0, 1e-9);
}

TEST(HoughLines, CleanLineSupportAtLeastEightyPercent) {
    Gen g(52);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = g.uniform(5, 30);
        const int y = g.uniform(0, 99);
        std::vector<Point> pts;
        for (int i = 0; i < n; ++i) pts.push_back({i * 3, y});
        const auto lines = hough_lines(edges_of(pts));
        ASSERT_FALSE(lines.empty());
        EXPECT_GE(lines[0].support, static_cast<long long>(std::ceil(0.8 * n)));
    }
}

TEST(HoughLines, PermutationInvariant) {
    Gen g(53);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Point> pts;
        const int n = g.uniform(1, 60);
        for (int i = 0; i < n; ++i) pts.push_back({g.uniform(0, 99), g.uniform(0, 99)});
        const auto base = hough_lines(edges_of(pts), 90, 2.0, 10);
        std::shuffle(pts.begin(), pts.end(), g.engine());
        const auto shuffled = hough_lines(edges_of(pts), 90, 2.0, 10);
        ASSERT_EQ(base.size(), shuffled.size());
        for (std::size_t i = 0; i < base.size(); ++i) {
            EXPECT_EQ(base[i].theta, shuffled[i].theta);
            EXPECT_EQ(base[i].rho, shuffled[i].rho);
            EXPECT_EQ(base[i].support, shuffled[i].support);
        }
        for (std::size_t i = 1; i < base.size(); ++i) EXPECT_GE(base[i - 1].support, base[i].support);
    }
}

TEST(EyebrowLine, Examples) {
    const Line one{1.0, 12.0, 4};
    const auto l = eyebrow_line({one});
    EXPECT_EQ(l.theta, 1.0);
    EXPECT_EQ(l.rho, 12.0);
    EXPECT_EQ(l.support, 4);

    const auto twin = eyebrow_line({{0.5, 3.0, 3}, {0.5, 3.0, 5}});
    EXPECT_DOUBLE_EQ(twin.theta, 0.5);
    EXPECT_DOUBLE_EQ(twin.rho, 3.0);
    EXPECT_EQ(twin.support, 8);

    const double deg = kPi / 180;
    const auto merged = eyebrow_line({{0.0, 40.0, 9}, {92 * deg, 8.0, 10}, {90 * deg, 7.0, 20}});
    EXPECT_NEAR(merged.theta / deg, (90.0 * 20 + 92.0 * 10) / 30, 1e-9);
    EXPECT_NEAR(merged.rho, (7.0 * 20 + 8.0 * 10) / 30, 1e-9);
    EXPECT_EQ(merged.support, 30);

    EXPECT_ERRC(eyebrow_line({}), Errc::NoLine);
}

TEST(EyebrowRegion, SitsAboveEyeAndClipLine) {
    const Rect r = eyebrow_region({100, 100}, 60, 320, 240);
    EXPECT_EQ(r.w, 36);
    EXPECT_EQ(r.h, 14);
    EXPECT_EQ(r.bottom(), 100 - 12);
    EXPECT_EQ(r.x + r.w / 2, 100);

    const auto seg = clip_line({kPi / 2, 50.0, 1}, {10, 40, 20, 20});
    ASSERT_TRUE(seg.has_value());
    EXPECT_NEAR(seg->first.y, 50, 1e-9);
    EXPECT_NEAR(seg->second.y, 50, 1e-9);
    EXPECT_FALSE(clip_line({kPi / 2, 5.0, 1}, {10, 40, 20, 20}).has_value());
}
