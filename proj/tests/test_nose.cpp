#include "facehci/fixtures.hpp"
#include "facehci/nose.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace facehci;
using namespace testsupport;

namespace {

Point rounded(PointF p) { return {static_cast<int>(std::lround(p.x)), static_cast<int>(std::lround(p.y))}; }

NoseRoi roi_of(Rect r) { return {r, {r.x, r.y}, {r.right(), r.y}}; }

/// Naive per-row brightest window, recomputed from scratch for each row.
std::vector<std::pair<int, double>> naive_nbp(const GrayImage& img, const Rect& r, int s2) {
    std::vector<std::pair<int, double>> out;
    for (int row = 0; row < r.h; ++row) {
        double best = -1;
        int best_start = 0;
        for (int start = 0; start + s2 <= r.w; ++start) {
            double s = 0;
            for (int y = 0; y <= row; ++y)
                for (int x = start; x < start + s2; ++x) s += img.at(r.x + x, r.y + y);
            if (s > best) {
                best = s;
                best_start = start;
            }
        }
        out.push_back({r.x + best_start + s2 / 2, best});
    }
    return out;
}

GrayImage gaussian_blob(int w, int h, double cx, double cy, double sigma, int base, int peak) {
    GrayImage img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            img.at(x, y) = static_cast<std::uint8_t>(std::lround(base + (peak - base) * std::exp(-d2 / (2 * sigma * sigma))));
        }
    return img;
}

} // namespace

TEST(BuildRoi, Examples) {
    auto roi = build_roi({100, 100}, {160, 100}, 320, 240);
    EXPECT_EQ(roi.rect, (Rect{100, 100, 60, 60}));
    roi = build_roi({10, 10}, {20, 10}, 64, 64);
    EXPECT_EQ(roi.rect, (Rect{10, 10, 10, 10}));
    // Shrunk to the largest square that fits: corners (0,0)..(127,127).
    roi = build_roi({0, 0}, {200, 0}, 128, 128);
    EXPECT_EQ(roi.rect, (Rect{0, 0, 128, 128}));
    EXPECT_EQ(roi.rect.w, roi.rect.h);
    // Eye order does not matter.
    EXPECT_EQ(build_roi({160, 100}, {100, 100}, 320, 240).rect, (Rect{100, 100, 60, 60}));
}

TEST(BuildRoi, ClampIsMaximal) {
    Gen g(40);
    for (int trial = 0; trial < 200; ++trial) {
        const int W = g.uniform(40, 200), H = g.uniform(40, 200);
        const Point a{g.uniform(0, W - 1), g.uniform(0, H - 1)};
        const Point b{a.x + g.uniform(8, 120), a.y};
        const auto roi = build_roi(a, b, W, H);
        ASSERT_TRUE(inside(roi.rect, W, H));
        ASSERT_EQ(roi.rect.w, roi.rect.h);
        // One pixel larger would leave the image or exceed the eye distance.
        const int bigger = roi.rect.w + 1;
        ASSERT_TRUE(roi.rect.x + bigger > W || roi.rect.y + bigger > H || bigger > b.x - a.x);
    }
}

TEST(BuildRoi, Degenerate) {
    EXPECT_ERRC(build_roi({50, 50}, {50, 50}, 100, 100), Errc::InvalidInput);
    EXPECT_ERRC(build_roi({50, 50}, {55, 50}, 100, 100), Errc::InvalidInput);
}

TEST(Profiles, SingleBrightColumn) {
    GrayImage img(30, 30, 20);
    for (int y = 0; y < 30; ++y) img.at(17, y) = 240;
    const auto roi = roi_of({5, 5, 20, 20});
    const auto p = horizontal_profile(img, roi);
    EXPECT_EQ(p.axis, Axis::Horizontal);
    EXPECT_EQ(p.values.size(), 20u);
    EXPECT_EQ(argmax_first(p.values), 12u);
}

TEST(Profiles, GaussianBlob) {
    Gen g(41);
    for (int trial = 0; trial < 20; ++trial) {
        const double cx = g.real(8, 32), cy = g.real(8, 32);
        const GrayImage img = gaussian_blob(40, 40, cx, cy, 4.0, 30, 220);
        const auto roi = roi_of({0, 0, 40, 40});
        EXPECT_LE(std::abs(static_cast<double>(argmax_first(horizontal_profile(img, roi).values)) - cx), 1.0);
        EXPECT_LE(std::abs(static_cast<double>(argmax_first(vertical_profile(img, roi).values)) - cy), 1.0);
    }
}

TEST(Profiles, UniformTiesGoToSmallestIndex) {
    const GrayImage img(20, 20, 90);
    const auto roi = roi_of({2, 2, 10, 10});
    EXPECT_EQ(argmax_first(horizontal_profile(img, roi).values), 0u);
    EXPECT_EQ(argmax_first(vertical_profile(img, roi).values), 0u);
}

TEST(Profiles, MatchTwoLoopSumAndOffsetInvariance) {
    Gen g(42);
    for (int trial = 0; trial < 30; ++trial) {
        const GrayImage img = g.image(40, 40, 0, 200);
        const Rect r{g.uniform(0, 10), g.uniform(0, 10), g.uniform(10, 30), g.uniform(10, 30)};
        const auto roi = roi_of(r);
        const auto h = horizontal_profile(img, roi);
        const auto v = vertical_profile(img, roi);
        for (int c = 0; c < r.w; ++c) {
            double s = 0;
            for (int y = r.y; y < r.bottom(); ++y) s += img.at(r.x + c, y);
            ASSERT_EQ(h.values[c], s);
        }
        for (int row = 0; row < r.h; ++row) {
            double s = 0;
            for (int x = r.x; x < r.right(); ++x) s += img.at(x, r.y + row);
            ASSERT_EQ(v.values[row], s);
        }
        GrayImage brighter = img;
        for (auto& p : brighter.pixels()) p = static_cast<std::uint8_t>(p + 55);
        EXPECT_EQ(argmax_first(horizontal_profile(brighter, roi).values), argmax_first(h.values));
        EXPECT_EQ(argmax_first(vertical_profile(brighter, roi).values), argmax_first(v.values));
    }
}

TEST(NoseBridgePoints, StripeTiltSingleRow) {
    GrayImage img(50, 40, 40);
    for (int y = 0; y < 40; ++y)
        for (int x = 20; x <= 25; ++x) img.at(x, y) = 220;
    const Rect r{0, 0, 50, 40};
    for (const auto& p : nose_bridge_points(img, roi_of(r), 4)) {
        EXPECT_GE(p.col, 20);
        EXPECT_LE(p.col, 25);
    }

    GrayImage tilted(50, 40, 40);
    for (int y = 0; y < 40; ++y)
        for (int x = 15 + y / 8; x <= 19 + y / 8; ++x) tilted.at(x, y) = 220;
    const auto nbps = nose_bridge_points(tilted, roi_of(r), 5);
    const auto naive = naive_nbp(tilted, r, 5);
    ASSERT_EQ(nbps.size(), 40u);
    for (std::size_t i = 0; i < nbps.size(); ++i) {
        EXPECT_EQ(nbps[i].row, static_cast<int>(i));
        EXPECT_EQ(nbps[i].col, naive[i].first);
        EXPECT_EQ(nbps[i].sum, naive[i].second);
        if (i) {
            EXPECT_GE(nbps[i].col, nbps[i - 1].col);
        }
    }

    const auto one = nose_bridge_points(img, roi_of({0, 10, 50, 1}), 4);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0].row, 10);
    EXPECT_ERRC(nose_bridge_points(img, roi_of(r), 50), Errc::InvalidInput);
}

TEST(NoseBridgePoints, RandomMatchesNaive) {
    Gen g(43);
    for (int trial = 0; trial < 30; ++trial) {
        const GrayImage img = g.image(24, 24);
        const Rect r{g.uniform(0, 4), g.uniform(0, 4), g.uniform(6, 20), g.uniform(1, 20)};
        const int s2 = g.uniform(1, r.w - 1);
        const auto got = nose_bridge_points(img, roi_of(r), s2);
        const auto want = naive_nbp(img, r, s2);
        for (std::size_t i = 0; i < got.size(); ++i) {
            ASSERT_EQ(got[i].col, want[i].first);
            ASSERT_EQ(got[i].sum, want[i].second);
        }
    }
}

TEST(Extrema, PlateausCountOnce) {
    using detail::strict_extrema;
    EXPECT_EQ(strict_extrema({3, 1, 3}, -1), (std::vector<std::size_t>{1}));
    EXPECT_EQ(strict_extrema({3, 1, 1, 3}, -1), (std::vector<std::size_t>{1}));
    EXPECT_EQ(strict_extrema({3, 1, 1, 2, 0, 5}, -1), (std::vector<std::size_t>{1, 4}));
    EXPECT_TRUE(strict_extrema({1, 1, 1, 1}, -1).empty());
    EXPECT_TRUE(strict_extrema({1, 2, 3, 4}, +1).empty());
    EXPECT_EQ(detail::box3({3, 6, 9}), (std::vector<double>{4.5, 6, 7.5}));
}

TEST(LocateNoseTip, FixtureWithinTwoPixels) {
    int ok = 0, total = 0;
    for (double scale : {1.0, 2.0, 3.0})
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            const auto r = fixtures::render_face(scale, seed);
            const auto roi = build_roi(rounded(r.truth.left_eye), rounded(r.truth.right_eye), 320, 240);
            NoseDebug dbg;
            const auto tip = locate_nose_tip(r.image, roi, {}, &dbg);
            ++total;
            if (std::abs(tip.x - r.truth.nose_tip.x) <= 2.0 && std::abs(tip.y - r.truth.nose_tip.y) <= 2.0) ++ok;
            EXPECT_TRUE(roi.rect.contains({tip.x, tip.y}));
            EXPECT_GE(tip.confidence, 0.0);
            EXPECT_LE(tip.confidence, 1.0);
            EXPECT_GT(dbg.nostril_row, tip.y);
            EXPECT_EQ(dbg.bridge.size(), static_cast<std::size_t>(roi.rect.h));
        }
    EXPECT_EQ(ok, total);
}

TEST(LocateNoseTip, TranslationEquivariant) {
    for (auto [dx, dy] : {std::pair{3, 2}, std::pair{-5, 4}, std::pair{7, -3}}) {
        GrayImage a(200, 160, 70), b(200, 160, 70);
        fixtures::FaceParams f;
        f.bte_x = 90;
        f.bte_y = 60;
        fixtures::draw_face(a, f);
        fixtures::FaceParams g = f;
        g.bte_x += dx;
        g.bte_y += dy;
        fixtures::draw_face(b, g);
        const auto ta = fixtures::face_truth(f), tb = fixtures::face_truth(g);
        const auto pa = locate_nose_tip(a, build_roi(rounded(ta.left_eye), rounded(ta.right_eye), 200, 160));
        const auto pb = locate_nose_tip(b, build_roi(rounded(tb.left_eye), rounded(tb.right_eye), 200, 160));
        EXPECT_EQ(pb.x - pa.x, dx);
        EXPECT_EQ(pb.y - pa.y, dy);
        EXPECT_DOUBLE_EQ(pa.confidence, pb.confidence);
    }
}

TEST(LocateNoseTip, FallbacksAndErrors) {
    // Vertical stripe only: differences keep growing, no nostril dip.
    GrayImage stripe(40, 40, 30);
    for (int y = 0; y < 40; ++y)
        for (int x = 18; x <= 21; ++x) stripe.at(x, y) = 200;
    const auto roi = roi_of({0, 0, 40, 40});
    auto p = locate_nose_tip(stripe, roi);
    EXPECT_EQ(p.confidence, 0.5);
    EXPECT_EQ(p.x, static_cast<int>(argmax_first(horizontal_profile(stripe, roi).values)));
    EXPECT_EQ(p.y, static_cast<int>(argmax_first(vertical_profile(stripe, roi).values)));

    p = locate_nose_tip(GrayImage(40, 40, 0), roi);
    EXPECT_EQ(p.confidence, 0.5);
    EXPECT_EQ(p.x, 0);
    EXPECT_EQ(p.y, 0);

    EXPECT_ERRC(locate_nose_tip(stripe, roi_of({0, 0, 40, 4})), Errc::InvalidInput);
}

TEST(TrackNose, IdentityTranslationNoise) {
    const auto r = fixtures::render_face(2.0, 5);
    const Point tip = rounded(r.truth.nose_tip);
    const auto tmpl = make_nose_template(r.image, tip, 15, 0);
    EXPECT_EQ(tmpl.patch.width(), 15);

    auto p = track_nose(r.image, tmpl, tip);
    EXPECT_EQ((Point{p.x, p.y}), tip);
    EXPECT_NEAR(p.confidence, 1.0, 1e-9);

    GrayImage moved(320, 240, 0);
    for (int y = 0; y < 240; ++y)
        for (int x = 0; x < 320; ++x) moved.at(x, y) = r.image.at(std::clamp(x - 3, 0, 319), std::clamp(y - 2, 0, 239));
    p = track_nose(moved, tmpl, tip);
    EXPECT_EQ((Point{p.x, p.y}), (Point{tip.x + 3, tip.y + 2}));
    EXPECT_NEAR(p.confidence, 1.0, 1e-9);

    Gen g(44);
    for (int trial = 0; trial < 20; ++trial) {
        p = track_nose(g.image(320, 240), tmpl, tip);
        EXPECT_LT(p.confidence, 0.55);  // default re-init threshold
    }
}

TEST(TrackNose, Errors) {
    const GrayImage img(40, 40, 9);
    EXPECT_ERRC(make_nose_template(img, {20, 20}, 14, 0), Errc::InvalidInput);
    EXPECT_ERRC(make_nose_template(img, {20, 20}, 41, 0), Errc::InvalidInput);
    const auto tmpl = make_nose_template(img, {20, 20}, 15, 0);
    EXPECT_ERRC(track_nose(GrayImage(10, 10, 1), tmpl, {5, 5}), Errc::InvalidInput);
    EXPECT_ERRC(track_nose(img, tmpl, {20, 20}, 0), Errc::InvalidInput);
}

TEST(MatchTemplate, SelfIsGlobalMaximum) {
    Gen g(45);
    for (int trial = 0; trial < 20; ++trial) {
        const GrayImage img = g.image(60, 50);
        const Rect patch{g.uniform(0, 45), g.uniform(0, 35), 15, 15};
        const auto m = match_template(img, crop(img, patch), img.bounds());
        EXPECT_EQ(m.center, (Point{patch.x + 7, patch.y + 7}));
        EXPECT_NEAR(m.correlation, 1.0, 1e-9);
    }
    // A flat window correlates as 0 and a flat template never matches.
    const auto flat = match_template(GrayImage(20, 20, 5), g.image(5, 5), {0, 0, 20, 20});
    EXPECT_EQ(flat.correlation, 0.0);
    EXPECT_EQ(centered_square({0, 0}, 10, 40, 40), (Rect{0, 0, 10, 10}));
    EXPECT_EQ(centered_square({39, 39}, 10, 40, 40), (Rect{30, 30, 10, 10}));
    EXPECT_EQ(centered_square({20, 20}, 50, 40, 40), (Rect{0, 0, 40, 40}));
}
