#pragma once

#include "facehci/error.hpp"
#include "facehci/image.hpp"

#include <cmath>
#include <vector>

namespace facehci {

struct MatchResult {
    Point center;              // centre of the best template placement
    double correlation = 0.0;  // zero-mean normalized cross-correlation, [-1, 1]
};

/// Square region of side `side` centred on `c`, shifted (not shrunk) to stay
/// inside the image when possible.
inline Rect centered_square(Point c, int side, int width, int height) {
    Rect r{c.x - side / 2, c.y - side / 2, side, side};
    if (r.right() > width) r.x = width - side;
    if (r.bottom() > height) r.y = height - side;
    r.x = std::max(r.x, 0);
    r.y = std::max(r.y, 0);
    return clip(r, width, height);
}

/// Exhaustive zero-mean NCC of `tmpl` over every placement fully inside
/// `search`. A flat window correlates as 0. Ties keep the first placement in
/// raster order.
inline MatchResult match_template(const GrayImage& img, const GrayImage& tmpl, const Rect& search) {
    const Rect region = clip(search, img.width(), img.height());
    require(region.w >= tmpl.width() && region.h >= tmpl.height(), Errc::InvalidInput,
            "search region smaller than template");
    const int tw = tmpl.width();
    const int th = tmpl.height();
    const double n = static_cast<double>(tw) * th;

    std::vector<double> t(static_cast<std::size_t>(tw) * th);
    double t_mean = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) t_mean += tmpl.pixels()[k];
    t_mean /= n;
    double t_energy = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        t[k] = tmpl.pixels()[k] - t_mean;
        t_energy += t[k] * t[k];
    }

    MatchResult best{{region.x + tw / 2, region.y + th / 2}, -2.0};
    for (int y = region.y; y + th <= region.bottom(); ++y) {
        for (int x = region.x; x + tw <= region.right(); ++x) {
            double sum = 0.0, sum_sq = 0.0, cross = 0.0;
            for (int j = 0; j < th; ++j) {
                const std::uint8_t* row = img.row(y + j) + x;
                const double* trow = t.data() + static_cast<std::size_t>(j) * tw;
                for (int i = 0; i < tw; ++i) {
                    const double v = row[i];
                    sum += v;
                    sum_sq += v * v;
                    cross += v * trow[i];
                }
            }
            const double w_energy = sum_sq - sum * sum / n;
            double corr = 0.0;
            if (w_energy > 1e-9 && t_energy > 1e-9) corr = cross / std::sqrt(w_energy * t_energy);
            corr = std::clamp(corr, -1.0, 1.0);
            if (corr > best.correlation) best = {{x + tw / 2, y + th / 2}, corr};
        }
    }
    return best;
}

} // namespace facehci
