/**
 * @file image.hpp
 * @brief Pixel-buffer primitives: grayscale images, integral images,
 *        constant-time rectangle sums and patch normalization.
 */
#pragma once

#include "facehci/error.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace facehci {

struct Point {
    int x = 0;
    int y = 0;
    friend bool operator==(const Point&, const Point&) = default;
};

struct PointF {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const PointF&, const PointF&) = default;
};

/// Axis-aligned rectangle, top-left corner plus extent.
struct Rect {
    int x = 0;
    int y = 0;
    int w = 1;
    int h = 1;

    int right() const noexcept { return x + w; }   // exclusive
    int bottom() const noexcept { return y + h; }  // exclusive
    long long area() const noexcept { return static_cast<long long>(w) * h; }
    bool contains(Point p) const noexcept { return p.x >= x && p.x < right() && p.y >= y && p.y < bottom(); }

    friend bool operator==(const Rect&, const Rect&) = default;
};

// =============================================================================
// GrayImage
// =============================================================================

class GrayImage {
public:
    GrayImage() = default;

    GrayImage(int width, int height, std::uint8_t fill = 0) : width_(width), height_(height) {
        require(width >= 1 && height >= 1, Errc::InvalidInput, "image dimensions must be >= 1");
        data_.assign(static_cast<std::size_t>(width) * height, fill);
    }

    GrayImage(int width, int height, std::vector<std::uint8_t> data)
        : width_(width), height_(height), data_(std::move(data)) {
        require(width >= 1 && height >= 1, Errc::InvalidInput, "image dimensions must be >= 1");
        require(data_.size() == static_cast<std::size_t>(width) * height, Errc::InvalidInput,
                "pixel buffer length must equal width*height");
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return data_.empty(); }
    Rect bounds() const noexcept { return {0, 0, width_, height_}; }

    std::uint8_t at(int x, int y) const noexcept { return data_[index(x, y)]; }
    std::uint8_t& at(int x, int y) noexcept { return data_[index(x, y)]; }

    std::span<const std::uint8_t> pixels() const noexcept { return data_; }
    std::span<std::uint8_t> pixels() noexcept { return data_; }
    const std::uint8_t* row(int y) const noexcept { return data_.data() + static_cast<std::size_t>(y) * width_; }

    friend bool operator==(const GrayImage&, const GrayImage&) = default;

private:
    std::size_t index(int x, int y) const noexcept {
        assert(x >= 0 && x < width_ && y >= 0 && y < height_);
        return static_cast<std::size_t>(y) * width_ + x;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

inline bool inside(const Rect& r, int width, int height) noexcept {
    return r.w >= 1 && r.h >= 1 && r.x >= 0 && r.y >= 0 && r.right() <= width && r.bottom() <= height;
}

/// Clip a rectangle to [0,width) x [0,height). May return w or h == 0.
inline Rect clip(const Rect& r, int width, int height) noexcept {
    int x0 = std::clamp(r.x, 0, width);
    int y0 = std::clamp(r.y, 0, height);
    int x1 = std::clamp(r.right(), 0, width);
    int y1 = std::clamp(r.bottom(), 0, height);
    return {x0, y0, std::max(0, x1 - x0), std::max(0, y1 - y0)};
}

inline GrayImage crop(const GrayImage& img, const Rect& r) {
    require(inside(r, img.width(), img.height()), Errc::InvalidInput, "crop rect outside image");
    GrayImage out(r.w, r.h);
    for (int y = 0; y < r.h; ++y) {
        const std::uint8_t* src = img.row(r.y + y) + r.x;
        std::copy(src, src + r.w, &out.at(0, y));
    }
    return out;
}

/// Nearest-neighbour resample of `src_rect` (may extend past the image;
/// coordinates are clamped to the border) into a width x height image.
inline GrayImage resample_nearest(const GrayImage& img, const Rect& src_rect, int width, int height) {
    require(src_rect.w >= 1 && src_rect.h >= 1, Errc::InvalidInput, "empty source rect");
    GrayImage out(width, height);
    for (int y = 0; y < height; ++y) {
        int sy = src_rect.y + static_cast<int>((static_cast<long long>(2 * y + 1) * src_rect.h) / (2LL * height));
        sy = std::clamp(sy, 0, img.height() - 1);
        for (int x = 0; x < width; ++x) {
            int sx = src_rect.x + static_cast<int>((static_cast<long long>(2 * x + 1) * src_rect.w) / (2LL * width));
            sx = std::clamp(sx, 0, img.width() - 1);
            out.at(x, y) = img.at(sx, sy);
        }
    }
    return out;
}

// =============================================================================
// Grayscale conversion (BT.601 luma)
// =============================================================================

inline GrayImage to_grayscale(std::span<const std::uint8_t> rgb, int width, int height) {
    require(width >= 1 && height >= 1, Errc::InvalidInput, "image dimensions must be >= 1");
    require(rgb.size() == 3ULL * width * height, Errc::InvalidInput, "RGB buffer length must be 3*width*height");
    GrayImage out(width, height);
    auto dst = out.pixels();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        double y = 0.299 * rgb[3 * i] + 0.587 * rgb[3 * i + 1] + 0.114 * rgb[3 * i + 2];
        dst[i] = static_cast<std::uint8_t>(std::clamp(std::lround(y), 0L, 255L));
    }
    return out;
}

// =============================================================================
// Integral image
// =============================================================================

/// Summed-area table: at(x, y) is the sum of every source pixel with
/// x' <= x and y' <= y. Lookups with a negative coordinate read as 0.
class IntegralImage {
public:
    using value_type = std::int64_t;

    IntegralImage() = default;
    IntegralImage(int width, int height, std::vector<value_type> data)
        : width_(width), height_(height), data_(std::move(data)) {
        assert(data_.size() == static_cast<std::size_t>(width) * height);
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }

    value_type at(int x, int y) const noexcept {
        if (x < 0 || y < 0) return 0;
        assert(x < width_ && y < height_);
        return data_[static_cast<std::size_t>(y) * width_ + x];
    }

    value_type total() const noexcept { return data_.empty() ? 0 : data_.back(); }
    std::span<const value_type> values() const noexcept { return data_; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<value_type> data_;
};

/// One pass: s(x,y) = s(x,y-1) + i(x,y); ii(x,y) = ii(x-1,y) + s(x,y),
/// with s(x,-1) = 0 and ii(-1,y) = 0. Only one row of s is kept.
inline IntegralImage integral_image(const GrayImage& img) {
    const int w = img.width();
    const int h = img.height();
    std::vector<IntegralImage::value_type> ii(static_cast<std::size_t>(w) * h);
    std::vector<IntegralImage::value_type> column_sum(static_cast<std::size_t>(w), 0);
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* src = img.row(y);
        IntegralImage::value_type left = 0;
        IntegralImage::value_type* dst = ii.data() + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            column_sum[x] += src[x];
            left += column_sum[x];
            dst[x] = left;
        }
    }
    // 4096*4096*255 < 2^33; anything a GrayImage can hold fits in 64 bits.
    assert(ii.empty() || ii.back() >= 0);
    return IntegralImage(w, h, std::move(ii));
}

/// Sum of the source pixels inside `r` from four corner reads.
inline std::int64_t rect_sum(const IntegralImage& ii, const Rect& r) {
    require(inside(r, ii.width(), ii.height()), Errc::InvalidInput, "rect outside integral image");
    const int x1 = r.x + r.w - 1;
    const int y1 = r.y + r.h - 1;
    return (ii.at(x1, y1) + ii.at(r.x - 1, r.y - 1)) - (ii.at(r.x - 1, y1) + ii.at(x1, r.y - 1));
}

// =============================================================================
// Patch normalization
// =============================================================================

inline constexpr double kPatchMean = 128.0;
inline constexpr double kPatchStd = 64.0;

/// Real-valued patch with mean 128 and population standard deviation 64.
struct NormalizedPatch {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    double at(int x, int y) const noexcept { return data[static_cast<std::size_t>(y) * width + x]; }
};

inline NormalizedPatch normalize_values(std::span<const double> values, int width, int height) {
    require(width >= 1 && height >= 1 && values.size() == static_cast<std::size_t>(width) * height,
            Errc::InvalidInput, "patch size mismatch");
    require(values.size() >= 2, Errc::InvalidInput, "patch needs at least two pixels");
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= n;
    const double sd = std::sqrt(var);
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) fail(Errc::DegeneratePatch, "zero-variance patch");

    NormalizedPatch out{width, height, std::vector<double>(values.size())};
    const double scale = kPatchStd / sd;
    for (std::size_t i = 0; i < values.size(); ++i) out.data[i] = (values[i] - mean) * scale + kPatchMean;
    return out;
}

inline NormalizedPatch normalize_patch(const GrayImage& patch) {
    std::vector<double> values(patch.pixels().begin(), patch.pixels().end());
    return normalize_values(values, patch.width(), patch.height());
}

inline NormalizedPatch normalize_patch(const NormalizedPatch& patch) {
    return normalize_values(patch.data, patch.width, patch.height);
}

} // namespace facehci
