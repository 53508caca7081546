/**
 * @file ssr.hpp
 * @brief Six-segmented rectangular (SSR) filter: between-the-eyes candidate
 *        scan, connected-component labeling, half-template mismatch scoring
 *        and final selection.
 *
 * Segment layout inside the w x h filter rectangle (image coordinates):
 *
 *     +----+----+----+
 *     | B1 | B2 | B3 |     eyes and eyebrows sit in B1 / B3,
 *     +----+----+----+     the bridge of the nose in B2
 *     | B4 | B5 | B6 |     cheekbones in B4 / B6, nose in B5
 *     +----+----+----+
 */
#pragma once

#include "facehci/error.hpp"
#include "facehci/image.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace facehci {

// =============================================================================
// Geometry
// =============================================================================

class SsrGeometry {
public:
    SsrGeometry() = default;
    SsrGeometry(int width, int height) : w_(width), h_(height) {
        require(width >= 6 && height >= 4, Errc::InvalidInput, "SSR filter must be at least 6x4");
        // Equal-area segments keep S_n vs S_er/S_el and S_e vs S_c comparable.
        require(width % 3 == 0 && height % 2 == 0, Errc::InvalidInput,
                "SSR filter width must be divisible by 3 and height by 2");
    }

    /// Base geometry scaled by `scale`, rounded per segment.
    static SsrGeometry scaled(const SsrGeometry& base, double scale) {
        const int sw = std::max(2, static_cast<int>(std::lround(base.segment_w() * scale)));
        const int sh = std::max(2, static_cast<int>(std::lround(base.segment_h() * scale)));
        return SsrGeometry(sw * 3, sh * 2);
    }

    int w() const noexcept { return w_; }
    int h() const noexcept { return h_; }
    int segment_w() const noexcept { return w_ / 3; }
    int segment_h() const noexcept { return h_ / 2; }
    int half_w_ceil() const noexcept { return (w_ + 1) / 2; }
    int half_h_ceil() const noexcept { return (h_ + 1) / 2; }

    /// Filter rectangle whose centre is `c`.
    Rect rect_at(Point c) const noexcept { return {c.x - w_ / 2, c.y - h_ / 2, w_, h_}; }

    /// Segment B1..B6 (index 0..5) of the filter centred at `c`.
    Rect segment(Point c, int index) const noexcept {
        const Rect r = rect_at(c);
        const int col = index % 3;
        const int row = index / 3;
        return {r.x + col * segment_w(), r.y + row * segment_h(), segment_w(), segment_h()};
    }

    friend bool operator==(const SsrGeometry&, const SsrGeometry&) = default;

private:
    int w_ = 24;
    int h_ = 12;
};

/// Segment sums S_b1..S_b6 and the bright-dark relations between them.
struct SegmentSums {
    std::array<std::int64_t, 6> s{};

    std::int64_t nose() const noexcept { return s[1] + s[4]; }
    std::int64_t eye_right() const noexcept { return s[0] + s[3]; }
    std::int64_t eye_left() const noexcept { return s[2] + s[5]; }
    std::int64_t eyes() const noexcept { return s[0] + s[1] + s[2]; }
    std::int64_t cheeks() const noexcept { return s[3] + s[4] + s[5]; }

    /// Nose column brighter than both side columns, eye row darker than
    /// cheek row. All strict.
    bool passes() const noexcept { return nose() > eye_right() && nose() > eye_left() && eyes() < cheeks(); }
};

inline bool ssr_fits(Point c, const SsrGeometry& geom, int width, int height) noexcept {
    return inside(geom.rect_at(c), width, height);
}

inline SegmentSums segment_sums(const IntegralImage& ii, Point c, const SsrGeometry& geom) {
    require(ssr_fits(c, geom, ii.width(), ii.height()), Errc::InvalidInput, "SSR filter out of bounds");
    SegmentSums out;
    for (int i = 0; i < 6; ++i) out.s[i] = rect_sum(ii, geom.segment(c, i));
    return out;
}

inline bool ssr_passes(const IntegralImage& ii, Point center, const SsrGeometry& geom) {
    return segment_sums(ii, center, geom).passes();
}

// =============================================================================
// Candidate scan
// =============================================================================

struct CandidateMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    CandidateMask() = default;
    CandidateMask(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}

    bool at(int x, int y) const noexcept { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool v) noexcept { bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
    std::size_t count() const noexcept {
        std::size_t n = 0;
        for (auto b : bits) n += b;
        return n;
    }
};

/// Evaluates the SSR predicate at every centre in the interior band
/// [ceil(w/2), W - ceil(w/2)) x [ceil(h/2), H - ceil(h/2)); the border stays false.
inline CandidateMask scan_candidates(const IntegralImage& ii, const SsrGeometry& geom) {
    require(ii.width() > geom.w() && ii.height() > geom.h(), Errc::InvalidInput, "image smaller than SSR filter");
    CandidateMask mask(ii.width(), ii.height());
    const int sw = geom.segment_w();
    const int sh = geom.segment_h();
    const int x_begin = geom.half_w_ceil();
    const int x_end = ii.width() - geom.half_w_ceil();
    const int y_begin = geom.half_h_ceil();
    const int y_end = ii.height() - geom.half_h_ceil();

    // Corner grid of the 3x2 segment layout: columns x0..x3, rows y0..y2.
    auto box = [&](int xa, int ya, int xb, int yb) {
        return ii.at(xb - 1, yb - 1) + ii.at(xa - 1, ya - 1) - ii.at(xa - 1, yb - 1) - ii.at(xb - 1, ya - 1);
    };
    for (int cy = y_begin; cy < y_end; ++cy) {
        const int y0 = cy - geom.h() / 2;
        const int y1 = y0 + sh;
        const int y2 = y1 + sh;
        for (int cx = x_begin; cx < x_end; ++cx) {
            const int x0 = cx - geom.w() / 2;
            SegmentSums s;
            for (int col = 0; col < 3; ++col) {
                const int xa = x0 + col * sw;
                s.s[col] = box(xa, y0, xa + sw, y1);
                s.s[col + 3] = box(xa, y1, xa + sw, y2);
            }
            if (s.passes()) mask.set(cx, cy, true);
        }
    }
    return mask;
}

// =============================================================================
// Labeling
// =============================================================================

struct Cluster {
    std::vector<Point> pixels;
    Rect bbox;

    long long area() const noexcept { return static_cast<long long>(pixels.size()); }
    PointF centroid() const noexcept {
        double sx = 0.0, sy = 0.0;
        for (const auto& p : pixels) {
            sx += p.x;
            sy += p.y;
        }
        const double n = static_cast<double>(pixels.size());
        return {sx / n, sy / n};
    }
};

/// Maximal 8-connected components of the true pixels, ordered by
/// (min y, then min x) of each component. Ties keep the raster order of the
/// first pixel found.
inline std::vector<Cluster> label_clusters(const CandidateMask& mask) {
    std::vector<Cluster> clusters;
    std::vector<std::uint8_t> seen(mask.bits.size(), 0);
    std::vector<Point> stack;
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * mask.width + x;
            if (!mask.bits[idx] || seen[idx]) continue;
            Cluster c;
            int min_x = x, max_x = x, min_y = y, max_y = y;
            seen[idx] = 1;
            stack.push_back({x, y});
            while (!stack.empty()) {
                const Point p = stack.back();
                stack.pop_back();
                c.pixels.push_back(p);
                min_x = std::min(min_x, p.x);
                max_x = std::max(max_x, p.x);
                min_y = std::min(min_y, p.y);
                max_y = std::max(max_y, p.y);
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = p.x + dx;
                        const int ny = p.y + dy;
                        if (nx < 0 || ny < 0 || nx >= mask.width || ny >= mask.height) continue;
                        const std::size_t n = static_cast<std::size_t>(ny) * mask.width + nx;
                        if (mask.bits[n] && !seen[n]) {
                            seen[n] = 1;
                            stack.push_back({nx, ny});
                        }
                    }
                }
            }
            c.bbox = {min_x, min_y, max_x - min_x + 1, max_y - min_y + 1};
            clusters.push_back(std::move(c));
        }
    }
    std::stable_sort(clusters.begin(), clusters.end(), [](const Cluster& a, const Cluster& b) {
        return std::pair{a.bbox.y, a.bbox.x} < std::pair{b.bbox.y, b.bbox.x};
    });
    return clusters;
}

// =============================================================================
// Half-template mismatch
// =============================================================================

inline constexpr int kPatchW = 32;
inline constexpr int kPatchH = 16;
inline constexpr int kHalfW = kPatchW / 2;

/// Maps half-template coordinates (i = column within the half, j = row) to
/// the column of the full 32x16 patch. The only place the half layout lives.
inline int half_column(bool right_half, int i) noexcept { return right_half ? kHalfW + i : i; }

/// Reference appearance of the between-the-eyes region, split into the
/// image-left and image-right 16x16 halves. `t` holds normalized reference
/// values and `v` the per-pixel variances that weight the squared error.
struct EyeTemplatePair {
    std::vector<float> t_left, t_right;
    std::vector<float> v_left, v_right;

    static constexpr std::size_t kHalfSize = static_cast<std::size_t>(kHalfW) * kPatchH;

    void validate() const {
        require(t_left.size() == kHalfSize && t_right.size() == kHalfSize && v_left.size() == kHalfSize &&
                    v_right.size() == kHalfSize,
                Errc::InvalidTemplate, "half templates must be 16x16");
        for (const auto* v : {&v_left, &v_right})
            for (float x : *v)
                if (!(x > 0.0f)) fail(Errc::InvalidTemplate, "template variance must be > 0");
    }

    friend bool operator==(const EyeTemplatePair&, const EyeTemplatePair&) = default;
};

struct MismatchScore {
    double d_left = 0.0;
    double d_right = 0.0;
    double total() const noexcept { return d_left + d_right; }
};

/// Splits a 32x16 patch into its two halves, each independently normalized.
inline std::array<NormalizedPatch, 2> split_halves(std::span<const double> patch) {
    std::array<NormalizedPatch, 2> out;
    for (int side = 0; side < 2; ++side) {
        std::vector<double> half(EyeTemplatePair::kHalfSize);
        for (int j = 0; j < kPatchH; ++j)
            for (int i = 0; i < kHalfW; ++i)
                half[static_cast<std::size_t>(j) * kHalfW + i] =
                    patch[static_cast<std::size_t>(j) * kPatchW + half_column(side == 1, i)];
        out[side] = normalize_values(half, kHalfW, kPatchH);
    }
    return out;
}

inline MismatchScore template_mismatch(const NormalizedPatch& patch, const EyeTemplatePair& tmpl) {
    require(patch.width == kPatchW && patch.height == kPatchH, Errc::InvalidInput, "candidate patch must be 32x16");
    tmpl.validate();
    const auto halves = split_halves(patch.data);
    auto weighted = [](const NormalizedPatch& p, const std::vector<float>& t, const std::vector<float>& v) {
        double d = 0.0;
        for (std::size_t k = 0; k < p.data.size(); ++k) {
            const double diff = p.data[k] - t[k];
            d += diff * diff / v[k];
        }
        return d;
    };
    return {weighted(halves[0], tmpl.t_left, tmpl.v_left), weighted(halves[1], tmpl.t_right, tmpl.v_right)};
}

inline MismatchScore template_mismatch(const GrayImage& patch, const EyeTemplatePair& tmpl) {
    require(patch.width() == kPatchW && patch.height() == kPatchH, Errc::InvalidInput, "candidate patch must be 32x16");
    NormalizedPatch raw{kPatchW, kPatchH, std::vector<double>(patch.pixels().begin(), patch.pixels().end())};
    return template_mismatch(raw, tmpl);
}

/// Builds a template from training patches (each 32x16): t is the mean of
/// the normalized halves, v their per-pixel variance floored at `min_var`.
inline EyeTemplatePair build_template(const std::vector<GrayImage>& patches, double min_var = 1.0) {
    require(!patches.empty(), Errc::InvalidInput, "need at least one training patch");
    std::array<std::vector<double>, 2> sum, sum_sq;
    for (auto& v : sum) v.assign(EyeTemplatePair::kHalfSize, 0.0);
    for (auto& v : sum_sq) v.assign(EyeTemplatePair::kHalfSize, 0.0);
    for (const auto& p : patches) {
        require(p.width() == kPatchW && p.height() == kPatchH, Errc::InvalidInput, "training patch must be 32x16");
        std::vector<double> raw(p.pixels().begin(), p.pixels().end());
        const auto halves = split_halves(raw);
        for (int side = 0; side < 2; ++side)
            for (std::size_t k = 0; k < EyeTemplatePair::kHalfSize; ++k) {
                sum[side][k] += halves[side].data[k];
                sum_sq[side][k] += halves[side].data[k] * halves[side].data[k];
            }
    }
    const double n = static_cast<double>(patches.size());
    EyeTemplatePair out;
    std::array<std::vector<float>*, 2> ts{&out.t_left, &out.t_right};
    std::array<std::vector<float>*, 2> vs{&out.v_left, &out.v_right};
    for (int side = 0; side < 2; ++side) {
        ts[side]->resize(EyeTemplatePair::kHalfSize);
        vs[side]->resize(EyeTemplatePair::kHalfSize);
        for (std::size_t k = 0; k < EyeTemplatePair::kHalfSize; ++k) {
            const double mean = sum[side][k] / n;
            const double var = std::max(0.0, sum_sq[side][k] / n - mean * mean);
            (*ts[side])[k] = static_cast<float>(mean);
            (*vs[side])[k] = static_cast<float>(std::max(min_var, var));
        }
    }
    return out;
}

// =============================================================================
// Template file: "SSRT" u8 version, u16 width, u16 height, f32 t (left, right),
// f32 v (left, right). Little-endian throughout.
// =============================================================================

namespace detail {

inline void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>(v >> 8));
}

inline void put_f32(std::string& out, float f) {
    const auto bits = std::bit_cast<std::uint32_t>(f);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

inline std::uint16_t get_u16(const std::string& in, std::size_t at) {
    return static_cast<std::uint16_t>(static_cast<unsigned char>(in[at]) |
                                      (static_cast<unsigned char>(in[at + 1]) << 8));
}

inline float get_f32(const std::string& in, std::size_t at) {
    std::uint32_t bits = 0;
    for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
    return std::bit_cast<float>(bits);
}

} // namespace detail

inline constexpr std::uint8_t kTemplateVersion = 1;

inline std::string encode_template(const EyeTemplatePair& tmpl) {
    tmpl.validate();
    std::string out = "SSRT";
    out.push_back(static_cast<char>(kTemplateVersion));
    detail::put_u16(out, kPatchW);
    detail::put_u16(out, kPatchH);
    for (const auto* v : {&tmpl.t_left, &tmpl.t_right, &tmpl.v_left, &tmpl.v_right})
        for (float f : *v) detail::put_f32(out, f);
    return out;
}

inline EyeTemplatePair decode_template(const std::string& bytes) {
    require(bytes.size() >= 9 && bytes.compare(0, 4, "SSRT") == 0, Errc::InvalidTemplate, "missing SSRT magic");
    require(static_cast<std::uint8_t>(bytes[4]) == kTemplateVersion, Errc::InvalidTemplate, "unsupported SSRT version");
    const int w = detail::get_u16(bytes, 5);
    const int h = detail::get_u16(bytes, 7);
    require(w == kPatchW && h == kPatchH, Errc::InvalidTemplate, "SSRT template must be 32x16");
    const std::size_t n = EyeTemplatePair::kHalfSize;
    require(bytes.size() == 9 + 4 * 4 * n, Errc::InvalidTemplate, "SSRT payload length mismatch");
    EyeTemplatePair tmpl;
    std::size_t at = 9;
    for (auto* v : {&tmpl.t_left, &tmpl.t_right, &tmpl.v_left, &tmpl.v_right}) {
        v->resize(n);
        for (std::size_t k = 0; k < n; ++k, at += 4) (*v)[k] = detail::get_f32(bytes, at);
    }
    tmpl.validate();
    return tmpl;
}

// =============================================================================
// Candidate selection
// =============================================================================

struct BteDetection {
    Point bte;
    Point left_eye;   // image-left eye (segment B1)
    Point right_eye;  // image-right eye (segment B3)
    double score = 0.0;
    SsrGeometry geom;
    long long area = 0;
    MismatchScore mismatch;
};

/// Extraction window around a candidate: filter width plus an 8 px margin,
/// half as tall, centred on `center`.
inline Rect candidate_window(PointF center, const SsrGeometry& geom) {
    const int w = geom.w() + 8;
    const int h = std::max(2, w / 2);
    const int x = static_cast<int>(std::lround(center.x)) - w / 2;
    const int y = static_cast<int>(std::lround(center.y)) - h / 2;
    return {x, y, w, h};
}

inline GrayImage extract_candidate_patch(const GrayImage& gray, PointF center, const SsrGeometry& geom) {
    return resample_nearest(gray, candidate_window(center, geom), kPatchW, kPatchH);
}

struct Selection {
    std::size_t cluster = 0;
    Point center;
    double score = 0.0;  // area-weighted
    MismatchScore mismatch;
};

/// Scores every cluster as (accept_threshold - (d_left + d_right)); only
/// positive scores count, weighted by cluster area, and the largest wins.
inline std::optional<Selection> select_bte(const std::vector<Cluster>& clusters, const GrayImage& gray,
                                           const SsrGeometry& geom, const EyeTemplatePair& tmpl,
                                           double accept_threshold) {
    std::optional<Selection> best;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
        const PointF c = clusters[i].centroid();
        MismatchScore m;
        try {
            m = template_mismatch(extract_candidate_patch(gray, c, geom), tmpl);
        } catch (const Error& e) {
            if (e.code() == Errc::DegeneratePatch) continue;  // flat patch: not a face
            throw;
        }
        const double raw = accept_threshold - m.total();
        if (!(raw > 0.0)) continue;
        const double weighted = raw * static_cast<double>(clusters[i].area());
        if (!best || weighted > best->score) {
            best = Selection{i, {static_cast<int>(std::lround(c.x)), static_cast<int>(std::lround(c.y))}, weighted, m};
        }
    }
    return best;
}

// =============================================================================
// Eye localization
// =============================================================================

namespace detail {

/// Centre of the darkest 3x3 neighbourhood inside `seg`. Ties go to the
/// centre closest to the segment centre, then smallest x, then smallest y.
inline Point darkest_neighbourhood(const GrayImage& gray, const Rect& seg) {
    const int x_lo = seg.x + (seg.w >= 3 ? 1 : 0);
    const int x_hi = seg.right() - (seg.w >= 3 ? 1 : 0);
    const int y_lo = seg.y + (seg.h >= 3 ? 1 : 0);
    const int y_hi = seg.bottom() - (seg.h >= 3 ? 1 : 0);
    const double cx = seg.x + (seg.w - 1) / 2.0;
    const double cy = seg.y + (seg.h - 1) / 2.0;
    Point best{x_lo, y_lo};
    int best_sum = 1 << 30;
    double best_dist = 0.0;
    for (int y = y_lo; y < y_hi; ++y) {
        for (int x = x_lo; x < x_hi; ++x) {
            int sum = 0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int px = std::clamp(x + dx, seg.x, seg.right() - 1);
                    const int py = std::clamp(y + dy, seg.y, seg.bottom() - 1);
                    sum += gray.at(px, py);
                }
            const double dist = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            if (sum < best_sum || (sum == best_sum && dist < best_dist)) {
                best_sum = sum;
                best_dist = dist;
                best = {x, y};
            }
        }
    }
    return best;
}

} // namespace detail

/// Darkest 3x3 neighbourhood in B1 (image-left eye) and B3 (image-right eye).
inline std::pair<Point, Point> locate_eyes(const GrayImage& gray, Point bte, const SsrGeometry& geom) {
    require(ssr_fits(bte, geom, gray.width(), gray.height()), Errc::InvalidInput, "SSR filter at BTE leaves image");
    return {detail::darkest_neighbourhood(gray, geom.segment(bte, 0)),
            detail::darkest_neighbourhood(gray, geom.segment(bte, 2))};
}

// =============================================================================
// Multi-scale scan
// =============================================================================

struct ScanDebug {
    CandidateMask mask;  // candidate mask at the winning (or first) scale
    std::size_t clusters = 0;
};

/// scan -> label -> select at every geometry; the highest area-weighted score
/// wins, ties going to the smaller geometry.
inline std::optional<BteDetection> multiscale_scan(const GrayImage& gray, std::vector<SsrGeometry> scales,
                                                   const EyeTemplatePair& tmpl, double accept_threshold,
                                                   ScanDebug* debug = nullptr) {
    require(!scales.empty(), Errc::InvalidInput, "need at least one SSR scale");
    std::stable_sort(scales.begin(), scales.end(), [](const SsrGeometry& a, const SsrGeometry& b) {
        return std::pair(a.w() * a.h(), a.w()) < std::pair(b.w() * b.h(), b.w());
    });
    const IntegralImage ii = integral_image(gray);
    std::optional<BteDetection> best;
    for (const auto& geom : scales) {
        if (gray.width() <= geom.w() || gray.height() <= geom.h()) continue;
        CandidateMask mask = scan_candidates(ii, geom);
        const auto clusters = label_clusters(mask);
        const auto sel = select_bte(clusters, gray, geom, tmpl, accept_threshold);
        if (debug && debug->mask.bits.empty()) *debug = {mask, clusters.size()};
        if (!sel || !ssr_fits(sel->center, geom, gray.width(), gray.height())) continue;
        if (best && !(sel->score > best->score)) continue;
        const auto [left, right] = locate_eyes(gray, sel->center, geom);
        best = BteDetection{sel->center, left, right, sel->score, geom, clusters[sel->cluster].area(), sel->mismatch};
        if (debug) *debug = {std::move(mask), clusters.size()};
    }
    return best;
}

} // namespace facehci
