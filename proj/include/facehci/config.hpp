/**
 * @file config.hpp
 * @brief PipelineConfig: every tunable threshold in one JSON document.
 *
 * Unknown keys are rejected so typos fail fast. Doubles serialize through
 * nlohmann::json's shortest round-trip formatting, so a dump/parse cycle is
 * bit-exact.
 */
#pragma once

#include "facehci/error.hpp"
#include "facehci/pointer.hpp"
#include "facehci/ssr.hpp"

#include <json.hpp>

#include <set>
#include <string>
#include <vector>

namespace facehci {

struct SsrConfig {
    int width = 24;
    int height = 12;
    std::vector<double> scales{1.0, 1.5, 2.0, 3.0};
    double accept_threshold = 2000.0;
    std::string template_path;  // empty: built-in synthetic template

    std::vector<SsrGeometry> geometries() const {
        std::vector<SsrGeometry> out;
        const SsrGeometry base(width, height);
        for (double s : scales) out.push_back(SsrGeometry::scaled(base, s));
        return out;
    }
    friend bool operator==(const SsrConfig&, const SsrConfig&) = default;
};

struct NoseConfig {
    int s2_width = 0;             // 0: ceil(ROI side / 8)
    int template_size = 15;
    int search_factor = 2;
    double min_confidence = 0.3;
    int lost_frames = 15;
    friend bool operator==(const NoseConfig&, const NoseConfig&) = default;
};

struct HoughConfig {
    int theta_bins = 180;
    double rho_bin_size = 1.0;
    int top_k = 8;
    double merge_theta_deg = 10.0;
    double merge_rho = 5.0;
    int edge_threshold = 120;
    friend bool operator==(const HoughConfig&, const HoughConfig&) = default;
};

struct BlinkConfig {
    int pixel_threshold = 15;
    double count_fraction = 0.08;    // of eye-ROI pixels
    int min_still_frames = 3;
    int blink_length_frames = 10;
    double voluntary_min_ms = 250.0;
    double move_eps = 0.5;           // px per frame; any whole-pixel shift counts
    double reinit_threshold = 0.55;
    int template_margin = 3;
    int ring_buffer = 32;
    int eye_template_size = 0;       // 0: odd size near IOD / 2
    int search_radius = 0;           // 0: eye template side
    bool user_left_is_image_right = true;
    friend bool operator==(const BlinkConfig&, const BlinkConfig&) = default;
};

struct PipelineConfig {
    double frame_rate = 30.0;
    SsrConfig ssr;
    NoseConfig nose;
    HoughConfig hough;
    BlinkConfig blink;
    PointerConfig pointer;

    void validate() const;
    friend bool operator==(const PipelineConfig& a, const PipelineConfig& b) {
        const auto& pa = a.pointer;
        const auto& pb = b.pointer;
        return a.frame_rate == b.frame_rate && a.ssr == b.ssr && a.nose == b.nose && a.hough == b.hough &&
               a.blink == b.blink && pa.mode == pb.mode && pa.gain == pb.gain && pa.mirror_x == pb.mirror_x &&
               pa.screen_width == pb.screen_width && pa.screen_height == pb.screen_height &&
               pa.dead_zone == pb.dead_zone && pa.smoothing == pb.smoothing;
    }
};

namespace detail {

inline void check(bool ok, const std::string& what) {
    if (!ok) fail(Errc::BadConfig, what);
}

/// Reads keys of `obj` into fields, rejecting anything not listed.
class ObjectReader {
public:
    ObjectReader(const nlohmann::json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        check(obj_.is_object(), path_ + " must be an object");
    }

    /// Call after the last read; fails on any key nobody asked for.
    void finish() const {
        for (const auto& [key, value] : obj_.items())
            if (!seen_.count(key)) fail(Errc::BadConfig, "unknown key " + path_ + "." + key);
    }

    template <typename T>
    void read(const char* key, T& out) {
        seen_.insert(key);
        auto it = obj_.find(key);
        if (it == obj_.end()) return;
        try {
            out = it->template get<T>();
        } catch (const nlohmann::json::exception&) {
            fail(Errc::BadConfig, "wrong type for " + path_ + "." + key);
        }
    }

    const nlohmann::json* child(const char* key) {
        seen_.insert(key);
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

private:
    const nlohmann::json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

} // namespace detail

inline void PipelineConfig::validate() const {
    using detail::check;
    check(frame_rate > 0.0 && frame_rate <= 240.0, "frame_rate must be in (0, 240]");
    check(ssr.width >= 6 && ssr.width % 3 == 0, "ssr.width must be >= 6 and divisible by 3");
    check(ssr.height >= 4 && ssr.height % 2 == 0, "ssr.height must be >= 4 and even");
    check(!ssr.scales.empty(), "ssr.scales must not be empty");
    for (double s : ssr.scales) check(s > 0.0 && s <= 16.0, "ssr.scales entries must be in (0, 16]");
    check(ssr.accept_threshold > 0.0, "ssr.accept_threshold must be positive");
    check(nose.s2_width >= 0, "nose.s2_width must be >= 0");
    check(nose.template_size >= 3 && nose.template_size % 2 == 1, "nose.template_size must be odd and >= 3");
    check(nose.search_factor >= 1 && nose.search_factor <= 8, "nose.search_factor must be in [1, 8]");
    check(nose.min_confidence >= 0.0 && nose.min_confidence <= 1.0, "nose.min_confidence must be in [0, 1]");
    check(nose.lost_frames >= 1, "nose.lost_frames must be >= 1");
    check(hough.theta_bins >= 2, "hough.theta_bins must be >= 2");
    check(hough.rho_bin_size > 0.0, "hough.rho_bin_size must be positive");
    check(hough.top_k >= 1, "hough.top_k must be >= 1");
    check(hough.merge_theta_deg >= 0.0 && hough.merge_rho >= 0.0, "hough merge window must be non-negative");
    check(hough.edge_threshold >= 0, "hough.edge_threshold must be >= 0");
    check(blink.pixel_threshold >= 1 && blink.pixel_threshold <= 255, "blink.pixel_threshold must be in [1, 255]");
    check(blink.count_fraction > 0.0 && blink.count_fraction < 1.0, "blink.count_fraction must be in (0, 1)");
    check(blink.min_still_frames >= 0, "blink.min_still_frames must be >= 0");
    check(blink.blink_length_frames >= 1, "blink.blink_length_frames must be >= 1");
    check(blink.voluntary_min_ms > 0.0, "blink.voluntary_min_ms must be positive");
    check(blink.move_eps >= 0.0, "blink.move_eps must be >= 0");
    check(blink.reinit_threshold >= -1.0 && blink.reinit_threshold <= 1.0, "blink.reinit_threshold must be in [-1, 1]");
    check(blink.template_margin >= 1, "blink.template_margin must be >= 1");
    check(blink.ring_buffer >= blink.blink_length_frames + blink.template_margin + 1,
          "blink.ring_buffer must hold a blink window plus the template margin");
    check(blink.eye_template_size == 0 || (blink.eye_template_size >= 3 && blink.eye_template_size % 2 == 1),
          "blink.eye_template_size must be 0 or odd >= 3");
    check(blink.search_radius >= 0, "blink.search_radius must be >= 0");
    check(pointer.gain > 0.0, "pointer.gain must be positive");
    check(pointer.screen_width >= 1 && pointer.screen_height >= 1, "pointer screen must be at least 1x1");
    check(pointer.dead_zone >= 0.0, "pointer.dead_zone must be >= 0");
    check(pointer.smoothing >= 0.0 && pointer.smoothing < 1.0, "pointer.smoothing must be in [0, 1)");
}

inline nlohmann::json to_json(const PipelineConfig& c) {
    using nlohmann::json;
    return json{
        {"frame_rate", c.frame_rate},
        {"ssr",
         {{"width", c.ssr.width},
          {"height", c.ssr.height},
          {"scales", c.ssr.scales},
          {"accept_threshold", c.ssr.accept_threshold},
          {"template_path", c.ssr.template_path}}},
        {"nose",
         {{"s2_width", c.nose.s2_width},
          {"template_size", c.nose.template_size},
          {"search_factor", c.nose.search_factor},
          {"min_confidence", c.nose.min_confidence},
          {"lost_frames", c.nose.lost_frames}}},
        {"hough",
         {{"theta_bins", c.hough.theta_bins},
          {"rho_bin_size", c.hough.rho_bin_size},
          {"top_k", c.hough.top_k},
          {"merge_theta_deg", c.hough.merge_theta_deg},
          {"merge_rho", c.hough.merge_rho},
          {"edge_threshold", c.hough.edge_threshold}}},
        {"blink",
         {{"pixel_threshold", c.blink.pixel_threshold},
          {"count_fraction", c.blink.count_fraction},
          {"min_still_frames", c.blink.min_still_frames},
          {"blink_length_frames", c.blink.blink_length_frames},
          {"voluntary_min_ms", c.blink.voluntary_min_ms},
          {"move_eps", c.blink.move_eps},
          {"reinit_threshold", c.blink.reinit_threshold},
          {"template_margin", c.blink.template_margin},
          {"ring_buffer", c.blink.ring_buffer},
          {"eye_template_size", c.blink.eye_template_size},
          {"search_radius", c.blink.search_radius},
          {"user_left_is_image_right", c.blink.user_left_is_image_right}}},
        {"pointer",
         {{"mode", std::string(to_string(c.pointer.mode))},
          {"gain", c.pointer.gain},
          {"mirror_x", c.pointer.mirror_x},
          {"screen_width", c.pointer.screen_width},
          {"screen_height", c.pointer.screen_height},
          {"dead_zone", c.pointer.dead_zone},
          {"smoothing", c.pointer.smoothing}}},
    };
}

/// Applies the keys present in `j` on top of `base` (partial documents are
/// fine) and validates the result.
inline PipelineConfig merge_config(PipelineConfig c, const nlohmann::json& j) {
    {
        detail::ObjectReader root(j, "config");
        root.read("frame_rate", c.frame_rate);
        if (const auto* s = root.child("ssr")) {
            detail::ObjectReader r(*s, "ssr");
            r.read("width", c.ssr.width);
            r.read("height", c.ssr.height);
            r.read("scales", c.ssr.scales);
            r.read("accept_threshold", c.ssr.accept_threshold);
            r.read("template_path", c.ssr.template_path);
            r.finish();
        }
        if (const auto* s = root.child("nose")) {
            detail::ObjectReader r(*s, "nose");
            r.read("s2_width", c.nose.s2_width);
            r.read("template_size", c.nose.template_size);
            r.read("search_factor", c.nose.search_factor);
            r.read("min_confidence", c.nose.min_confidence);
            r.read("lost_frames", c.nose.lost_frames);
            r.finish();
        }
        if (const auto* s = root.child("hough")) {
            detail::ObjectReader r(*s, "hough");
            r.read("theta_bins", c.hough.theta_bins);
            r.read("rho_bin_size", c.hough.rho_bin_size);
            r.read("top_k", c.hough.top_k);
            r.read("merge_theta_deg", c.hough.merge_theta_deg);
            r.read("merge_rho", c.hough.merge_rho);
            r.read("edge_threshold", c.hough.edge_threshold);
            r.finish();
        }
        if (const auto* s = root.child("blink")) {
            detail::ObjectReader r(*s, "blink");
            r.read("pixel_threshold", c.blink.pixel_threshold);
            r.read("count_fraction", c.blink.count_fraction);
            r.read("min_still_frames", c.blink.min_still_frames);
            r.read("blink_length_frames", c.blink.blink_length_frames);
            r.read("voluntary_min_ms", c.blink.voluntary_min_ms);
            r.read("move_eps", c.blink.move_eps);
            r.read("reinit_threshold", c.blink.reinit_threshold);
            r.read("template_margin", c.blink.template_margin);
            r.read("ring_buffer", c.blink.ring_buffer);
            r.read("eye_template_size", c.blink.eye_template_size);
            r.read("search_radius", c.blink.search_radius);
            r.read("user_left_is_image_right", c.blink.user_left_is_image_right);
            r.finish();
        }
        if (const auto* s = root.child("pointer")) {
            detail::ObjectReader r(*s, "pointer");
            std::string mode(to_string(c.pointer.mode));
            r.read("mode", mode);
            detail::check(mode == "absolute" || mode == "relative", "pointer.mode must be absolute or relative");
            c.pointer.mode = mode == "absolute" ? PointerMode::Absolute : PointerMode::Relative;
            r.read("gain", c.pointer.gain);
            r.read("mirror_x", c.pointer.mirror_x);
            r.read("screen_width", c.pointer.screen_width);
            r.read("screen_height", c.pointer.screen_height);
            r.read("dead_zone", c.pointer.dead_zone);
            r.read("smoothing", c.pointer.smoothing);
            r.finish();
        }
        root.finish();
    }
    c.validate();
    return c;
}

inline PipelineConfig config_from_json(const nlohmann::json& j) { return merge_config(PipelineConfig{}, j); }

inline PipelineConfig parse_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail(Errc::BadConfig, std::string("config is not valid JSON: ") + e.what());
    }
    return config_from_json(j);
}

inline std::string dump_config(const PipelineConfig& c) { return to_json(c).dump(2) + "\n"; }

} // namespace facehci
