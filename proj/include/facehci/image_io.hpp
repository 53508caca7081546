/**
 * @file image_io.hpp
 * @brief PGM (binary P5) and PNG reading/writing.
 *
 * PNG support goes through libpng; link the `facehci` CMake target (it
 * carries PNG::PNG) when including this header.
 */
#pragma once

#include "facehci/error.hpp"
#include "facehci/image.hpp"

#include <png.h>

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace facehci {

/// Packed 8-bit RGB, used for overlays.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // 3 bytes per pixel, row-major

    RgbImage() = default;
    explicit RgbImage(const GrayImage& gray) : width(gray.width()), height(gray.height()) {
        data.reserve(static_cast<std::size_t>(width) * height * 3);
        for (auto v : gray.pixels()) data.insert(data.end(), {v, v, v});
    }

    void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
        if (x < 0 || y < 0 || x >= width || y >= height) return;
        auto* p = &data[(static_cast<std::size_t>(y) * width + x) * 3];
        p[0] = r;
        p[1] = g;
        p[2] = b;
    }

    friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

namespace detail {

inline int pgm_read_int(std::istream& in) {
    int c = in.peek();
    while (in && (std::isspace(c) || c == '#')) {
        if (c == '#') {
            std::string skip;
            std::getline(in, skip);
        } else {
            in.get();
        }
        c = in.peek();
    }
    int value = -1;
    if (!(in >> value)) fail(Errc::InvalidInput, "malformed PGM header");
    return value;
}

inline bool has_extension(const std::filesystem::path& p, const char* ext) {
    auto e = p.extension().string();
    for (auto& ch : e) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return e == ext;
}

} // namespace detail

inline GrayImage decode_pgm(const std::string& bytes) {
    std::istringstream in(bytes);
    char magic[2] = {};
    in.read(magic, 2);
    require(in && magic[0] == 'P' && magic[1] == '5', Errc::InvalidInput, "not a binary PGM (P5)");
    const int w = detail::pgm_read_int(in);
    const int h = detail::pgm_read_int(in);
    const int maxval = detail::pgm_read_int(in);
    require(w >= 1 && h >= 1, Errc::InvalidInput, "bad PGM dimensions");
    require(maxval == 255, Errc::InvalidInput, "only maxval 255 PGM is supported");
    in.get();  // single whitespace after maxval
    std::vector<std::uint8_t> data(static_cast<std::size_t>(w) * h);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
    require(static_cast<std::size_t>(in.gcount()) == data.size(), Errc::InvalidInput, "truncated PGM payload");
    return GrayImage(w, h, std::move(data));
}

inline std::string encode_pgm(const GrayImage& img) {
    std::string out = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
    out.append(reinterpret_cast<const char*>(img.pixels().data()), img.pixels().size());
    return out;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::Io, "cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline GrayImage read_pgm(const std::filesystem::path& path) { return decode_pgm(read_file(path)); }
inline void write_pgm(const std::filesystem::path& path, const GrayImage& img) { write_file(path, encode_pgm(img)); }

// =============================================================================
// PNG
// =============================================================================

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const noexcept {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

} // namespace detail

/// Reads an 8-bit grayscale or RGB(A) PNG and returns its luminance.
inline GrayImage read_png(const std::filesystem::path& path) {
    detail::FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) fail(Errc::Io, "cannot open " + path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(Errc::Io, "libpng init failed");
    }
    std::vector<std::uint8_t> raw;
    std::vector<png_bytep> rows;
    int w = 0, h = 0, channels = 0;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(Errc::InvalidInput, "corrupt PNG " + path.string());
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);
    w = static_cast<int>(png_get_image_width(png, info));
    h = static_cast<int>(png_get_image_height(png, info));
    const int depth = png_get_bit_depth(png, info);
    const int color = png_get_color_type(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);
    channels = png_get_channels(png, info);
    raw.resize(static_cast<std::size_t>(w) * h * channels);
    rows.resize(static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y) rows[y] = raw.data() + static_cast<std::size_t>(y) * w * channels;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    if (channels == 1) return GrayImage(w, h, std::move(raw));
    require(channels == 3, Errc::InvalidInput, "unsupported PNG channel layout");
    return to_grayscale(raw, w, h);
}

inline void write_png(const std::filesystem::path& path, const RgbImage& img) {
    detail::FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) fail(Errc::Io, "cannot write " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        fail(Errc::Io, "libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(Errc::Io, "PNG encode failed " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < img.height; ++y)
        png_write_row(png, const_cast<png_bytep>(img.data.data() + static_cast<std::size_t>(y) * img.width * 3));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

/// Loads a frame by extension: .pgm or .png.
inline GrayImage read_image(const std::filesystem::path& path) {
    if (detail::has_extension(path, ".pgm")) return read_pgm(path);
    if (detail::has_extension(path, ".png")) return read_png(path);
    fail(Errc::InvalidInput, "unsupported image type " + path.string());
}

inline bool is_image_file(const std::filesystem::path& path) {
    return detail::has_extension(path, ".pgm") || detail::has_extension(path, ".png");
}

} // namespace facehci
