#pragma once

#include <png.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "httplib.h"
#include "mpcb/core/error.hpp"
#include "mpcb/sim/world.hpp"

namespace mpcb {

struct BevConfig {
    int width{400};
    int height{120};
    double ahead{100.0};   ///< metres rendered in front of the ego
    double behind{20.0};
    bool draw_ids{true};

    double px_per_m_x() const { return width / (ahead + behind); }
};

struct Rgb {
    std::uint8_t r{0}, g{0}, b{0};
    bool operator==(const Rgb&) const = default;
};

inline constexpr Rgb kBevBackground{40, 40, 40};
inline constexpr Rgb kBevLaneLine{230, 230, 230};
inline constexpr Rgb kBevVehicle{40, 90, 220};
inline constexpr Rgb kBevEgo{40, 200, 60};
inline constexpr Rgb kBevText{250, 220, 30};

struct Image {
    int width{0}, height{0};
    std::vector<std::uint8_t> rgb;  ///< row-major, 3 bytes per pixel

    Image() = default;
    Image(int w, int h, Rgb fill) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3) {
        for (std::size_t i = 0; i < rgb.size(); i += 3) {
            rgb[i] = fill.r;
            rgb[i + 1] = fill.g;
            rgb[i + 2] = fill.b;
        }
    }
    Rgb at(int px, int py) const {
        const auto i = (static_cast<std::size_t>(py) * width + px) * 3;
        return {rgb[i], rgb[i + 1], rgb[i + 2]};
    }
    void set(int px, int py, Rgb c) {
        if (px < 0 || py < 0 || px >= width || py >= height) return;
        const auto i = (static_cast<std::size_t>(py) * width + px) * 3;
        rgb[i] = c.r;
        rgb[i + 1] = c.g;
        rgb[i + 2] = c.b;
    }
    bool operator==(const Image&) const = default;
};

/// World (relative to ego.x) to pixel mapping. The lateral scale fits the road height into the image.
struct BevMapping {
    double origin_x;  ///< world x at pixel column 0
    double sx, sy;    ///< pixels per metre
    double y_top;     ///< world y at pixel row 0

    BevMapping(const BevConfig& c, const WorldState& w)
        : origin_x(w.ego.x - c.behind),
          sx(c.px_per_m_x()),
          sy(c.height / (w.road.right_edge() - w.road.left_edge())),
          y_top(w.road.left_edge()) {}

    double px(double x) const { return (x - origin_x) * sx; }
    double py(double y) const { return (y - y_top) * sy; }
    double world_x(double px) const { return px / sx + origin_x; }
    double world_y(double py) const { return py / sy + y_top; }
};

namespace detail {

// 3x5 digit glyphs, one row per entry, bit 2 is the leftmost column.
inline constexpr std::array<std::array<std::uint8_t, 5>, 10> kDigits{{
    {7, 5, 5, 5, 7}, {2, 6, 2, 2, 7}, {7, 1, 7, 4, 7}, {7, 1, 7, 1, 7}, {5, 5, 7, 1, 1},
    {7, 4, 7, 1, 7}, {7, 4, 7, 5, 7}, {7, 1, 1, 1, 1}, {7, 5, 7, 5, 7}, {7, 5, 7, 1, 7},
}};

inline void fill_rect(Image& img, double x0, double y0, double x1, double y1, Rgb c) {
    // Pixel (i, j) covers [i, i+1) x [j, j+1); fill it when its centre lies inside.
    const int i0 = static_cast<int>(std::ceil(x0 - 0.5)), i1 = static_cast<int>(std::floor(x1 - 0.5));
    const int j0 = static_cast<int>(std::ceil(y0 - 0.5)), j1 = static_cast<int>(std::floor(y1 - 0.5));
    for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i) img.set(i, j, c);
}

inline void draw_number(Image& img, int left, int top, int value, Rgb c) {
    const std::string s = std::to_string(value);
    for (std::size_t n = 0; n < s.size(); ++n) {
        if (s[n] < '0' || s[n] > '9') continue;
        const auto& g = kDigits[static_cast<std::size_t>(s[n] - '0')];
        for (int row = 0; row < 5; ++row)
            for (int col = 0; col < 3; ++col)
                if (g[static_cast<std::size_t>(row)] & (4 >> col)) img.set(left + static_cast<int>(n) * 4 + col, top + row, c);
    }
}

}  // namespace detail

/// Top-down raster: dashed lane separators, solid road edges, blue vehicles labelled with their ids, green ego.
inline Image render_bev(const WorldState& w, const BevConfig& c = {}) {
    Image img(c.width, c.height, kBevBackground);
    const BevMapping m(c, w);
    for (int lane = 0; lane <= w.road.lanes; ++lane) {
        const double y = w.road.left_edge() + lane * w.road.lane_width;
        const int row = std::clamp(static_cast<int>(std::floor(m.py(y))), 0, c.height - 1);
        const bool edge = lane == 0 || lane == w.road.lanes;
        for (int i = 0; i < c.width; ++i) {
            // Dashes are anchored to world x so they scroll with the ego.
            const double wx = m.world_x(i + 0.5);
            const bool on = edge || std::fmod(std::fmod(wx, 10.0) + 10.0, 10.0) < 5.0;
            if (on) img.set(i, row, kBevLaneLine);
        }
    }
    const double hl = 0.5 * w.geometry.length, hw = 0.5 * w.geometry.width;
    for (const auto& v : w.vehicles) {
        detail::fill_rect(img, m.px(v.x - hl), m.py(v.y - hw), m.px(v.x + hl), m.py(v.y + hw), kBevVehicle);
        if (c.draw_ids) {
            const int left = static_cast<int>(std::lround(m.px(v.x - hl)));
            const int top = static_cast<int>(std::lround(m.py(v.y - hw))) - 6;
            detail::draw_number(img, left, std::max(top, 0), v.id, kBevText);
        }
    }
    detail::fill_rect(img, m.px(w.ego.x - hl), m.py(w.ego.y - hw), m.px(w.ego.x + hl), m.py(w.ego.y + hw), kBevEgo);
    return img;
}

inline std::string encode_png(const Image& img) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    std::string out;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png encoding failed");
    }
    png_set_write_fn(
        png, &out,
        [](png_structp p, png_bytep data, png_size_t n) {
            static_cast<std::string*>(png_get_io_ptr(p))->append(reinterpret_cast<const char*>(data), n);
        },
        nullptr);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < img.height; ++y)
        png_write_row(png, const_cast<png_bytep>(img.rgb.data() + static_cast<std::size_t>(y) * img.width * 3));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

inline std::string png_data_url(const Image& img) {
    return "data:image/png;base64," + httplib::detail::base64_encode(encode_png(img));
}

}  // namespace mpcb
