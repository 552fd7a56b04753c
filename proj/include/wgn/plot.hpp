#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

namespace wgn {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Minimal RGB raster with the handful of primitives the maps need.
class Canvas {
public:
    Canvas(int width, int height, Rgb background = {255, 255, 255});

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    Rgb at(int x, int y) const;

    void set(int x, int y, Rgb c);
    void fill_rect(int x0, int y0, int x1, int y1, Rgb c);
    void rect(int x0, int y0, int x1, int y1, Rgb c);
    void line(int x0, int y0, int x1, int y1, Rgb c, int thickness = 1);
    void disc(int cx, int cy, int radius, Rgb c);
    void ring(int cx, int cy, int radius, Rgb c, int thickness = 2);
    void cross(int cx, int cy, int half, Rgb c, int thickness = 2);
    void square(int cx, int cy, int half, Rgb c, int thickness = 2);
    void diamond(int cx, int cy, int half, Rgb c);
    void triangle(int cx, int cy, int half, Rgb c);
    /// 5x7 bitmap text (upper-case glyphs; lower case is folded), `scale` px per dot.
    void text(int x, int y, std::string_view s, Rgb c, int scale = 2);
    static int text_width(std::string_view s, int scale = 2);

    void write_png(const std::filesystem::path& path) const;

private:
    int width_, height_;
    std::vector<std::uint8_t> pixels_;
};

}  // namespace wgn
