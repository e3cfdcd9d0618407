#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace ptrack {

/// Single-channel real image, row-major.
struct LuminanceImage {
    int width = 0;
    int height = 0;
    std::vector<double> samples;

    LuminanceImage() = default;
    LuminanceImage(int w, int h, double fill = 0.0)
        : width(w), height(h), samples(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

    double& at(int x, int y) { return samples[index(x, y)]; }
    double at(int x, int y) const { return samples[index(x, y)]; }
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
               static_cast<std::size_t>(x);
    }
    std::size_t size() const noexcept { return samples.size(); }
};

using Rgb = std::array<std::uint8_t, 3>;

struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<Rgb> pixels;

    RgbImage() = default;
    RgbImage(int w, int h, Rgb fill = {0, 0, 0})
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

    Rgb& at(int x, int y) {
        return pixels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                      static_cast<std::size_t>(x)];
    }
    const Rgb& at(int x, int y) const {
        return pixels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                      static_cast<std::size_t>(x)];
    }
};

/// A graymap as read from disk: samples in [0, maxval].
struct Graymap {
    LuminanceImage image;
    int maxval = 255;
};

/// Reads an ASCII (P2) or binary (P5, 8-bit) graymap. Throws FormatError.
Graymap read_pgm(std::istream& in);

/// Writes an ASCII (P2) graymap. Samples are rounded and clamped to
/// [0, maxval].
void write_pgm(std::ostream& out, const LuminanceImage& image, int maxval = 255);

/// Writes a binary (P6) pixmap.
void write_ppm(std::ostream& out, const RgbImage& image);
RgbImage read_ppm(std::istream& in);

}  // namespace ptrack
