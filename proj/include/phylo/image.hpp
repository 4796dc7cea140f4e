#pragma once

#include <string>
#include <vector>

namespace phylo {

/// Square single-channel image, intensities in [0, 255], row-major.
struct Image {
    int side = 0;
    std::vector<double> pixels;

    Image() = default;
    Image(int side_, double fill = 0.0)
        : side(side_), pixels(static_cast<size_t>(side_) * side_, fill) {}

    double& at(int y, int x) { return pixels[static_cast<size_t>(y) * side + x]; }
    double at(int y, int x) const { return pixels[static_cast<size_t>(y) * side + x]; }

    bool operator==(const Image& o) const = default;
};

inline constexpr int kMinImageSide = 32;

/// Loads a PNG or PGM file, reduces color images to their first (red)
/// channel, center-crops to `side` when the input is large enough and
/// otherwise crops to the largest centered square and resizes bilinearly.
Image load_image(const std::string& path, int side);

/// Writes 8-bit grayscale, format chosen by extension (.png or .pgm).
/// Values are clamped and rounded. `comment` is embedded in PGM output.
void save_image(const Image& img, const std::string& path,
                const std::string& comment = "");

/// Bilinear resize to a new side length.
Image resize_bilinear(const Image& img, int new_side);

/// Clamp every pixel into [0, 255] in place.
void clamp_to_range(Image& img);

/// Round every pixel to the nearest integer level in [0, 255]; emitted
/// near-duplicates are 8-bit images, so synthesis quantizes each node.
void quantize_to_8bit(Image& img);

namespace detail {
/// Decoded raster before channel reduction / cropping (used by codecs).
struct RawRaster {
    int width = 0;
    int height = 0;
    int channels = 0;              // 1 or 3
    std::vector<double> samples;   // interleaved, [0,255]
};

RawRaster decode_png(const std::string& path);
RawRaster decode_pgm(const std::string& path);
void encode_png_gray(const std::string& path, const std::vector<unsigned char>& gray,
                     int width, int height);
}  // namespace detail

}  // namespace phylo
