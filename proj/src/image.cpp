#include "phylo/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "phylo/error.hpp"

namespace phylo {

namespace detail {

namespace {

struct PngReadCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    std::FILE* fp = nullptr;
    ~PngReadCloser() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

struct PngWriteCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    std::FILE* fp = nullptr;
    ~PngWriteCloser() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (fp) std::fclose(fp);
    }
};

}  // namespace

RawRaster decode_png(const std::string& path) {
    PngReadCloser c;
    c.fp = std::fopen(path.c_str(), "rb");
    if (!c.fp) throw IoError("cannot open " + path);

    unsigned char sig[8];
    if (std::fread(sig, 1, 8, c.fp) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw IoError(path + ": not a PNG file");

    c.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!c.png) throw IoError("png_create_read_struct failed");
    c.info = png_create_info_struct(c.png);
    if (!c.info) throw IoError("png_create_info_struct failed");
    if (setjmp(png_jmpbuf(c.png))) throw IoError(path + ": PNG decode error");

    png_init_io(c.png, c.fp);
    png_set_sig_bytes(c.png, 8);
    png_read_info(c.png, c.info);

    const png_uint_32 w = png_get_image_width(c.png, c.info);
    const png_uint_32 h = png_get_image_height(c.png, c.info);
    const int color = png_get_color_type(c.png, c.info);
    const int depth = png_get_bit_depth(c.png, c.info);

    if (depth == 16) png_set_strip_16(c.png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(c.png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(c.png);
    if (png_get_valid(c.png, c.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(c.png);
    png_set_strip_alpha(c.png);
    png_set_interlace_handling(c.png);
    png_read_update_info(c.png, c.info);

    const png_size_t rowbytes = png_get_rowbytes(c.png, c.info);
    const int channels = static_cast<int>(rowbytes / w);
    if (channels != 1 && channels != 3)
        throw IoError(path + ": unsupported PNG channel layout");

    std::vector<unsigned char> data(static_cast<size_t>(rowbytes) * h);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = data.data() + static_cast<size_t>(y) * rowbytes;
    png_read_image(c.png, rows.data());
    png_read_end(c.png, nullptr);

    RawRaster out;
    out.width = static_cast<int>(w);
    out.height = static_cast<int>(h);
    out.channels = channels;
    out.samples.assign(data.begin(), data.end());
    return out;
}

void encode_png_gray(const std::string& path, const std::vector<unsigned char>& gray,
                     int width, int height) {
    PngWriteCloser c;
    c.fp = std::fopen(path.c_str(), "wb");
    if (!c.fp) throw IoError("cannot write " + path);

    c.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!c.png) throw IoError("png_create_write_struct failed");
    c.info = png_create_info_struct(c.png);
    if (!c.info) throw IoError("png_create_info_struct failed");
    if (setjmp(png_jmpbuf(c.png))) throw IoError(path + ": PNG encode error");

    png_init_io(c.png, c.fp);
    png_set_IHDR(c.png, c.info, width, height, 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(c.png, c.info);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y)
        rows[y] = const_cast<png_bytep>(gray.data() + static_cast<size_t>(y) * width);
    png_write_image(c.png, rows.data());
    png_write_end(c.png, nullptr);
}

namespace {

// Skips whitespace and '#' comment lines between PGM header tokens.
int next_pgm_token(std::istream& in) {
    while (true) {
        const int ch = in.peek();
        if (ch == EOF) throw IoError("truncated PGM header");
        if (std::isspace(ch)) {
            in.get();
        } else if (ch == '#') {
            std::string line;
            std::getline(in, line);
        } else {
            int value = 0;
            if (!(in >> value)) throw IoError("malformed PGM header");
            return value;
        }
    }
}

}  // namespace

RawRaster decode_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);

    char magic[2];
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || (magic[1] != '2' && magic[1] != '5'))
        throw IoError(path + ": not a PGM file");
    const bool binary = magic[1] == '5';

    const int w = next_pgm_token(in);
    const int h = next_pgm_token(in);
    const int maxval = next_pgm_token(in);
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535)
        throw IoError(path + ": bad PGM dimensions");

    RawRaster out;
    out.width = w;
    out.height = h;
    out.channels = 1;
    out.samples.resize(static_cast<size_t>(w) * h);

    const double scale = 255.0 / maxval;
    if (binary) {
        in.get();  // single whitespace after maxval
        const int bytes_per = maxval > 255 ? 2 : 1;
        std::vector<unsigned char> buf(out.samples.size() * bytes_per);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (!in) throw IoError(path + ": truncated PGM data");
        for (size_t i = 0; i < out.samples.size(); ++i) {
            const int v = bytes_per == 1 ? buf[i] : (buf[2 * i] << 8) | buf[2 * i + 1];
            out.samples[i] = v * scale;
        }
    } else {
        for (size_t i = 0; i < out.samples.size(); ++i) {
            int v = 0;
            if (!(in >> v)) throw IoError(path + ": truncated PGM data");
            out.samples[i] = v * scale;
        }
    }
    return out;
}

}  // namespace detail

namespace {

Image first_channel(const detail::RawRaster& raw) {
    // Color inputs reduce to the first (red) channel.
    const int w = raw.width, h = raw.height, c = raw.channels;
    Image img;
    img.side = 0;  // not square yet; use pixels as w*h buffer, caller crops
    img.pixels.resize(static_cast<size_t>(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            img.pixels[static_cast<size_t>(y) * w + x] =
                raw.samples[(static_cast<size_t>(y) * w + x) * c];
    return img;
}

Image center_crop(const std::vector<double>& buf, int w, int h, int crop) {
    const int x0 = (w - crop) / 2;
    const int y0 = (h - crop) / 2;
    Image out(crop);
    for (int y = 0; y < crop; ++y)
        for (int x = 0; x < crop; ++x)
            out.at(y, x) = buf[static_cast<size_t>(y0 + y) * w + (x0 + x)];
    return out;
}

bool ends_with_icase(const std::string& s, const std::string& suffix) {
    if (s.size() < suffix.size()) return false;
    return std::equal(suffix.rbegin(), suffix.rend(), s.rbegin(), [](char a, char b) {
        return std::tolower(static_cast<unsigned char>(a)) ==
               std::tolower(static_cast<unsigned char>(b));
    });
}

}  // namespace

Image resize_bilinear(const Image& img, int new_side) {
    if (new_side == img.side) return img;
    Image out(new_side);
    const double scale = static_cast<double>(img.side) / new_side;
    for (int y = 0; y < new_side; ++y) {
        for (int x = 0; x < new_side; ++x) {
            const double sy = std::clamp((y + 0.5) * scale - 0.5, 0.0, img.side - 1.0);
            const double sx = std::clamp((x + 0.5) * scale - 0.5, 0.0, img.side - 1.0);
            const int y0 = static_cast<int>(sy);
            const int x0 = static_cast<int>(sx);
            const int y1 = std::min(y0 + 1, img.side - 1);
            const int x1 = std::min(x0 + 1, img.side - 1);
            const double fy = sy - y0, fx = sx - x0;
            out.at(y, x) = (1 - fy) * ((1 - fx) * img.at(y0, x0) + fx * img.at(y0, x1)) +
                           fy * ((1 - fx) * img.at(y1, x0) + fx * img.at(y1, x1));
        }
    }
    return out;
}

void clamp_to_range(Image& img) {
    for (double& v : img.pixels) v = std::clamp(v, 0.0, 255.0);
}

void quantize_to_8bit(Image& img) {
    for (double& v : img.pixels) v = std::clamp(std::round(v), 0.0, 255.0);
}

Image load_image(const std::string& path, int side) {
    if (side < kMinImageSide)
        throw InvalidInputError("requested side " + std::to_string(side) + " is below " +
                                std::to_string(kMinImageSide));

    detail::RawRaster raw;
    if (ends_with_icase(path, ".png")) {
        raw = detail::decode_png(path);
    } else if (ends_with_icase(path, ".pgm")) {
        raw = detail::decode_pgm(path);
    } else {
        // Sniff: PGM magic is ASCII "P2"/"P5", PNG starts with 0x89.
        std::ifstream probe(path, std::ios::binary);
        if (!probe) throw IoError("cannot open " + path);
        char m = 0;
        probe.get(m);
        probe.close();
        raw = (m == 'P') ? detail::decode_pgm(path) : detail::decode_png(path);
    }

    if (raw.width < kMinImageSide || raw.height < kMinImageSide)
        throw InvalidInputError(path + ": image smaller than " +
                                std::to_string(kMinImageSide) + "px");

    const Image chan = first_channel(raw);
    const int min_dim = std::min(raw.width, raw.height);
    if (min_dim >= side) {
        return center_crop(chan.pixels, raw.width, raw.height, side);
    }
    // Input smaller than requested: crop the largest centered square, then
    // resize up.
    Image square = center_crop(chan.pixels, raw.width, raw.height, min_dim);
    return resize_bilinear(square, side);
}

void save_image(const Image& img, const std::string& path, const std::string& comment) {
    std::vector<unsigned char> gray(img.pixels.size());
    for (size_t i = 0; i < img.pixels.size(); ++i)
        gray[i] = static_cast<unsigned char>(std::clamp(std::round(img.pixels[i]), 0.0, 255.0));

    if (ends_with_icase(path, ".png")) {
        detail::encode_png_gray(path, gray, img.side, img.side);
        return;
    }
    if (!ends_with_icase(path, ".pgm"))
        throw InvalidInputError("save_image: unsupported extension in " + path);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "P5\n";
    if (!comment.empty()) out << "# " << comment << "\n";
    out << img.side << " " << img.side << "\n255\n";
    out.write(reinterpret_cast<const char*>(gray.data()), static_cast<std::streamsize>(gray.size()));
    if (!out) throw IoError("short write to " + path);
}

}  // namespace phylo
