#include "gsjbu/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include <png.h>

namespace gsjbu {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f)
            std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_thrower(png_structp, png_const_charp msg) {
    throw InvalidInput(std::string("png: ") + msg);
}

void png_warning_sink(png_structp, png_const_charp) {}

} // namespace

PlanarMap read_image(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f)
        throw InvalidInput("cannot open image file: " + path);

    png_byte sig[8];
    if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw InvalidInput("not a PNG file: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_thrower,
                                             png_warning_sink);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw InvalidInput("png: failed to allocate read structures");
    }

    try {
        png_init_io(png, f.get());
        png_set_sig_bytes(png, 8);
        png_read_info(png, info);

        const int width = static_cast<int>(png_get_image_width(png, info));
        const int height = static_cast<int>(png_get_image_height(png, info));
        const int depth = png_get_bit_depth(png, info);
        const int color = png_get_color_type(png, info);

        if (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_RGB)
            throw InvalidInput("png: unsupported color type " + std::to_string(color) +
                               " (only grayscale and RGB) in " + path);
        if (depth != 8 && depth != 16)
            throw InvalidInput("png: unsupported bit depth " + std::to_string(depth) +
                               " (only 8 and 16) in " + path);
        if (png_get_interlace_type(png, info) != PNG_INTERLACE_NONE)
            throw InvalidInput("png: interlaced images are not supported: " + path);
        if (depth == 16 && std::endian::native == std::endian::little)
            png_set_swap(png); // PNG stores 16-bit samples big-endian

        const int channels = color == PNG_COLOR_TYPE_GRAY ? 1 : 3;
        const std::size_t row_samples = static_cast<std::size_t>(width) * channels;
        std::vector<png_byte> row(row_samples * (depth / 8));
        PlanarMap out(channels, height, width);
        const double maxval = depth == 8 ? 255.0 : 65535.0;

        for (int y = 0; y < height; ++y) {
            png_read_row(png, row.data(), nullptr);
            for (int x = 0; x < width; ++x)
                for (int c = 0; c < channels; ++c) {
                    unsigned v;
                    if (depth == 8)
                        v = row[x * channels + c];
                    else
                        v = reinterpret_cast<const png_uint_16*>(row.data())[x * channels + c];
                    out.at(c, y, x) = static_cast<float>(v / maxval);
                }
        }
        png_read_end(png, nullptr);
        png_destroy_read_struct(&png, &info, nullptr);
        return out;
    } catch (...) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw;
    }
}

ImageWriteResult write_image(const PlanarMap& map, const std::string& path, int bit_depth) {
    if (map.channels() != 1 && map.channels() != 3)
        throw InvalidInput("write_image: PNG needs 1 or 3 channels, map has " +
                           std::to_string(map.channels()));
    if (bit_depth != 8 && bit_depth != 16)
        throw InvalidInput("write_image: bit depth must be 8 or 16, got " + std::to_string(bit_depth));

    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f)
        throw InvalidInput("cannot open for writing: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_thrower,
                                              png_warning_sink);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw InvalidInput("png: failed to allocate write structures");
    }

    ImageWriteResult result;
    try {
        png_init_io(png, f.get());
        png_set_IHDR(png, info, map.width(), map.height(), bit_depth,
                     map.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                     PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        if (bit_depth == 16 && std::endian::native == std::endian::little)
            png_set_swap(png);

        const double maxval = bit_depth == 8 ? 255.0 : 65535.0;
        const int channels = map.channels();
        std::vector<png_byte> row(static_cast<std::size_t>(map.width()) * channels * (bit_depth / 8));
        for (int y = 0; y < map.height(); ++y) {
            for (int x = 0; x < map.width(); ++x)
                for (int c = 0; c < channels; ++c) {
                    double v = map.at(c, y, x);
                    if (v < 0.0 || v > 1.0) {
                        ++result.clamped;
                        v = v < 0.0 ? 0.0 : 1.0;
                    }
                    auto q = static_cast<unsigned>(std::lround(v * maxval));
                    if (bit_depth == 8)
                        row[x * channels + c] = static_cast<png_byte>(q);
                    else
                        reinterpret_cast<png_uint_16*>(row.data())[x * channels + c] =
                            static_cast<png_uint_16>(q);
                }
            png_write_row(png, row.data());
        }
        png_write_end(png, nullptr);
        png_destroy_write_struct(&png, &info);
    } catch (...) {
        png_destroy_write_struct(&png, &info);
        throw;
    }
    return result;
}

} // namespace gsjbu
