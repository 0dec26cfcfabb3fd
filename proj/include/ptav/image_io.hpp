#pragma once

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "ptav/image.hpp"

namespace ptav {

namespace detail {

inline float byte_to_unit(unsigned char b) { return float(b) / 255.0f; }
inline unsigned char unit_to_byte(float v) {
    const int b = int(std::lround(double(v) * 255.0));
    return (unsigned char)(b < 0 ? 0 : (b > 255 ? 255 : b));
}

inline std::string lower_ext(const std::string& path) {
    std::string ext = std::filesystem::path(path).extension().string();
    for (char& c : ext) c = char(std::tolower((unsigned char)c));
    return ext;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// PPM / PGM (binary variants)

inline void save_ppm(const Image& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << (img.channels == 1 ? "P5\n" : "P6\n") << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> row(size_t(img.width) * img.channels);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                row[size_t(x) * img.channels + c] = detail::unit_to_byte(img.at(x, y, c));
        out.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size()));
    }
    if (!out) throw std::runtime_error("short write to " + path);
}

inline Image load_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string magic;
    in >> magic;
    if (magic != "P6" && magic != "P5") throw std::runtime_error("unsupported ppm magic in " + path);
    const auto next_int = [&]() {
        // skip whitespace and '#' comments
        while (true) {
            const int c = in.peek();
            if (c == '#') {
                std::string line;
                std::getline(in, line);
            } else if (std::isspace(c)) {
                in.get();
            } else {
                break;
            }
        }
        int v = 0;
        in >> v;
        return v;
    };
    const int w = next_int(), h = next_int(), maxval = next_int();
    if (w < 1 || h < 1 || maxval != 255) throw std::runtime_error("unsupported ppm header in " + path);
    in.get();  // single whitespace after maxval
    const int channels = magic == "P6" ? 3 : 1;
    Image img(w, h, channels);
    std::vector<unsigned char> row(size_t(w) * channels);
    for (int y = 0; y < h; ++y) {
        in.read(reinterpret_cast<char*>(row.data()), std::streamsize(row.size()));
        if (!in) throw std::runtime_error("truncated ppm data in " + path);
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < channels; ++c)
                img.at(x, y, c) = detail::byte_to_unit(row[size_t(x) * channels + c]);
    }
    return img;
}

// ---------------------------------------------------------------------------
// PNG via libpng

inline Image load_png(const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw std::runtime_error("cannot read " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw std::runtime_error("png init failed for " + path);
    }
    std::vector<png_bytep> row_ptrs;
    std::vector<unsigned char> pixels;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw std::runtime_error("corrupt png " + path);
    }
    png_init_io(png, fp);
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const png_byte color = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);

    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    const int channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw std::runtime_error("unsupported png layout in " + path);
    }
    pixels.resize(size_t(w) * h * channels);
    row_ptrs.resize(h);
    for (png_uint_32 y = 0; y < h; ++y)
        row_ptrs[y] = pixels.data() + size_t(y) * w * channels;
    png_read_image(png, row_ptrs.data());
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);

    Image img(int(w), int(h), channels);
    for (size_t i = 0; i < pixels.size(); ++i) img.data[i] = detail::byte_to_unit(pixels[i]);
    return img;
}

inline void save_png(const Image& img, const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw std::runtime_error("cannot write " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw std::runtime_error("png init failed for " + path);
    }
    std::vector<unsigned char> pixels(size_t(img.width) * img.height * img.channels);
    std::vector<png_bytep> row_ptrs(img.height);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw std::runtime_error("png write failed for " + path);
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, png_uint_32(img.width), png_uint_32(img.height), 8,
                 img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    for (size_t i = 0; i < pixels.size(); ++i) pixels[i] = detail::unit_to_byte(img.data[i]);
    for (int y = 0; y < img.height; ++y)
        row_ptrs[size_t(y)] = pixels.data() + size_t(y) * img.width * img.channels;
    png_write_info(png, info);
    png_write_image(png, row_ptrs.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

// ---------------------------------------------------------------------------
// JPEG via libjpeg

namespace detail {
struct JpegErrorMgr {
    jpeg_error_mgr pub;
    std::jmp_buf setjmp_buffer;
};
inline void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    std::longjmp(err->setjmp_buffer, 1);
}
}  // namespace detail

inline Image load_jpeg(const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw std::runtime_error("cannot read " + path);
    jpeg_decompress_struct cinfo;
    detail::JpegErrorMgr jerr;
    cinfo.err = jpeg_std_error(&jerr.pub);
    jerr.pub.error_exit = detail::jpeg_error_exit;
    if (setjmp(jerr.setjmp_buffer)) {
        jpeg_destroy_decompress(&cinfo);
        std::fclose(fp);
        throw std::runtime_error("corrupt jpeg " + path);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, fp);
    jpeg_read_header(&cinfo, TRUE);
    jpeg_start_decompress(&cinfo);
    const int w = int(cinfo.output_width), h = int(cinfo.output_height);
    const int channels = cinfo.output_components;
    if (channels != 1 && channels != 3) {
        jpeg_destroy_decompress(&cinfo);
        std::fclose(fp);
        throw std::runtime_error("unsupported jpeg layout in " + path);
    }
    Image img(w, h, channels);
    std::vector<unsigned char> row(size_t(w) * channels);
    unsigned char* rowp = row.data();
    while (cinfo.output_scanline < cinfo.output_height) {
        const int y = int(cinfo.output_scanline);
        jpeg_read_scanlines(&cinfo, &rowp, 1);
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < channels; ++c)
                img.at(x, y, c) = detail::byte_to_unit(row[size_t(x) * channels + c]);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    std::fclose(fp);
    return img;
}

// ---------------------------------------------------------------------------

inline Image load_image(const std::string& path) {
    const std::string ext = detail::lower_ext(path);
    if (ext == ".png") return load_png(path);
    if (ext == ".ppm" || ext == ".pgm") return load_ppm(path);
    if (ext == ".jpg" || ext == ".jpeg") return load_jpeg(path);
    throw std::runtime_error("unsupported image format: " + path);
}

}  // namespace ptav
