#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "ptav/geometry.hpp"

namespace ptav {

// Planar-interleaved image, row-major, values in [0,1].
// address = (y * width + x) * channels + c
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;  // 1 (gray) or 3 (RGB)
    std::vector<float> data;

    Image() = default;
    Image(int w, int h, int c, float fill = 0.0f)
        : width(w), height(h), channels(c),
          data(static_cast<size_t>(w) * h * c, fill) {
        if (w <= 0 || h <= 0 || (c != 1 && c != 3))
            throw std::invalid_argument("bad image dimensions");
    }

    float& at(int x, int y, int c) {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    float at(int x, int y, int c) const {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }

    bool operator==(const Image& o) const {
        return width == o.width && height == o.height && channels == o.channels &&
               data == o.data;
    }
};

// Sample with bilinear interpolation; coordinates outside the image replicate
// the nearest edge pixel.
inline float sample_bilinear(const Image& img, double x, double y, int c) {
    const auto clampi = [](int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); };
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0;
    const double fy = y - y0;
    const int xa = clampi(x0, 0, img.width - 1);
    const int xb = clampi(x0 + 1, 0, img.width - 1);
    const int ya = clampi(y0, 0, img.height - 1);
    const int yb = clampi(y0 + 1, 0, img.height - 1);
    const double v00 = img.at(xa, ya, c);
    const double v10 = img.at(xb, ya, c);
    const double v01 = img.at(xa, yb, c);
    const double v11 = img.at(xb, yb, c);
    const double top = v00 + fx * (v10 - v00);
    const double bot = v01 + fx * (v11 - v01);
    return static_cast<float>(top + fy * (bot - top));
}

// Cut `box` out of `image` and resize to out_w x out_h (bilinear, edge
// replication outside the frame). The box must intersect the frame.
inline Image crop_resize(const Image& img, const Box& box, int out_w, int out_h) {
    require_valid(box);
    if (out_w <= 0 || out_h <= 0) throw std::invalid_argument("bad output size");
    if (intersection_area(box, Box{0, 0, double(img.width), double(img.height)}) <= 0.0)
        throw std::invalid_argument("box outside frame");
    Image out(out_w, out_h, img.channels);
    const double sx = box.w / out_w;
    const double sy = box.h / out_h;
    for (int y = 0; y < out_h; ++y) {
        const double src_y = box.y + (y + 0.5) * sy - 0.5;
        for (int x = 0; x < out_w; ++x) {
            const double src_x = box.x + (x + 0.5) * sx - 0.5;
            for (int c = 0; c < img.channels; ++c)
                out.at(x, y, c) = sample_bilinear(img, src_x, src_y, c);
        }
    }
    return out;
}

inline Image to_gray(const Image& img) {
    if (img.channels == 1) return img;
    Image out(img.width, img.height, 1);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            out.at(x, y, 0) = 0.299f * img.at(x, y, 0) + 0.587f * img.at(x, y, 1) +
                              0.114f * img.at(x, y, 2);
    return out;
}

// Summed-area table over one plane; (width+1) x (height+1), double precision.
struct IntegralImage {
    int width = 0;
    int height = 0;
    std::vector<double> sum;  // (width+1)*(height+1)

    double at(int x, int y) const { return sum[static_cast<size_t>(y) * (width + 1) + x]; }
};

inline IntegralImage integral_image(const std::vector<double>& plane, int w, int h) {
    if (w <= 0 || h <= 0 || plane.size() != static_cast<size_t>(w) * h)
        throw std::invalid_argument("bad plane dimensions");
    IntegralImage ii;
    ii.width = w;
    ii.height = h;
    ii.sum.assign(static_cast<size_t>(w + 1) * (h + 1), 0.0);
    for (int y = 0; y < h; ++y) {
        double row = 0.0;
        for (int x = 0; x < w; ++x) {
            row += plane[static_cast<size_t>(y) * w + x];
            ii.sum[static_cast<size_t>(y + 1) * (w + 1) + (x + 1)] =
                ii.sum[static_cast<size_t>(y) * (w + 1) + (x + 1)] + row;
        }
    }
    return ii;
}

// Sum of the plane over the integer box [x, x+bw) x [y, y+bh).
inline double box_sum(const IntegralImage& ii, int x, int y, int bw, int bh) {
    if (x < 0 || y < 0 || bw < 0 || bh < 0 || x + bw > ii.width || y + bh > ii.height)
        throw std::out_of_range("box outside integral image");
    return ii.at(x + bw, y + bh) - ii.at(x, y + bh) - ii.at(x + bw, y) + ii.at(x, y);
}

}  // namespace ptav
