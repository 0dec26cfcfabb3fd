#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace ptav {

// Gaussian regression target with peak 1 at the circular origin (0,0):
// value(x,y) = exp(-(dx^2+dy^2)/(2*sigma^2)) with wrapped offsets.
inline std::vector<double> gaussian_label(int width, int height, double sigma) {
    if (width < 1 || height < 1 || sigma <= 0.0)
        throw std::invalid_argument("bad label parameters");
    std::vector<double> label(static_cast<size_t>(width) * height);
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (int y = 0; y < height; ++y) {
        const double dy = y <= height / 2 ? y : y - height;
        for (int x = 0; x < width; ++x) {
            const double dx = x <= width / 2 ? x : x - width;
            label[static_cast<size_t>(y) * width + x] = std::exp(-(dx * dx + dy * dy) * inv);
        }
    }
    return label;
}

// Separable raised-cosine taper: zero at the borders, 1 at the center of an
// odd-sized window.
inline std::vector<double> hann_window(int width, int height) {
    if (width < 1 || height < 1) throw std::invalid_argument("bad window size");
    const auto hann1 = [](int n) {
        std::vector<double> w(n, 1.0);
        if (n > 1)
            for (int i = 0; i < n; ++i)
                w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / (n - 1)));
        return w;
    };
    const std::vector<double> wx = hann1(width);
    const std::vector<double> wy = hann1(height);
    std::vector<double> win(static_cast<size_t>(width) * height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            win[static_cast<size_t>(y) * width + x] = wx[x] * wy[y];
    return win;
}

}  // namespace ptav
