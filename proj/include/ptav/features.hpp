#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "ptav/image.hpp"

namespace ptav {

// Per-cell feature planes, cell-major: value(cx, cy, ch) with
// channels_per_cell contiguous per cell.
struct FeatureMap {
    int cells_x = 0;
    int cells_y = 0;
    int channels = 0;
    std::vector<double> data;

    double& at(int cx, int cy, int ch) {
        return data[(static_cast<size_t>(cy) * cells_x + cx) * channels + ch];
    }
    double at(int cx, int cy, int ch) const {
        return data[(static_cast<size_t>(cy) * cells_x + cx) * channels + ch];
    }

    // One plane per channel, row-major over cells.
    std::vector<double> plane(int ch) const {
        std::vector<double> p(static_cast<size_t>(cells_x) * cells_y);
        for (int cy = 0; cy < cells_y; ++cy)
            for (int cx = 0; cx < cells_x; ++cx)
                p[static_cast<size_t>(cy) * cells_x + cx] = at(cx, cy, ch);
        return p;
    }
};

// Histogram of oriented gradients: unsigned orientation bins, gradient
// magnitude voting, per-cell L2 normalization (eps 1e-5). Gradients are
// computed on the luminance plane with central differences and edge
// replication. Output values lie in [0,1]; a constant patch gives all zeros.
inline FeatureMap compute_hog(const Image& patch, int cell_size, int n_orientations) {
    if (cell_size <= 0 || n_orientations <= 0)
        throw std::invalid_argument("bad hog parameters");
    if (cell_size > patch.width || cell_size > patch.height)
        throw std::invalid_argument("cell size exceeds patch");
    if (patch.width % cell_size != 0 || patch.height % cell_size != 0)
        throw std::invalid_argument("patch not divisible by cell size");

    const Image gray = to_gray(patch);
    FeatureMap fm;
    fm.cells_x = patch.width / cell_size;
    fm.cells_y = patch.height / cell_size;
    fm.channels = n_orientations;
    fm.data.assign(static_cast<size_t>(fm.cells_x) * fm.cells_y * n_orientations, 0.0);

    const auto px = [&](int x, int y) {
        x = x < 0 ? 0 : (x >= gray.width ? gray.width - 1 : x);
        y = y < 0 ? 0 : (y >= gray.height ? gray.height - 1 : y);
        return static_cast<double>(gray.at(x, y, 0));
    };
    const double bin_width = std::numbers::pi / n_orientations;

    for (int y = 0; y < gray.height; ++y) {
        for (int x = 0; x < gray.width; ++x) {
            const double gx = px(x + 1, y) - px(x - 1, y);
            const double gy = px(x, y + 1) - px(x, y - 1);
            const double mag = std::hypot(gx, gy);
            if (mag == 0.0) continue;
            double theta = std::atan2(gy, gx);  // (-pi, pi]
            if (theta < 0.0) theta += std::numbers::pi;
            if (theta >= std::numbers::pi) theta -= std::numbers::pi;
            int bin = static_cast<int>(theta / bin_width);
            if (bin >= n_orientations) bin = n_orientations - 1;
            fm.at(x / cell_size, y / cell_size, bin) += mag;
        }
    }

    const double eps = 1e-5;
    for (int cy = 0; cy < fm.cells_y; ++cy) {
        for (int cx = 0; cx < fm.cells_x; ++cx) {
            double sq = 0.0;
            for (int b = 0; b < n_orientations; ++b) sq += fm.at(cx, cy, b) * fm.at(cx, cy, b);
            const double norm = std::sqrt(sq) + eps;
            for (int b = 0; b < n_orientations; ++b) fm.at(cx, cy, b) /= norm;
        }
    }
    return fm;
}

inline std::vector<double> hog_vector(const FeatureMap& fm) { return fm.data; }

// Joint color histogram, normalized to sum 1. Gray images use
// bins_per_channel bins; RGB images bins_per_channel^3.
inline std::vector<double> compute_color_histogram(const Image& patch, int bins_per_channel) {
    if (bins_per_channel < 2) throw std::invalid_argument("need at least 2 bins per channel");
    const int nbins = patch.channels == 1
                          ? bins_per_channel
                          : bins_per_channel * bins_per_channel * bins_per_channel;
    std::vector<double> hist(nbins, 0.0);
    const auto bin_of = [&](float v) {
        int b = static_cast<int>(v * bins_per_channel);
        return b < 0 ? 0 : (b >= bins_per_channel ? bins_per_channel - 1 : b);
    };
    for (int y = 0; y < patch.height; ++y) {
        for (int x = 0; x < patch.width; ++x) {
            int idx;
            if (patch.channels == 1) {
                idx = bin_of(patch.at(x, y, 0));
            } else {
                idx = (bin_of(patch.at(x, y, 0)) * bins_per_channel +
                       bin_of(patch.at(x, y, 1))) * bins_per_channel +
                      bin_of(patch.at(x, y, 2));
            }
            hist[idx] += 1.0;
        }
    }
    const double total = static_cast<double>(patch.width) * patch.height;
    for (double& v : hist) v /= total;
    return hist;
}

// Bin index of one pixel under the same quantization as
// compute_color_histogram.
inline int color_bin(const Image& img, int x, int y, int bins_per_channel) {
    const auto bin_of = [&](float v) {
        int b = static_cast<int>(v * bins_per_channel);
        return b < 0 ? 0 : (b >= bins_per_channel ? bins_per_channel - 1 : b);
    };
    if (img.channels == 1) return bin_of(img.at(x, y, 0));
    return (bin_of(img.at(x, y, 0)) * bins_per_channel + bin_of(img.at(x, y, 1))) *
               bins_per_channel +
           bin_of(img.at(x, y, 2));
}

}  // namespace ptav
