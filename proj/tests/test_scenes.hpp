#pragma once

// Small synthetic scenes shared by the tracker/verifier/runtime tests.

#include <random>
#include <vector>

#include "ptav/geometry.hpp"
#include "ptav/image.hpp"

namespace scenes {

// Blocky high-contrast texture; deterministic for a seed.
inline ptav::Image make_texture(int w, int h, uint32_t seed, int block = 2) {
    ptav::Image tex(w, h, 3);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<float> uni(0.35f, 1.0f);
    const int bw = (w + block - 1) / block, bh = (h + block - 1) / block;
    std::vector<float> colors(size_t(bw) * bh * 3);
    for (float& c : colors) c = uni(rng);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                tex.at(x, y, c) = colors[(size_t(y / block) * bw + x / block) * 3 + c];
    return tex;
}

// Paint the texture into the frame at integer position (clipped).
inline void paint(ptav::Image& frame, const ptav::Image& tex, int x0, int y0) {
    for (int y = 0; y < tex.height; ++y) {
        const int fy = y0 + y;
        if (fy < 0 || fy >= frame.height) continue;
        for (int x = 0; x < tex.width; ++x) {
            const int fx = x0 + x;
            if (fx < 0 || fx >= frame.width) continue;
            for (int c = 0; c < frame.channels; ++c) frame.at(fx, fy, c) = tex.at(x, y, c);
        }
    }
}

// Dark flat background with the target texture painted at (x, y).
inline ptav::Image frame_with_target(int w, int h, const ptav::Image& tex, int x, int y,
                                     float bg = 0.12f) {
    ptav::Image frame(w, h, 3, bg);
    paint(frame, tex, x, y);
    return frame;
}

// Frames of a target translating by (vx, vy) per frame from (x0, y0).
inline std::vector<ptav::Image> translating_sequence(int n, int w, int h,
                                                     const ptav::Image& tex, int x0, int y0,
                                                     int vx, int vy) {
    std::vector<ptav::Image> frames;
    frames.reserve(n);
    for (int i = 0; i < n; ++i)
        frames.push_back(frame_with_target(w, h, tex, x0 + i * vx, y0 + i * vy));
    return frames;
}

}  // namespace scenes
