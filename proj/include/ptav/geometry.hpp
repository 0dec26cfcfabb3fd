#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ptav {

// Axis-aligned box, 0-based top-left origin, real-valued pixel coordinates.
struct Box {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    double x2() const { return x + w; }
    double y2() const { return y + h; }
    double cx() const { return x + 0.5 * w; }
    double cy() const { return y + 0.5 * h; }
    double area() const { return w * h; }

    static Box from_center(double cx, double cy, double w, double h) {
        return Box{cx - 0.5 * w, cy - 0.5 * h, w, h};
    }

    bool operator==(const Box& o) const {
        return x == o.x && y == o.y && w == o.w && h == o.h;
    }
};

inline bool box_valid(const Box& b) {
    return std::isfinite(b.x) && std::isfinite(b.y) && std::isfinite(b.w) &&
           std::isfinite(b.h) && b.w > 0.0 && b.h > 0.0;
}

inline void require_valid(const Box& b, const char* what = "box") {
    if (!box_valid(b)) throw std::invalid_argument(std::string(what) + " is degenerate");
}

inline double intersection_area(const Box& a, const Box& b) {
    const double iw = std::min(a.x2(), b.x2()) - std::max(a.x, b.x);
    const double ih = std::min(a.y2(), b.y2()) - std::max(a.y, b.y);
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    return iw * ih;
}

// Translate the box so it lies inside [0,w)x[0,h), keeping its size.
// Boxes larger than the frame get pinned to the top-left.
inline Box clamp_into(const Box& b, double frame_w, double frame_h) {
    Box r = b;
    if (r.x2() > frame_w) r.x = frame_w - r.w;
    if (r.y2() > frame_h) r.y = frame_h - r.h;
    if (r.x < 0.0) r.x = 0.0;
    if (r.y < 0.0) r.y = 0.0;
    return r;
}

inline double center_distance(const Box& a, const Box& b) {
    return std::hypot(a.cx() - b.cx(), a.cy() - b.cy());
}

}  // namespace ptav
