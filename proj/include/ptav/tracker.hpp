#pragma once

#include <cmath>
#include <deque>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ptav/features.hpp"
#include "ptav/fft.hpp"
#include "ptav/geometry.hpp"
#include "ptav/image.hpp"
#include "ptav/numerics.hpp"

namespace ptav {

struct TrackerConfig {
    double alpha = 0.3;               // template/histogram merge weight
    double lambda = 1e-3;             // ridge regularizer
    double learning_rate_cf = 0.01;
    double learning_rate_hist = 0.04;
    double label_sigma_factor = 1.0 / 16.0;  // times the target diagonal
    double search_padding = 1.5;             // window = target * (1 + padding)
    std::vector<double> scale_factors{0.985, 1.0, 1.015};
    double scale_damping = 0.6;
    int cell_size = 4;
    int n_orientations = 9;
    int hist_bins_rgb = 16;
    int hist_bins_gray = 32;
    int archive_capacity = 25;  // snapshot window, runtime defaults this to 2*N_int+5

    void validate() const {
        if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("alpha must be in [0,1]");
        if (lambda <= 0.0) throw std::invalid_argument("lambda must be positive");
        if (learning_rate_cf < 0.0 || learning_rate_cf > 1.0 || learning_rate_hist < 0.0 ||
            learning_rate_hist > 1.0)
            throw std::invalid_argument("learning rates must be in [0,1]");
        if (label_sigma_factor <= 0.0) throw std::invalid_argument("label sigma must be positive");
        if (search_padding < 0.0) throw std::invalid_argument("search padding must be >= 0");
        if (scale_factors.empty()) throw std::invalid_argument("need at least one scale factor");
        if (cell_size < 1 || n_orientations < 1) throw std::invalid_argument("bad feature params");
        if (archive_capacity < 1) throw std::invalid_argument("archive capacity must be >= 1");
    }
};

// Frequency-domain ridge-regression filter: per-channel numerator
// accumulators and a shared real denominator (includes the regularizer, so
// every entry is >= lambda).
struct CorrelationFilterModel {
    int cells_x = 0;
    int cells_y = 0;
    std::vector<ComplexPlane> num;  // one per feature channel
    std::vector<double> den;

    bool operator==(const CorrelationFilterModel& o) const {
        if (cells_x != o.cells_x || cells_y != o.cells_y || den != o.den ||
            num.size() != o.num.size())
            return false;
        for (size_t c = 0; c < num.size(); ++c)
            if (num[c].data != o.num[c].data) return false;
        return true;
    }
};

// Foreground/background color statistics and the per-bin likelihood ratio
// fg/(fg+bg+eps) derived from them.
struct HistogramModel {
    int bins_per_channel = 0;
    std::vector<double> fg;
    std::vector<double> bg;
    std::vector<double> ratio;

    static constexpr double kEps = 1e-6;

    void refresh_ratio() {
        ratio.resize(fg.size());
        for (size_t i = 0; i < fg.size(); ++i) ratio[i] = fg[i] / (fg[i] + bg[i] + kEps);
    }

    bool operator==(const HistogramModel& o) const {
        return bins_per_channel == o.bins_per_channel && fg == o.fg && bg == o.bg &&
               ratio == o.ratio;
    }
};

struct TargetState {
    double cx = 0.0;
    double cy = 0.0;
    double w = 0.0;
    double h = 0.0;
    double peak = 0.0;  // last fused response maximum

    Box box() const { return Box::from_center(cx, cy, w, h); }

    bool operator==(const TargetState& o) const {
        return cx == o.cx && cy == o.cy && w == o.w && h == o.h && peak == o.peak;
    }
};

struct Snapshot {
    long frame_index = -1;
    CorrelationFilterModel cf;
    HistogramModel hist;
    TargetState state;
    double scale = 1.0;

    bool operator==(const Snapshot& o) const {
        return frame_index == o.frame_index && cf == o.cf && hist == o.hist &&
               state == o.state && scale == o.scale;
    }
};

// Bounded FIFO of per-frame model snapshots with contiguous frame indices.
class SnapshotArchive {
public:
    explicit SnapshotArchive(int capacity) : capacity_(capacity) {
        if (capacity < 1) throw std::invalid_argument("archive capacity must be >= 1");
    }

    void push(Snapshot snap) {
        if (!snaps_.empty() && snap.frame_index != snaps_.back().frame_index + 1)
            throw std::logic_error("archive indices must be contiguous");
        snaps_.push_back(std::move(snap));
        while (static_cast<int>(snaps_.size()) > capacity_) snaps_.pop_front();
    }

    const Snapshot* find(long frame_index) const {
        if (snaps_.empty() || frame_index < snaps_.front().frame_index ||
            frame_index > snaps_.back().frame_index)
            return nullptr;
        return &snaps_[static_cast<size_t>(frame_index - snaps_.front().frame_index)];
    }

    // Drop every snapshot with index >= frame_index.
    void discard_from(long frame_index) {
        while (!snaps_.empty() && snaps_.back().frame_index >= frame_index) snaps_.pop_back();
    }

    size_t size() const { return snaps_.size(); }
    int capacity() const { return capacity_; }
    bool empty() const { return snaps_.empty(); }
    long min_index() const { return snaps_.empty() ? -1 : snaps_.front().frame_index; }
    long max_index() const { return snaps_.empty() ? -1 : snaps_.back().frame_index; }

private:
    int capacity_;
    std::deque<Snapshot> snaps_;
};

// Dense score map. For template responses the grid is the feature-cell grid
// of the search window and index (0,0) means "no displacement" with circular
// wrap; for histogram responses it is the pixel grid of the window.
struct ResponseMap {
    int w = 0;
    int h = 0;
    std::vector<double> v;

    double at(int x, int y) const { return v[static_cast<size_t>(y) * w + x]; }
    double& at(int x, int y) { return v[static_cast<size_t>(y) * w + x]; }
};

inline double wrap_offset(int idx, int n) { return idx <= n / 2 ? idx : idx - n; }

// Linear response fusion: (1-alpha)*tmpl + alpha*hist on a common grid.
inline ResponseMap fuse_maps(const ResponseMap& tmpl, const ResponseMap& hist, double alpha) {
    if (tmpl.w != hist.w || tmpl.h != hist.h)
        throw std::invalid_argument("response grids differ");
    ResponseMap out;
    out.w = tmpl.w;
    out.h = tmpl.h;
    out.v.resize(tmpl.v.size());
    for (size_t i = 0; i < out.v.size(); ++i)
        out.v[i] = (1.0 - alpha) * tmpl.v[i] + alpha * hist.v[i];
    return out;
}

// Peak of a circular response map: integer argmax (ties to the smallest
// wrapped displacement, then scan order) plus one-dimensional quadratic
// refinement. Returns the displacement from the map origin in cells.
struct PeakInfo {
    double dx = 0.0;
    double dy = 0.0;
    double value = 0.0;
};

inline PeakInfo find_peak(const ResponseMap& map) {
    double vmax = map.v[0];
    for (double v : map.v) vmax = std::max(vmax, v);
    // near-ties (down to rounding noise) resolve to the smallest displacement
    const double tol = 1e-12 * std::max(1.0, std::abs(vmax));
    int bx = 0, by = 0;
    double best = -std::numeric_limits<double>::infinity();
    double best_d2 = std::numeric_limits<double>::infinity();
    for (int y = 0; y < map.h; ++y)
        for (int x = 0; x < map.w; ++x) {
            const double val = map.at(x, y);
            if (val < vmax - tol) continue;
            const double ox = wrap_offset(x, map.w), oy = wrap_offset(y, map.h);
            const double d2 = ox * ox + oy * oy;
            if (d2 < best_d2 || (d2 == best_d2 && val > best)) {
                best = val;
                best_d2 = d2;
                bx = x;
                by = y;
            }
        }
    best = map.at(bx, by);
    const auto refine = [&](double minus, double center, double plus) {
        const double den = minus - 2.0 * center + plus;
        if (den >= -1e-12) return 0.0;  // not concave enough to refine
        double d = 0.5 * (minus - plus) / den;
        return std::clamp(d, -0.5, 0.5);
    };
    PeakInfo p;
    p.value = best;
    p.dx = wrap_offset(bx, map.w);
    p.dy = wrap_offset(by, map.h);
    if (map.w >= 3)
        p.dx += refine(map.at((bx + map.w - 1) % map.w, by), best, map.at((bx + 1) % map.w, by));
    if (map.h >= 3)
        p.dy += refine(map.at(bx, (by + map.h - 1) % map.h), best, map.at(bx, (by + 1) % map.h));
    return p;
}

// Staple-style tracker: a frequency-domain correlation filter over HOG cells
// fused with a color-histogram likelihood response, discrete scale search,
// per-frame model updates and snapshot/restore for trace-back.
class StapleTracker {
public:
    StapleTracker(const Image& frame, const Box& box, TrackerConfig config)
        : cfg_(std::move(config)) {
        cfg_.validate();
        require_valid(box, "init box");
        if (box.w < 2.0 || box.h < 2.0) throw std::invalid_argument("init box is degenerate");
        if (intersection_area(box, Box{0, 0, double(frame.width), double(frame.height)}) <= 0.0)
            throw std::invalid_argument("init box outside frame");

        target_w0_ = box.w;
        target_h0_ = box.h;
        const int cell = cfg_.cell_size;
        win_w_ = std::max(2 * cell, int(std::lround(box.w * (1.0 + cfg_.search_padding) / cell)) * cell);
        win_h_ = std::max(2 * cell, int(std::lround(box.h * (1.0 + cfg_.search_padding) / cell)) * cell);
        cells_x_ = win_w_ / cell;
        cells_y_ = win_h_ / cell;

        const double sigma = std::max(
            0.1, cfg_.label_sigma_factor * std::hypot(box.w, box.h) / double(cell));
        label_ft_ = fft2(gaussian_label(cells_x_, cells_y_, sigma), cells_x_, cells_y_);
        hann_ = hann_window(cells_x_, cells_y_);
        bins_ = frame.channels == 1 ? cfg_.hist_bins_gray : cfg_.hist_bins_rgb;

        state_.cx = box.cx();
        state_.cy = box.cy();
        state_.w = box.w;
        state_.h = box.h;
        scale_ = 1.0;
        scale_min_ = 4.0 / std::min(target_w0_, target_h0_);
        scale_max_ = std::min(frame.width / target_w0_, frame.height / target_h0_);

        const Image window = extract_window(frame, state_.cx, state_.cy, 1.0);
        cf_ = train_cf(window);
        hist_ = build_hist(window);
    }

    const TrackerConfig& config() const { return cfg_; }
    const TargetState& state() const { return state_; }
    double scale() const { return scale_; }
    const CorrelationFilterModel& cf_model() const { return cf_; }
    const HistogramModel& hist_model() const { return hist_; }
    int cells_x() const { return cells_x_; }
    int cells_y() const { return cells_y_; }
    int window_width() const { return win_w_; }
    int window_height() const { return win_h_; }

    // Correlation-filter response over the search window at the current
    // position and scale; grid is feature cells, origin = no displacement.
    ResponseMap template_response(const Image& frame) const {
        return cf_response(extract_window(frame, state_.cx, state_.cy, scale_));
    }

    // Histogram likelihood response per window pixel, box-averaged at the
    // target size through an integral image. Values in [0,1].
    ResponseMap histogram_response(const Image& frame) const {
        return hist_response(extract_window(frame, state_.cx, state_.cy, scale_));
    }

    // Both responses fused on the feature-cell grid.
    ResponseMap fused_response(const Image& frame) const {
        const Image window = extract_window(frame, state_.cx, state_.cy, scale_);
        return fuse_maps(cf_response(window), resample_to_cells(hist_response(window)),
                         cfg_.alpha);
    }

    // Translation step: fuse both responses on the cell grid and move the
    // center to the (sub-cell refined) peak.
    TargetState locate(const Image& frame) {
        const ResponseMap fused = fused_response(frame);
        const PeakInfo peak = find_peak(fused);
        const double px_per_cell = cfg_.cell_size * scale_;
        state_.cx = std::clamp(state_.cx + peak.dx * px_per_cell, 0.0, double(frame.width - 1));
        state_.cy = std::clamp(state_.cy + peak.dy * px_per_cell, 0.0, double(frame.height - 1));
        state_.peak = peak.value;
        return state_;
    }

    // Discrete scale search around the located center. Returns the damped
    // multiplier that was applied to the current scale.
    double estimate_scale(const Image& frame) {
        if (cfg_.scale_factors.size() == 1) {
            apply_scale(frame, cfg_.scale_factors[0]);
            return damped(cfg_.scale_factors[0]);
        }
        double best_factor = 1.0;
        double best_peak = -std::numeric_limits<double>::infinity();
        for (double f : cfg_.scale_factors) {
            const Image window = extract_window(frame, state_.cx, state_.cy, scale_ * f);
            const PeakInfo p = find_peak(cf_response(window));
            const bool better =
                p.value > best_peak ||
                (p.value == best_peak && std::abs(std::log(f)) < std::abs(std::log(best_factor)));
            if (better) {
                best_peak = p.value;
                best_factor = f;
            }
        }
        apply_scale(frame, best_factor);
        return damped(best_factor);
    }

    // Blend the correlation filter and histogram models toward the current
    // window: new = (1-lr)*old + lr*fresh.
    void update_models(const Image& frame) {
        const Image window = extract_window(frame, state_.cx, state_.cy, scale_);
        const CorrelationFilterModel fresh_cf = train_cf(window);
        const double a = cfg_.learning_rate_cf;
        for (size_t c = 0; c < cf_.num.size(); ++c)
            for (size_t i = 0; i < cf_.num[c].data.size(); ++i)
                cf_.num[c].data[i] = (1.0 - a) * cf_.num[c].data[i] + a * fresh_cf.num[c].data[i];
        for (size_t i = 0; i < cf_.den.size(); ++i)
            cf_.den[i] = (1.0 - a) * cf_.den[i] + a * fresh_cf.den[i];

        const HistogramModel fresh_h = build_hist(window);
        const double b = cfg_.learning_rate_hist;
        for (size_t i = 0; i < hist_.fg.size(); ++i) {
            hist_.fg[i] = (1.0 - b) * hist_.fg[i] + b * fresh_h.fg[i];
            hist_.bg[i] = (1.0 - b) * hist_.bg[i] + b * fresh_h.bg[i];
        }
        hist_.refresh_ratio();
    }

    // One full tracking iteration on a frame.
    TargetState step(const Image& frame) {
        locate(frame);
        estimate_scale(frame);
        update_models(frame);
        return state_;
    }

    Snapshot snapshot(long frame_index) const {
        return Snapshot{frame_index, cf_, hist_, state_, scale_};
    }

    // Replace models with an archived snapshot and reset the position to the
    // corrected box.
    void restore(const Snapshot& snap, const Box& corrected) {
        require_valid(corrected, "corrected box");
        cf_ = snap.cf;
        hist_ = snap.hist;
        state_ = snap.state;
        state_.cx = corrected.cx();
        state_.cy = corrected.cy();
        state_.w = corrected.w;
        state_.h = corrected.h;
        scale_ = std::clamp(std::sqrt((corrected.w / target_w0_) * (corrected.h / target_h0_)),
                            scale_min_, scale_max_);
    }

    // Reinitialize models from scratch on a frame (degraded correction when
    // the archive no longer holds the needed snapshot).
    void reinitialize(const Image& frame, const Box& box) {
        *this = StapleTracker(frame, box, cfg_);
    }

private:
    Image extract_window(const Image& frame, double cx, double cy, double s) const {
        const Box window = Box::from_center(cx, cy, win_w_ * s, win_h_ * s);
        return crop_resize(frame, window, win_w_, win_h_);
    }

    std::vector<std::vector<double>> windowed_features(const Image& window) const {
        const FeatureMap fm = compute_hog(window, cfg_.cell_size, cfg_.n_orientations);
        std::vector<std::vector<double>> planes(fm.channels);
        for (int c = 0; c < fm.channels; ++c) {
            planes[c] = fm.plane(c);
            for (size_t i = 0; i < planes[c].size(); ++i) planes[c][i] *= hann_[i];
        }
        return planes;
    }

    CorrelationFilterModel train_cf(const Image& window) const {
        const auto planes = windowed_features(window);
        CorrelationFilterModel m;
        m.cells_x = cells_x_;
        m.cells_y = cells_y_;
        m.num.resize(planes.size());
        m.den.assign(planes[0].size(), cfg_.lambda);
        for (size_t c = 0; c < planes.size(); ++c) {
            const ComplexPlane ft = fft2(planes[c], cells_x_, cells_y_);
            ComplexPlane num(cells_x_, cells_y_);
            for (size_t i = 0; i < ft.data.size(); ++i) {
                num.data[i] = label_ft_.data[i] * std::conj(ft.data[i]);
                m.den[i] += std::norm(ft.data[i]);
            }
            m.num[c] = std::move(num);
        }
        return m;
    }

    ResponseMap cf_response(const Image& window) const {
        const auto planes = windowed_features(window);
        ComplexPlane acc(cells_x_, cells_y_);
        for (size_t c = 0; c < planes.size(); ++c) {
            const ComplexPlane ft = fft2(planes[c], cells_x_, cells_y_);
            for (size_t i = 0; i < ft.data.size(); ++i)
                acc.data[i] += ft.data[i] * cf_.num[c].data[i];
        }
        for (size_t i = 0; i < acc.data.size(); ++i) acc.data[i] /= cf_.den[i];
        ResponseMap r;
        r.w = cells_x_;
        r.h = cells_y_;
        r.v = ifft2_real(acc);
        return r;
    }

    HistogramModel build_hist(const Image& window) const {
        HistogramModel m;
        m.bins_per_channel = bins_;
        const int nbins = window.channels == 1 ? bins_ : bins_ * bins_ * bins_;
        m.fg.assign(nbins, 0.0);
        m.bg.assign(nbins, 0.0);
        const auto [fx0, fy0, fx1, fy1] = target_rect_in_window();
        double nfg = 0.0, nbg = 0.0;
        for (int y = 0; y < window.height; ++y)
            for (int x = 0; x < window.width; ++x) {
                const int bin = color_bin(window, x, y, bins_);
                if (x >= fx0 && x < fx1 && y >= fy0 && y < fy1) {
                    m.fg[bin] += 1.0;
                    nfg += 1.0;
                } else {
                    m.bg[bin] += 1.0;
                    nbg += 1.0;
                }
            }
        if (nfg > 0.0)
            for (double& v : m.fg) v /= nfg;
        if (nbg > 0.0)
            for (double& v : m.bg) v /= nbg;
        m.refresh_ratio();
        return m;
    }

    ResponseMap hist_response(const Image& window) const {
        std::vector<double> per_pixel(size_t(window.width) * window.height);
        for (int y = 0; y < window.height; ++y)
            for (int x = 0; x < window.width; ++x)
                per_pixel[size_t(y) * window.width + x] =
                    hist_.ratio[color_bin(window, x, y, bins_)];
        const IntegralImage ii = integral_image(per_pixel, window.width, window.height);
        const int tw = std::max(1, int(std::lround(target_w0_)));
        const int th = std::max(1, int(std::lround(target_h0_)));
        ResponseMap r;
        r.w = window.width;
        r.h = window.height;
        r.v.resize(per_pixel.size());
        for (int y = 0; y < window.height; ++y)
            for (int x = 0; x < window.width; ++x) {
                int x0 = std::clamp(x - tw / 2, 0, window.width - 1);
                int y0 = std::clamp(y - th / 2, 0, window.height - 1);
                const int x1 = std::min(x0 + tw, window.width);
                const int y1 = std::min(y0 + th, window.height);
                x0 = std::min(x0, x1 - 1);
                y0 = std::min(y0, y1 - 1);
                const double area = double(x1 - x0) * double(y1 - y0);
                r.at(x, y) = box_sum(ii, x0, y0, x1 - x0, y1 - y0) / area;
            }
        return r;
    }

    // Sample the pixel-grid histogram response at feature-cell centers.
    ResponseMap resample_to_cells(const ResponseMap& pix) const {
        ResponseMap r;
        r.w = cells_x_;
        r.h = cells_y_;
        r.v.resize(size_t(cells_x_) * cells_y_);
        const int cell = cfg_.cell_size;
        // The CF response is circular with origin at index 0 = window center
        // displacement 0; cell (ix,iy) means displacement wrap(ix) cells. Map
        // that displacement to window pixels around the window center.
        const double cx = 0.5 * win_w_ - 0.5;
        const double cy = 0.5 * win_h_ - 0.5;
        for (int iy = 0; iy < cells_y_; ++iy)
            for (int ix = 0; ix < cells_x_; ++ix) {
                const double px = cx + wrap_offset(ix, cells_x_) * cell;
                const double py = cy + wrap_offset(iy, cells_y_) * cell;
                const int x0 = std::clamp(int(std::floor(px)), 0, pix.w - 1);
                const int y0 = std::clamp(int(std::floor(py)), 0, pix.h - 1);
                const int x1 = std::min(x0 + 1, pix.w - 1);
                const int y1 = std::min(y0 + 1, pix.h - 1);
                const double fx = std::clamp(px - x0, 0.0, 1.0);
                const double fy = std::clamp(py - y0, 0.0, 1.0);
                const double top = pix.at(x0, y0) + fx * (pix.at(x1, y0) - pix.at(x0, y0));
                const double bot = pix.at(x0, y1) + fx * (pix.at(x1, y1) - pix.at(x0, y1));
                r.at(ix, iy) = top + fy * (bot - top);
            }
        return r;
    }

    std::tuple<int, int, int, int> target_rect_in_window() const {
        const int tw = std::max(1, int(std::lround(target_w0_)));
        const int th = std::max(1, int(std::lround(target_h0_)));
        const int fx0 = std::max(0, (win_w_ - tw) / 2);
        const int fy0 = std::max(0, (win_h_ - th) / 2);
        return {fx0, fy0, std::min(win_w_, fx0 + tw), std::min(win_h_, fy0 + th)};
    }

    double damped(double factor) const {
        return 1.0 + cfg_.scale_damping * (factor - 1.0);
    }

    void apply_scale(const Image& frame, double factor) {
        (void)frame;
        scale_ = std::clamp(scale_ * damped(factor), scale_min_, scale_max_);
        state_.w = target_w0_ * scale_;
        state_.h = target_h0_ * scale_;
    }

    TrackerConfig cfg_;
    double target_w0_ = 0.0, target_h0_ = 0.0;
    int win_w_ = 0, win_h_ = 0;
    int cells_x_ = 0, cells_y_ = 0;
    int bins_ = 16;
    ComplexPlane label_ft_;
    std::vector<double> hann_;
    CorrelationFilterModel cf_;
    HistogramModel hist_;
    TargetState state_;
    double scale_ = 1.0, scale_min_ = 0.1, scale_max_ = 10.0;
};

// Restore the tracker from the archived snapshot k-1 with the corrected box
// for frame k, discarding the now-invalid snapshots for frames >= k.
inline void rollback(SnapshotArchive& archive, long k, const Box& corrected,
                     StapleTracker& tracker) {
    const Snapshot* snap = archive.find(k - 1);
    if (snap == nullptr) throw std::runtime_error("archive underflow");
    tracker.restore(*snap, corrected);
    archive.discard_from(k);
}

}  // namespace ptav
