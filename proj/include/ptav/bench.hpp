#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ptav/image_io.hpp"
#include "ptav/runtime.hpp"

namespace ptav {

// ---------------------------------------------------------------------------
// Sequences: OTB-style directory layout or in-memory frames.

class Sequence : public FrameSource {
public:
    Sequence() = default;

    static Sequence from_paths(std::string name, std::vector<std::string> paths,
                               std::optional<std::vector<Box>> gt) {
        Sequence s;
        s.name_ = std::move(name);
        s.paths_ = std::move(paths);
        s.gt_ = std::move(gt);
        return s;
    }

    static Sequence in_memory(std::string name, std::vector<Image> frames,
                              std::optional<std::vector<Box>> gt) {
        Sequence s;
        s.name_ = std::move(name);
        for (Image& f : frames) s.frames_.push_back(std::make_shared<const Image>(std::move(f)));
        s.gt_ = std::move(gt);
        return s;
    }

    size_t size() const override { return paths_.empty() ? frames_.size() : paths_.size(); }

    std::shared_ptr<const Image> frame(size_t index) const override {
        if (!frames_.empty()) return frames_.at(index);
        return std::make_shared<const Image>(load_image(paths_.at(index)));
    }

    const std::string& name() const { return name_; }
    bool has_ground_truth() const { return gt_.has_value(); }
    const std::vector<Box>& ground_truth() const {
        if (!gt_) throw std::runtime_error("sequence has no ground truth");
        return *gt_;
    }
    const std::vector<std::string>& paths() const { return paths_; }

private:
    std::string name_;
    std::vector<std::string> paths_;
    std::vector<std::shared_ptr<const Image>> frames_;
    std::optional<std::vector<Box>> gt_;
};

namespace detail {

// numeric sort key: last run of digits in the file stem
inline long numeric_key(const std::filesystem::path& p) {
    const std::string stem = p.stem().string();
    long value = -1;
    size_t i = stem.size();
    while (i > 0 && std::isdigit((unsigned char)stem[i - 1])) --i;
    if (i < stem.size()) value = std::stol(stem.substr(i));
    return value;
}

inline std::vector<double> parse_csv_numbers(const std::string& line) {
    std::vector<double> out;
    std::string token;
    std::stringstream ss(line);
    while (std::getline(ss, token, ',')) {
        if (token.empty()) continue;
        out.push_back(std::stod(token));
    }
    return out;
}

}  // namespace detail

// Ground-truth files use 1-based x,y (OTB convention); boxes are 0-based in
// memory.
inline std::vector<Box> load_ground_truth(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::vector<Box> boxes;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (line.empty()) continue;
        for (char& c : line)
            if (c == '\t' || c == ' ') c = ',';
        const std::vector<double> v = detail::parse_csv_numbers(line);
        if (v.size() != 4) throw std::runtime_error("malformed ground-truth line: " + line);
        boxes.push_back(Box{v[0] - 1.0, v[1] - 1.0, v[2], v[3]});
    }
    return boxes;
}

inline void save_ground_truth(const std::string& path, const std::vector<Box>& boxes) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    char buf[128];
    for (const Box& b : boxes) {
        std::snprintf(buf, sizeof(buf), "%.4f,%.4f,%.4f,%.4f\n", b.x + 1.0, b.y + 1.0, b.w, b.h);
        out << buf;
    }
}

// Results files share the ground-truth format (1-based coordinates).
inline void save_results(const std::string& path, const std::vector<Box>& boxes) {
    save_ground_truth(path, boxes);
}
inline std::vector<Box> load_results(const std::string& path) { return load_ground_truth(path); }

// Load `dir/img/####.(png|ppm|pgm|jpg|jpeg)` plus optional
// `dir/groundtruth_rect.txt`.
inline Sequence load_sequence(const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path root(dir);
    const fs::path img_dir = root / "img";
    if (!fs::is_directory(img_dir)) throw std::runtime_error("no img/ directory under " + dir);

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(img_dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string ext = detail::lower_ext(entry.path().string());
        if (ext == ".png" || ext == ".ppm" || ext == ".pgm" || ext == ".jpg" || ext == ".jpeg")
            files.push_back(entry.path());
    }
    if (files.empty()) throw std::runtime_error("no frames under " + img_dir.string());
    std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
        const long ka = detail::numeric_key(a), kb = detail::numeric_key(b);
        if (ka != kb) return ka < kb;
        return a.filename().string() < b.filename().string();
    });

    std::vector<std::string> paths;
    for (const fs::path& p : files) paths.push_back(p.string());

    std::optional<std::vector<Box>> gt;
    const fs::path gt_path = root / "groundtruth_rect.txt";
    if (fs::exists(gt_path)) {
        gt = load_ground_truth(gt_path.string());
        if (gt->size() != paths.size())
            throw std::runtime_error("frame/ground-truth count mismatch in " + dir);
    }
    return Sequence::from_paths(root.filename().string(), std::move(paths), std::move(gt));
}

// ---------------------------------------------------------------------------
// Metrics

inline double iou(const Box& a, const Box& b) {
    require_valid(a);
    require_valid(b);
    const double inter = intersection_area(a, b);
    const double uni = a.area() + b.area() - inter;
    return inter / uni;
}

inline double cle(const Box& a, const Box& b) {
    require_valid(a);
    require_valid(b);
    return center_distance(a, b);
}

struct MetricsReport {
    double dpr20 = 0.0;
    double osr50 = 0.0;
    double mean_cle = 0.0;
    double fps = 0.0;
    std::vector<double> precision_curve;  // thresholds 0..50 px
    std::vector<double> success_curve;    // iou thresholds 0..1, 101 samples
};

inline MetricsReport compute_metrics(const std::vector<Box>& results,
                                     const std::vector<Box>& gt) {
    if (results.size() != gt.size() || results.empty())
        throw std::invalid_argument("results and ground truth must have equal nonzero length");
    const size_t n = results.size();
    std::vector<double> cles(n), ious(n);
    for (size_t i = 0; i < n; ++i) {
        cles[i] = cle(results[i], gt[i]);
        ious[i] = iou(results[i], gt[i]);
    }
    MetricsReport r;
    r.precision_curve.resize(51);
    for (int t = 0; t <= 50; ++t) {
        size_t hits = 0;
        for (double c : cles)
            if (c <= double(t)) ++hits;
        r.precision_curve[size_t(t)] = double(hits) / double(n);
    }
    r.success_curve.resize(101);
    for (int i = 0; i <= 100; ++i) {
        const double thr = double(i) / 100.0;
        size_t hits = 0;
        for (double v : ious)
            if (v >= thr) ++hits;
        r.success_curve[size_t(i)] = double(hits) / double(n);
    }
    r.dpr20 = r.precision_curve[20];
    r.osr50 = r.success_curve[50];
    double total = 0.0;
    for (double c : cles) total += c;
    r.mean_cle = total / double(n);
    return r;
}

// ---------------------------------------------------------------------------
// One-pass evaluation

struct OpeResult {
    std::string sequence;
    MetricsReport metrics;
    TrackRun run;
};

struct OpeSummary {
    std::vector<OpeResult> per_sequence;
    MetricsReport aggregate;
};

inline OpeSummary run_ope(const std::vector<const Sequence*>& sequences,
                          const PtavOptions& options) {
    if (sequences.empty()) throw std::invalid_argument("no sequences");
    OpeSummary summary;
    for (const Sequence* seq : sequences) {
        if (!seq->has_ground_truth())
            throw std::runtime_error("sequence " + seq->name() + " has no ground truth");
        const Box init = seq->ground_truth().front();
        TrackRun tr = run(*seq, init, options);
        if (tr.aborted)
            throw std::runtime_error("sequence " + seq->name() + " aborted: " + tr.abort_reason);
        MetricsReport m = compute_metrics(tr.boxes, seq->ground_truth());
        m.fps = tr.fps;
        summary.per_sequence.push_back(OpeResult{seq->name(), std::move(m), std::move(tr)});
    }
    MetricsReport& agg = summary.aggregate;
    agg.precision_curve.assign(51, 0.0);
    agg.success_curve.assign(101, 0.0);
    for (const OpeResult& r : summary.per_sequence) {
        agg.dpr20 += r.metrics.dpr20;
        agg.osr50 += r.metrics.osr50;
        agg.mean_cle += r.metrics.mean_cle;
        agg.fps += r.metrics.fps;
        for (size_t i = 0; i < agg.precision_curve.size(); ++i)
            agg.precision_curve[i] += r.metrics.precision_curve[i];
        for (size_t i = 0; i < agg.success_curve.size(); ++i)
            agg.success_curve[i] += r.metrics.success_curve[i];
    }
    const double n = double(summary.per_sequence.size());
    agg.dpr20 /= n;
    agg.osr50 /= n;
    agg.mean_cle /= n;
    agg.fps /= n;
    for (double& v : agg.precision_curve) v /= n;
    for (double& v : agg.success_curve) v /= n;
    return summary;
}

// ---------------------------------------------------------------------------
// Report and plot output

inline std::string metrics_to_text(const MetricsReport& m) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "dpr20 = %.6f\nosr50 = %.6f\nmean_cle = %.6f\nfps = %.2f\n", m.dpr20, m.osr50,
                  m.mean_cle, m.fps);
    return buf;
}

inline void write_curves_csv(const std::string& path,
                             const std::vector<std::pair<std::string, const std::vector<double>*>>& runs,
                             const std::string& x_name, double x_step) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << x_name;
    for (const auto& [name, curve] : runs) out << "," << name;
    out << "\n";
    const size_t samples = runs.front().second->size();
    char buf[64];
    for (size_t i = 0; i < samples; ++i) {
        std::snprintf(buf, sizeof(buf), "%.4f", double(i) * x_step);
        out << buf;
        for (const auto& [name, curve] : runs) {
            std::snprintf(buf, sizeof(buf), ",%.6f", (*curve)[i]);
            out << buf;
        }
        out << "\n";
    }
}

// Minimal standalone SVG line plot; textual and dependency-free.
inline void write_curves_svg(const std::string& path, const std::string& title,
                             const std::string& x_label,
                             const std::vector<std::pair<std::string, const std::vector<double>*>>& runs,
                             double x_max) {
    static const char* kColors[] = {"#c62828", "#1565c0", "#2e7d32", "#ef6c00",
                                    "#6a1b9a", "#00838f", "#4e342e", "#37474f"};
    const int width = 640, height = 460;
    const int ml = 60, mr = 20, mt = 40, mb = 50;
    const double pw = width - ml - mr, ph = height - mt - mb;

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
        << title << "</text>\n";
    // axes
    out << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
        << mt + ph << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
        << "\" stroke=\"black\"/>\n";
    char buf[160];
    for (int i = 0; i <= 5; ++i) {
        const double fx = double(i) / 5.0;
        const double x = ml + fx * pw;
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%.1f\" y=\"%d\" text-anchor=\"middle\" font-size=\"11\">%.2g"
                      "</text>\n",
                      x, mt + int(ph) + 18, fx * x_max);
        out << buf;
        const double y = mt + ph - fx * ph;
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%d\" y=\"%.1f\" text-anchor=\"end\" font-size=\"11\">%.1f"
                      "</text>\n",
                      ml - 6, y + 4, fx);
        out << buf;
    }
    out << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 10
        << "\" text-anchor=\"middle\" font-size=\"12\">" << x_label << "</text>\n";

    int color_idx = 0;
    int legend_y = mt + 8;
    for (const auto& [name, curve] : runs) {
        const char* color = kColors[color_idx % 8];
        ++color_idx;
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        const size_t n = curve->size();
        for (size_t i = 0; i < n; ++i) {
            const double x = ml + (n == 1 ? 0.0 : double(i) / double(n - 1)) * pw;
            const double y = mt + ph - std::clamp((*curve)[i], 0.0, 1.0) * ph;
            std::snprintf(buf, sizeof(buf), "%.1f,%.1f ", x, y);
            out << buf;
        }
        out << "\"/>\n";
        std::snprintf(buf, sizeof(buf),
                      "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" stroke=\"%s\" "
                      "stroke-width=\"2\"/><text x=\"%d\" y=\"%d\" font-size=\"11\">%s</text>\n",
                      ml + int(pw) - 150, legend_y, ml + int(pw) - 130, legend_y, color,
                      ml + int(pw) - 124, legend_y + 4, name.c_str());
        out << buf;
        legend_y += 16;
    }
    out << "</svg>\n";
}

// Draw a rectangle outline into an RGB copy of the frame.
inline Image annotate_frame(const Image& frame, const Box& box, float r = 1.0f, float g = 0.1f,
                            float b = 0.1f, int thickness = 2) {
    Image out = frame.channels == 3 ? frame : Image(frame.width, frame.height, 3);
    if (frame.channels == 1)
        for (int y = 0; y < frame.height; ++y)
            for (int x = 0; x < frame.width; ++x)
                out.at(x, y, 0) = out.at(x, y, 1) = out.at(x, y, 2) = frame.at(x, y, 0);
    const int x0 = int(std::lround(box.x)), y0 = int(std::lround(box.y));
    const int x1 = int(std::lround(box.x2())), y1 = int(std::lround(box.y2()));
    const auto put = [&](int x, int y) {
        if (x < 0 || y < 0 || x >= out.width || y >= out.height) return;
        out.at(x, y, 0) = r;
        out.at(x, y, 1) = g;
        out.at(x, y, 2) = b;
    };
    for (int t = 0; t < thickness; ++t) {
        for (int x = x0 - t; x <= x1 + t; ++x) {
            put(x, y0 - t);
            put(x, y1 + t);
        }
        for (int y = y0 - t; y <= y1 + t; ++y) {
            put(x0 - t, y);
            put(x1 + t, y);
        }
    }
    return out;
}

}  // namespace ptav
