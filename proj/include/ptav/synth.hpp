#pragma once

#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ptav/bench.hpp"

namespace ptav {

// Scripted synthetic sequences: a textured target over a flat background with
// per-frame challenge events, plus exact ground truth.

enum class SynthEventType { kTranslate, kScale, kOcclude, kIlluminate, kTeleport, kClutter };

struct SynthEvent {
    SynthEventType type;
    long start = 0;  // inclusive frame span
    long end = 0;
    double vx = 0.0, vy = 0.0;       // translate: velocity per frame
    double rate = 1.0;               // scale: size multiplier per frame
    Box box;                         // occlude: occluder region
    double opacity = 1.0;            // occlude
    double gain = 1.0;               // illuminate
    double dx = 0.0, dy = 0.0;       // teleport: jump applied at each span frame
    uint64_t seed = 0;               // clutter: distractor placement
    int count = 4;                   // clutter: number of distractors
};

struct SynthScript {
    int canvas_w = 320;
    int canvas_h = 240;
    long frames = 100;
    Box target{60, 80, 32, 32};
    uint64_t texture_seed = 7;
    double bg_r = 0.12, bg_g = 0.12, bg_b = 0.15;
    int texture_block = 2;
    std::vector<SynthEvent> events;
};

namespace detail {

inline std::map<std::string, std::string> parse_kv_tokens(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::stringstream ss(text);
    std::string token;
    while (ss >> token) {
        const size_t eq = token.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("expected key=value, got: " + token);
        kv[token.substr(0, eq)] = token.substr(eq + 1);
    }
    return kv;
}

inline Box parse_box_value(const std::string& v) {
    const std::vector<double> nums = parse_csv_numbers(v);
    if (nums.size() != 4) throw std::invalid_argument("expected x,y,w,h in: " + v);
    return Box{nums[0], nums[1], nums[2], nums[3]};
}

inline std::pair<long, long> parse_span(const std::string& v) {
    const size_t dots = v.find("..");
    if (dots == std::string::npos) throw std::invalid_argument("expected a..b span in: " + v);
    const long a = std::stol(v.substr(0, dots));
    const long b = std::stol(v.substr(dots + 2));
    if (a < 0 || b < a) throw std::invalid_argument("bad span: " + v);
    return {a, b};
}

inline SynthEvent parse_event(const std::string& body) {
    auto kv = parse_kv_tokens(body);
    const auto need = [&](const char* key) -> std::string {
        const auto it = kv.find(key);
        if (it == kv.end())
            throw std::invalid_argument(std::string("event missing key: ") + key);
        std::string v = it->second;
        kv.erase(it);
        return v;
    };
    const auto take = [&](const char* key, const std::string& fallback) -> std::string {
        const auto it = kv.find(key);
        if (it == kv.end()) return fallback;
        std::string v = it->second;
        kv.erase(it);
        return v;
    };

    SynthEvent e;
        e.type = SynthEventType::kTranslate;
    const auto [start, end] = parse_span(need("span"));
    e.start = start;
    e.end = end;
    const std::string type = need("type");
    if (type == "translate") {
        e.type = SynthEventType::kTranslate;
        e.vx = std::stod(need("vx"));
        e.vy = std::stod(need("vy"));
    } else if (type == "scale") {
        e.type = SynthEventType::kScale;
        e.rate = std::stod(need("rate"));
        if (e.rate <= 0.0) throw std::invalid_argument("scale rate must be positive");
    } else if (type == "occlude") {
        e.type = SynthEventType::kOcclude;
        e.box = parse_box_value(need("box"));
        e.opacity = std::stod(need("opacity"));
        if (e.opacity < 0.0 || e.opacity > 1.0)
            throw std::invalid_argument("opacity must be in [0,1]");
    } else if (type == "illuminate") {
        e.type = SynthEventType::kIlluminate;
        e.gain = std::stod(need("gain"));
        if (e.gain <= 0.0) throw std::invalid_argument("gain must be positive");
    } else if (type == "teleport") {
        e.type = SynthEventType::kTeleport;
        e.dx = std::stod(need("dx"));
        e.dy = std::stod(need("dy"));
    } else if (type == "clutter") {
        e.type = SynthEventType::kClutter;
        e.seed = std::stoull(need("seed"));
        e.count = std::stoi(take("count", "4"));
    } else {
        throw std::invalid_argument("unknown event type: " + type);
    }
    if (!kv.empty()) throw std::invalid_argument("unknown event key: " + kv.begin()->first);
    return e;
}

}  // namespace detail

// Flat key=value lines plus `event:` lines; '#' starts a comment.
inline SynthScript parse_synth_script(const std::string& text) {
    SynthScript script;
    std::stringstream ss(text);
    std::string line;
    bool saw_target = false;
    while (std::getline(ss, line)) {
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        while (!line.empty() && std::isspace((unsigned char)line.back())) line.pop_back();
        size_t begin = 0;
        while (begin < line.size() && std::isspace((unsigned char)line[begin])) ++begin;
        line.erase(0, begin);
        if (line.empty()) continue;

        if (line.rfind("event:", 0) == 0) {
            script.events.push_back(detail::parse_event(line.substr(6)));
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("expected key=value: " + line);
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        const auto trim = [](std::string& s) {
            while (!s.empty() && std::isspace((unsigned char)s.front())) s.erase(s.begin());
            while (!s.empty() && std::isspace((unsigned char)s.back())) s.pop_back();
        };
        trim(key);
        trim(value);
        if (key == "canvas_w") script.canvas_w = std::stoi(value);
        else if (key == "canvas_h") script.canvas_h = std::stoi(value);
        else if (key == "frames") script.frames = std::stol(value);
        else if (key == "target") {
            script.target = detail::parse_box_value(value);
            saw_target = true;
        } else if (key == "texture_seed") script.texture_seed = std::stoull(value);
        else if (key == "texture_block") script.texture_block = std::stoi(value);
        else if (key == "bg") {
            const auto nums = detail::parse_csv_numbers(value);
            if (nums.size() != 3) throw std::invalid_argument("bg needs r,g,b");
            script.bg_r = nums[0];
            script.bg_g = nums[1];
            script.bg_b = nums[2];
        } else {
            throw std::invalid_argument("unknown script key: " + key);
        }
    }
    if (script.frames < 1) throw std::invalid_argument("script needs at least one frame");
    if (script.canvas_w < 8 || script.canvas_h < 8)
        throw std::invalid_argument("canvas too small");
    if (!box_valid(script.target)) throw std::invalid_argument("bad target box");
    (void)saw_target;

    // events of one type must not overlap in time
    for (size_t i = 0; i < script.events.size(); ++i)
        for (size_t j = i + 1; j < script.events.size(); ++j) {
            const SynthEvent& a = script.events[i];
            const SynthEvent& b = script.events[j];
            if (a.type == b.type && a.start <= b.end && b.start <= a.end)
                throw std::invalid_argument("overlapping events of one type");
        }
    return script;
}

inline SynthScript parse_synth_script_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_synth_script(ss.str());
}

namespace detail {

inline Image blocky_texture(int w, int h, uint64_t seed, int block) {
    Image tex(std::max(1, w), std::max(1, h), 3);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> uni(0.35f, 1.0f);
    const int bw = (tex.width + block - 1) / block, bh = (tex.height + block - 1) / block;
    std::vector<float> colors(size_t(bw) * bh * 3);
    for (float& c : colors) c = uni(rng);
    for (int y = 0; y < tex.height; ++y)
        for (int x = 0; x < tex.width; ++x)
            for (int c = 0; c < 3; ++c)
                tex.at(x, y, c) = colors[(size_t(y / block) * bw + x / block) * 3 + c];
    return tex;
}

struct ClutterPatch {
    int x, y;
    Image tex;
};

inline std::vector<ClutterPatch> make_clutter(const SynthScript& script, const SynthEvent& e) {
    std::vector<ClutterPatch> patches;
    std::mt19937_64 rng(e.seed * 0x9e3779b97f4a7c15ull + 1);
    for (int i = 0; i < e.count; ++i) {
        const int w = 10 + int(rng() % 20);
        const int h = 10 + int(rng() % 20);
        const int x = int(rng() % uint64_t(std::max(1, script.canvas_w - w)));
        const int y = int(rng() % uint64_t(std::max(1, script.canvas_h - h)));
        patches.push_back(ClutterPatch{x, y, blocky_texture(w, h, rng(), script.texture_block)});
    }
    return patches;
}

inline void paint_patch(Image& frame, const Image& tex, int x0, int y0) {
    for (int y = 0; y < tex.height; ++y) {
        const int fy = y0 + y;
        if (fy < 0 || fy >= frame.height) continue;
        for (int x = 0; x < tex.width; ++x) {
            const int fx = x0 + x;
            if (fx < 0 || fx >= frame.width) continue;
            for (int c = 0; c < 3; ++c) frame.at(fx, fy, c) = tex.at(x, y, c);
        }
    }
}

}  // namespace detail

// Render the scripted sequence. Deterministic for a given (script, seed);
// frames are quantized to the 8-bit lattice so in-memory output equals a
// save/load round trip. Ground truth is the true target box, also during
// occlusion.
inline Sequence synth_generate(const SynthScript& script, uint64_t seed) {
    const Image base_tex = detail::blocky_texture(
        int(std::lround(script.target.w)), int(std::lround(script.target.h)),
        seed * 1000003ull + script.texture_seed, script.texture_block);

    std::vector<std::vector<detail::ClutterPatch>> clutter_sets;
    for (const SynthEvent& e : script.events)
        if (e.type == SynthEventType::kClutter)
            clutter_sets.push_back(detail::make_clutter(script, e));

    std::vector<Image> frames;
    std::vector<Box> gt;
    double x = script.target.x, y = script.target.y;
    double w = script.target.w, h = script.target.h;

    for (long f = 0; f < script.frames; ++f) {
        bool teleported = false;
        for (const SynthEvent& e : script.events) {
            if (f < e.start || f > e.end) continue;
            switch (e.type) {
                case SynthEventType::kTranslate:
                    x += e.vx;
                    y += e.vy;
                    break;
                case SynthEventType::kScale: {
                    const double cx = x + 0.5 * w, cy = y + 0.5 * h;
                    w *= e.rate;
                    h *= e.rate;
                    x = cx - 0.5 * w;
                    y = cy - 0.5 * h;
                    break;
                }
                case SynthEventType::kTeleport:
                    x += e.dx;
                    y += e.dy;
                    teleported = true;
                    break;
                default:
                    break;
            }
        }

        const Box target{x, y, w, h};
        const Box canvas{0, 0, double(script.canvas_w), double(script.canvas_h)};
        const double visible = intersection_area(target, canvas);
        if (visible <= 0.0)
            throw std::invalid_argument("target fully out of frame at frame " +
                                        std::to_string(f));
        if (!teleported && visible < 0.5 * target.area())
            throw std::invalid_argument("target less than half visible at frame " +
                                        std::to_string(f));

        Image frame(script.canvas_w, script.canvas_h, 3);
        for (int py = 0; py < frame.height; ++py)
            for (int px = 0; px < frame.width; ++px) {
                frame.at(px, py, 0) = float(script.bg_r);
                frame.at(px, py, 1) = float(script.bg_g);
                frame.at(px, py, 2) = float(script.bg_b);
            }

        size_t clutter_idx = 0;
        for (const SynthEvent& e : script.events) {
            if (e.type != SynthEventType::kClutter) continue;
            if (f >= e.start && f <= e.end)
                for (const detail::ClutterPatch& p : clutter_sets[clutter_idx])
                    detail::paint_patch(frame, p.tex, p.x, p.y);
            ++clutter_idx;
        }

        const int cur_w = std::max(1, int(std::lround(w)));
        const int cur_h = std::max(1, int(std::lround(h)));
        const Image scaled =
            (cur_w == base_tex.width && cur_h == base_tex.height)
                ? base_tex
                : crop_resize(base_tex, Box{0, 0, double(base_tex.width), double(base_tex.height)},
                              cur_w, cur_h);
        detail::paint_patch(frame, scaled, int(std::lround(x)), int(std::lround(y)));

        for (const SynthEvent& e : script.events) {
            if (f < e.start || f > e.end) continue;
            if (e.type == SynthEventType::kOcclude) {
                const int ox0 = std::max(0, int(std::lround(e.box.x)));
                const int oy0 = std::max(0, int(std::lround(e.box.y)));
                const int ox1 = std::min(frame.width, int(std::lround(e.box.x2())));
                const int oy1 = std::min(frame.height, int(std::lround(e.box.y2())));
                const float a = float(e.opacity);
                const float occ[3] = {0.5f, 0.5f, 0.5f};
                for (int py = oy0; py < oy1; ++py)
                    for (int px = ox0; px < ox1; ++px)
                        for (int c = 0; c < 3; ++c)
                            frame.at(px, py, c) =
                                (1.0f - a) * frame.at(px, py, c) + a * occ[c];
            } else if (e.type == SynthEventType::kIlluminate) {
                for (float& v : frame.data) v = std::min(1.0f, v * float(e.gain));
            }
        }

        // quantize to the 8-bit lattice a save/load round trip would produce
        for (float& v : frame.data)
            v = float(std::lround(double(std::clamp(v, 0.0f, 1.0f)) * 255.0)) / 255.0f;

        frames.push_back(std::move(frame));
        gt.push_back(target);
    }
    return Sequence::in_memory("synth", std::move(frames), std::move(gt));
}

// Write a generated sequence in the loadable directory layout.
inline void save_sequence(const Sequence& seq, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(dir) / "img");
    char name[32];
    for (size_t i = 0; i < seq.size(); ++i) {
        std::snprintf(name, sizeof(name), "%04zu.ppm", i + 1);
        save_ppm(*seq.frame(i), (fs::path(dir) / "img" / name).string());
    }
    if (seq.has_ground_truth())
        save_ground_truth((fs::path(dir) / "groundtruth_rect.txt").string(),
                          seq.ground_truth());
}

}  // namespace ptav
