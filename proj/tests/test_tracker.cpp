#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "ptav/image.hpp"
#include "ptav/tracker.hpp"
#include "test_scenes.hpp"

using namespace ptav;

namespace {

TrackerConfig small_config() {
    TrackerConfig cfg;
    cfg.cell_size = 2;
    return cfg;
}

}  // namespace

TEST_CASE("init trains a filter whose response peaks on the initial target") {
    // white square on black
    Image frame(60, 60, 1, 0.0f);
    for (int y = 20; y < 40; ++y)
        for (int x = 20; x < 40; ++x) frame.at(x, y, 0) = 1.0f;
    StapleTracker tracker(frame, Box{20, 20, 20, 20}, TrackerConfig{});
    const PeakInfo p = find_peak(tracker.template_response(frame));
    REQUIRE(std::abs(p.dx) <= 0.5);
    REQUIRE(std::abs(p.dy) <= 0.5);
}

TEST_CASE("init on a constant image does not crash and tracking stays put") {
    Image frame(50, 50, 3, 0.5f);
    StapleTracker tracker(frame, Box{15, 15, 16, 16}, small_config());
    const TargetState s = tracker.step(frame);
    REQUIRE(s.cx == Catch::Approx(23.0).margin(1.0));
    REQUIRE(s.cy == Catch::Approx(23.0).margin(1.0));
}

TEST_CASE("init accepts a box partially outside the frame") {
    const Image tex = scenes::make_texture(20, 20, 5);
    const Image frame = scenes::frame_with_target(60, 60, tex, -1, -1);
    REQUIRE_NOTHROW(StapleTracker(frame, Box{-1, -1, 20, 20}, TrackerConfig{}));
}

TEST_CASE("init rejects degenerate or fully outside boxes") {
    Image frame(40, 40, 1, 0.3f);
    REQUIRE_THROWS_AS(StapleTracker(frame, Box{5, 5, 0, 10}, TrackerConfig{}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(StapleTracker(frame, Box{100, 100, 10, 10}, TrackerConfig{}),
                      std::invalid_argument);
}

TEST_CASE("template response peak follows a synthetic shift") {
    const Image tex = scenes::make_texture(16, 16, 42);
    const Image f0 = scenes::frame_with_target(64, 64, tex, 24, 24);
    const Image f1 = scenes::frame_with_target(64, 64, tex, 28, 26);  // shift (4,2)
    StapleTracker tracker(f0, Box{24, 24, 16, 16}, small_config());

    const PeakInfo still = find_peak(tracker.template_response(f0));
    REQUIRE(std::abs(still.dx * 2.0) <= 1.0);
    REQUIRE(std::abs(still.dy * 2.0) <= 1.0);

    const PeakInfo moved = find_peak(tracker.template_response(f1));
    REQUIRE(std::abs(moved.dx * 2.0 - 4.0) <= 1.0);  // cells -> px with cell_size 2
    REQUIRE(std::abs(moved.dy * 2.0 - 2.0) <= 1.0);
}

TEST_CASE("all-zero features give an all-zero template response") {
    Image frame(48, 48, 1, 0.7f);
    StapleTracker tracker(frame, Box{16, 16, 16, 16}, small_config());
    const ResponseMap r = tracker.template_response(frame);
    for (double v : r.v) REQUIRE(v == 0.0);
}

TEST_CASE("histogram response separates distinct fg/bg colors") {
    Image frame(80, 80, 3, 0.0f);
    for (int y = 30; y < 50; ++y)
        for (int x = 30; x < 50; ++x) {
            frame.at(x, y, 0) = 0.95f;
            frame.at(x, y, 1) = 0.1f;
            frame.at(x, y, 2) = 0.1f;
        }
    StapleTracker tracker(frame, Box{30, 30, 20, 20}, TrackerConfig{});
    const ResponseMap r = tracker.histogram_response(frame);
    REQUIRE(r.at(r.w / 2, r.h / 2) > 0.9);
    REQUIRE(r.at(1, 1) < 0.1);
}

TEST_CASE("histogram response is flat when fg and bg share one color") {
    Image frame(64, 64, 3, 0.4f);
    StapleTracker tracker(frame, Box{20, 20, 16, 16}, TrackerConfig{});
    const ResponseMap r = tracker.histogram_response(frame);
    for (double v : r.v) REQUIRE(v == Catch::Approx(r.v[0]).margin(1e-12));
}

TEST_CASE("histogram response equals a naive per-position box-mean oracle") {
    const Image tex = scenes::make_texture(18, 14, 9);
    const Image frame = scenes::frame_with_target(70, 60, tex, 20, 20);
    StapleTracker tracker(frame, Box{20, 20, 18, 14}, TrackerConfig{});
    const ResponseMap r = tracker.histogram_response(frame);

    // reconstruct the same window and ratio plane, then average naively
    const Image window = crop_resize(
        frame,
        Box::from_center(tracker.state().cx, tracker.state().cy,
                         tracker.window_width() * tracker.scale(),
                         tracker.window_height() * tracker.scale()),
        tracker.window_width(), tracker.window_height());
    const auto& hm = tracker.hist_model();
    const int tw = 18, th = 14;
    for (int y = 0; y < window.height; ++y)
        for (int x = 0; x < window.width; ++x) {
            int x0 = std::clamp(x - tw / 2, 0, window.width - 1);
            int y0 = std::clamp(y - th / 2, 0, window.height - 1);
            const int x1 = std::min(x0 + tw, window.width);
            const int y1 = std::min(y0 + th, window.height);
            x0 = std::min(x0, x1 - 1);
            y0 = std::min(y0, y1 - 1);
            double acc = 0.0;
            for (int yy = y0; yy < y1; ++yy)
                for (int xx = x0; xx < x1; ++xx)
                    acc += hm.ratio[color_bin(window, xx, yy, hm.bins_per_channel)];
            acc /= double(x1 - x0) * double(y1 - y0);
            REQUIRE(r.at(x, y) == Catch::Approx(acc).margin(1e-9));
        }
}

TEST_CASE("fuse_maps implements the linear combination") {
    ResponseMap a{2, 2, {1.0, 1.0, 1.0, 1.0}};
    ResponseMap b{2, 2, {0.5, 0.5, 0.5, 0.5}};
    const ResponseMap f = fuse_maps(a, b, 0.3);
    for (double v : f.v) REQUIRE(v == Catch::Approx(0.7 * 1.0 + 0.3 * 0.5));
    const ResponseMap t_only = fuse_maps(a, b, 0.0);
    REQUIRE(t_only.v == a.v);
    const ResponseMap h_only = fuse_maps(a, b, 1.0);
    REQUIRE(h_only.v == b.v);
}

TEST_CASE("locate with alpha 0 reduces to template-only localization") {
    const Image tex = scenes::make_texture(16, 16, 3);
    const Image f0 = scenes::frame_with_target(64, 64, tex, 20, 20);
    const Image f1 = scenes::frame_with_target(64, 64, tex, 24, 22);
    TrackerConfig cfg = small_config();
    cfg.alpha = 0.0;
    StapleTracker tracker(f0, Box{20, 20, 16, 16}, cfg);
    const PeakInfo p = find_peak(tracker.template_response(f1));
    const double expect_cx = 28.0 + p.dx * 2.0;
    const double expect_cy = 28.0 + p.dy * 2.0;
    const TargetState s = tracker.locate(f1);
    REQUIRE(s.cx == Catch::Approx(expect_cx).margin(1e-12));
    REQUIRE(s.cy == Catch::Approx(expect_cy).margin(1e-12));
}

TEST_CASE("locate with alpha 1 reduces to histogram-only localization") {
    const Image tex = scenes::make_texture(16, 16, 3);
    const Image f0 = scenes::frame_with_target(64, 64, tex, 20, 20);
    const Image f1 = scenes::frame_with_target(64, 64, tex, 24, 22);
    TrackerConfig cfg = small_config();
    cfg.alpha = 1.0;
    StapleTracker tracker(f0, Box{20, 20, 16, 16}, cfg);
    const PeakInfo p = find_peak(tracker.fused_response(f1));
    const TargetState s = tracker.locate(f1);
    REQUIRE(s.cx == Catch::Approx(28.0 + p.dx * 2.0).margin(1e-12));
    REQUIRE(s.cy == Catch::Approx(28.0 + p.dy * 2.0).margin(1e-12));
}

TEST_CASE("argmax of the fused map is invariant to positive scaling of both maps") {
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        ResponseMap a{7, 5, {}}, b{7, 5, {}};
        a.v.resize(35);
        b.v.resize(35);
        for (double& v : a.v) v = uni(rng);
        for (double& v : b.v) v = uni(rng);
        const double c = 0.1 + 5.0 * uni(rng);
        ResponseMap ac = a, bc = b;
        for (double& v : ac.v) v *= c;
        for (double& v : bc.v) v *= c;
        const PeakInfo p1 = find_peak(fuse_maps(a, b, 0.3));
        const PeakInfo p2 = find_peak(fuse_maps(ac, bc, 0.3));
        REQUIRE(std::lround(p1.dx * 2) == std::lround(p2.dx * 2));
        REQUIRE(std::lround(p1.dy * 2) == std::lround(p2.dy * 2));
    }
}

TEST_CASE("scale estimation is stable on a static scene") {
    const Image tex = scenes::make_texture(20, 20, 8);
    const Image frame = scenes::frame_with_target(80, 80, tex, 30, 30);
    StapleTracker tracker(frame, Box{30, 30, 20, 20}, TrackerConfig{});
    tracker.locate(frame);
    REQUIRE(tracker.estimate_scale(frame) == 1.0);
    REQUIRE(tracker.state().w == Catch::Approx(20.0));
}

TEST_CASE("a single scale factor of one always yields one") {
    const Image tex = scenes::make_texture(20, 20, 8);
    const Image frame = scenes::frame_with_target(80, 80, tex, 30, 30);
    TrackerConfig cfg;
    cfg.scale_factors = {1.0};
    StapleTracker tracker(frame, Box{30, 30, 20, 20}, cfg);
    for (int i = 0; i < 3; ++i) {
        tracker.locate(frame);
        REQUIRE(tracker.estimate_scale(frame) == 1.0);
    }
}

TEST_CASE("scale search follows a growing target most of the time") {
    // 1.5% growth per frame outruns the default 1.5% scale step after
    // damping, so this scene uses the config-expandable 3% step
    const Image tex = scenes::make_texture(48, 48, 15);
    std::optional<StapleTracker> tracker;
    int grown = 0, frames = 0;
    double size = 48.0;
    for (int i = 0; i < 50; ++i) {
        const int cur = int(std::lround(size));
        const Image scaled = crop_resize(tex, Box{0, 0, 48, 48}, cur, cur);
        const Image frame =
            scenes::frame_with_target(240, 240, scaled, 120 - cur / 2, 120 - cur / 2);
        if (i == 0) {
            TrackerConfig cfg;
            cfg.scale_factors = {0.97, 1.0, 1.03};
            tracker.emplace(frame, Box::from_center(120, 120, size, size), cfg);
        } else {
            tracker->locate(frame);
            if (tracker->estimate_scale(frame) > 1.0) ++grown;
            tracker->update_models(frame);
            ++frames;
        }
        size *= 1.015;
    }
    REQUIRE(grown >= int(0.8 * frames));
}

TEST_CASE("model updates blend with the configured learning rate") {
    const Image tex = scenes::make_texture(16, 16, 21);
    const Image f0 = scenes::frame_with_target(64, 64, tex, 24, 24);

    SECTION("learning rate zero leaves the model unchanged") {
        TrackerConfig cfg = small_config();
        cfg.learning_rate_cf = 0.0;
        cfg.learning_rate_hist = 0.0;
        StapleTracker tracker(f0, Box{24, 24, 16, 16}, cfg);
        const auto cf0 = tracker.cf_model();
        const auto h0 = tracker.hist_model();
        const Image other = scenes::frame_with_target(64, 64, tex, 28, 24);
        tracker.update_models(other);
        REQUIRE(tracker.cf_model() == cf0);
        REQUIRE(tracker.hist_model() == h0);
    }
    SECTION("learning rate one replaces the model with the fresh estimate") {
        TrackerConfig cfg = small_config();
        cfg.learning_rate_cf = 1.0;
        cfg.learning_rate_hist = 1.0;
        StapleTracker tracker(f0, Box{24, 24, 16, 16}, cfg);
        const auto cf0 = tracker.cf_model();
        tracker.update_models(f0);  // same frame -> fresh estimate equals init model
        const auto& cf1 = tracker.cf_model();
        for (size_t c = 0; c < cf1.num.size(); ++c)
            for (size_t i = 0; i < cf1.num[c].data.size(); ++i)
                REQUIRE(std::abs(cf1.num[c].data[i] - cf0.num[c].data[i]) < 1e-12);
    }
    SECTION("learning rate one-half is a fixpoint on a constant scene") {
        TrackerConfig cfg = small_config();
        cfg.learning_rate_cf = 0.5;
        StapleTracker tracker(f0, Box{24, 24, 16, 16}, cfg);
        const auto a0 = tracker.cf_model();
        tracker.update_models(f0);
        tracker.update_models(f0);
        const auto& a2 = tracker.cf_model();
        for (size_t c = 0; c < a2.num.size(); ++c)
            for (size_t i = 0; i < a2.num[c].data.size(); ++i)
                REQUIRE(std::abs(a2.num[c].data[i] - a0.num[c].data[i]) < 1e-12);
    }
}

TEST_CASE("snapshot archive keeps the last capacity entries contiguously") {
    SnapshotArchive archive(3);
    for (long f = 0; f < 5; ++f) {
        Snapshot s;
        s.frame_index = f;
        archive.push(std::move(s));
    }
    REQUIRE(archive.size() == 3);
    REQUIRE(archive.min_index() == 2);
    REQUIRE(archive.max_index() == 4);
    REQUIRE(archive.find(1) == nullptr);
    REQUIRE(archive.find(3)->frame_index == 3);
    Snapshot bad;
    bad.frame_index = 9;
    REQUIRE_THROWS_AS(archive.push(std::move(bad)), std::logic_error);
}

TEST_CASE("archived snapshots are returned bit-identical") {
    const Image tex = scenes::make_texture(16, 16, 33);
    const Image f0 = scenes::frame_with_target(64, 64, tex, 20, 20);
    StapleTracker tracker(f0, Box{20, 20, 16, 16}, small_config());
    SnapshotArchive archive(4);
    archive.push(tracker.snapshot(0));
    const Image f1 = scenes::frame_with_target(64, 64, tex, 22, 20);
    tracker.step(f1);
    archive.push(tracker.snapshot(1));
    REQUIRE(*archive.find(1) == tracker.snapshot(1));
    REQUIRE(archive.find(0)->frame_index == 0);
}

TEST_CASE("rollback restores the archived state and truncates the archive") {
    const Image tex = scenes::make_texture(16, 16, 50);
    auto frames = scenes::translating_sequence(8, 80, 64, tex, 12, 20, 3, 0);
    StapleTracker tracker(frames[0], Box{12, 20, 16, 16}, small_config());
    SnapshotArchive archive(10);
    archive.push(tracker.snapshot(0));
    for (size_t f = 1; f < 8; ++f) {
        tracker.step(frames[f]);
        archive.push(tracker.snapshot(long(f)));
    }

    SECTION("restoring the most recent snapshot reproduces it exactly") {
        const Snapshot last = *archive.find(7);
        rollback(archive, 8, last.state.box(), tracker);
        REQUIRE(tracker.snapshot(7) == last);
        REQUIRE(archive.max_index() == 7);
    }
    SECTION("archive max index becomes k-1") {
        rollback(archive, 5, Box{24, 20, 16, 16}, tracker);
        REQUIRE(archive.max_index() == 4);
    }
    SECTION("rollback past the archive start throws underflow") {
        SnapshotArchive small(2);
        small.push(tracker.snapshot(6));
        small.push(tracker.snapshot(7));
        REQUIRE_THROWS_WITH(rollback(small, 5, Box{24, 20, 16, 16}, tracker),
                            "archive underflow");
    }
}

TEST_CASE("a resumed run equals a reference replay from the restored snapshot") {
    const Image tex = scenes::make_texture(16, 16, 61);
    auto frames = scenes::translating_sequence(10, 96, 64, tex, 10, 20, 3, 1);
    const Box init{10, 20, 16, 16};
    const long k = 5;
    const Box corrected{10.0 + 3.0 * k, 20.0 + 1.0 * k, 16, 16};

    // run A: track everything, roll back at k, resume to the end
    StapleTracker a(frames[0], init, small_config());
    SnapshotArchive archive(12);
    archive.push(a.snapshot(0));
    for (size_t f = 1; f < 10; ++f) {
        a.step(frames[f]);
        archive.push(a.snapshot(long(f)));
    }
    rollback(archive, k, corrected, a);
    std::vector<Box> resumed;
    for (size_t f = k; f < 10; ++f) resumed.push_back(a.step(frames[f]).box());

    // run B: reference replay on a fresh tracker driven identically up to k-1
    StapleTracker b(frames[0], init, small_config());
    for (size_t f = 1; f < size_t(k); ++f) b.step(frames[f]);
    const Snapshot at_k1 = b.snapshot(k - 1);
    b.restore(at_k1, corrected);
    std::vector<Box> replayed;
    for (size_t f = k; f < 10; ++f) replayed.push_back(b.step(frames[f]).box());

    REQUIRE(resumed.size() == replayed.size());
    for (size_t i = 0; i < resumed.size(); ++i) REQUIRE(resumed[i] == replayed[i]);
}

TEST_CASE("tracking is deterministic for identical inputs") {
    const Image tex = scenes::make_texture(18, 18, 70);
    auto frames = scenes::translating_sequence(12, 96, 72, tex, 8, 24, 4, 0);
    const Box init{8, 24, 18, 18};
    std::vector<Box> run1, run2;
    for (int run = 0; run < 2; ++run) {
        StapleTracker t(frames[0], init, TrackerConfig{});
        auto& out = run == 0 ? run1 : run2;
        for (size_t f = 1; f < frames.size(); ++f) out.push_back(t.step(frames[f]).box());
    }
    for (size_t i = 0; i < run1.size(); ++i) REQUIRE(run1[i] == run2[i]);
}

TEST_CASE("a noise-free translating target stays within 2px CLE for 50 frames") {
    const Image tex = scenes::make_texture(20, 20, 90);
    auto frames = scenes::translating_sequence(50, 260, 80, tex, 10, 30, 4, 0);
    StapleTracker tracker(frames[0], Box{10, 30, 20, 20}, TrackerConfig{});
    for (size_t f = 1; f < frames.size(); ++f) {
        const TargetState s = tracker.step(frames[f]);
        const double gt_cx = 10.0 + 4.0 * f + 10.0;
        const double gt_cy = 40.0;
        REQUIRE(std::hypot(s.cx - gt_cx, s.cy - gt_cy) <= 2.0);
    }
}
