#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "ptav/tracker.hpp"
#include "ptav/verifier.hpp"

namespace ptav {

// ---------------------------------------------------------------------------
// Messages between the two loops. Epochs mark the trace-back generation a
// message belongs to; anything from an older epoch is stale and dropped.

struct VerifyRequest {
    long frame_index = 0;
    Box box;
    std::shared_ptr<const Image> frame;
    uint64_t epoch = 0;
};

struct Feedback {
    long frame_index = 0;
    bool passed = true;
    std::optional<Box> corrected_box;   // present iff failed and detection reliable
    std::optional<int> new_interval;
    uint64_t epoch = 0;
    double score = 0.0;
};

// Unbounded FIFO with shutdown; the only shared state between the loops.
template <typename T>
class MessageQueue {
public:
    void push(T item) {
        {
            std::lock_guard<std::mutex> lock(mu_);
            items_.push_back(std::move(item));
        }
        cv_.notify_one();
    }

    std::optional<T> try_pop() {
        std::lock_guard<std::mutex> lock(mu_);
        if (items_.empty()) return std::nullopt;
        T item = std::move(items_.front());
        items_.pop_front();
        return item;
    }

    // Blocks until an item arrives or the queue is closed and drained.
    std::optional<T> pop_wait() {
        std::unique_lock<std::mutex> lock(mu_);
        cv_.wait(lock, [&] { return !items_.empty() || closed_; });
        if (items_.empty()) return std::nullopt;
        T item = std::move(items_.front());
        items_.pop_front();
        return item;
    }

    void close() {
        {
            std::lock_guard<std::mutex> lock(mu_);
            closed_ = true;
        }
        cv_.notify_all();
    }

    size_t size() const {
        std::lock_guard<std::mutex> lock(mu_);
        return items_.size();
    }

private:
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<T> items_;
    bool closed_ = false;
};

// ---------------------------------------------------------------------------
// Trace log: append-only event records, one line per event when rendered.

struct TraceEvent {
    uint64_t epoch = 0;
    long frame = 0;
    std::string name;
    std::vector<std::pair<std::string, std::string>> kv;
};

class TraceLog {
public:
    void add(uint64_t epoch, long frame, std::string name,
             std::vector<std::pair<std::string, std::string>> kv = {}) {
        std::lock_guard<std::mutex> lock(mu_);
        events_.push_back(TraceEvent{epoch, frame, std::move(name), std::move(kv)});
    }

    std::vector<TraceEvent> events() const {
        std::lock_guard<std::mutex> lock(mu_);
        return events_;
    }

    long count(const std::string& name) const {
        std::lock_guard<std::mutex> lock(mu_);
        long n = 0;
        for (const TraceEvent& e : events_)
            if (e.name == name) ++n;
        return n;
    }

    static std::string to_text(const std::vector<TraceEvent>& events) {
        std::string out;
        char buf[64];
        for (const TraceEvent& e : events) {
            std::snprintf(buf, sizeof(buf), "%llu %ld ", (unsigned long long)e.epoch, e.frame);
            out += buf;
            out += e.name;
            for (const auto& [k, v] : e.kv) {
                out += ' ';
                out += k;
                out += '=';
                out += v;
            }
            out += '\n';
        }
        return out;
    }

private:
    mutable std::mutex mu_;
    std::vector<TraceEvent> events_;
};

inline std::string format_box(const Box& b) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%.4f,%.4f,%.4f,%.4f", b.x, b.y, b.w, b.h);
    return buf;
}

inline std::string format_score(double s) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", s);
    return buf;
}

// ---------------------------------------------------------------------------

struct RuntimeConfig {
    enum class Mode { kAsync, kLockstep };

    int n_int_init = 10;
    Mode mode = Mode::kAsync;
    bool verifier_enabled = true;
    int delta = 0;              // snapshot window; 0 means 2*n_int_init + 5
    int lockstep_latency = 0;   // frames between request emission and verification
    uint64_t seed = 1;

    void validate() const {
        if (n_int_init < 1) throw std::invalid_argument("verification interval must be >= 1");
        if (delta != 0 && delta < n_int_init + 1)
            throw std::invalid_argument("snapshot window must be >= n_int + 1");
        if (lockstep_latency < 0) throw std::invalid_argument("negative lockstep latency");
    }

    int effective_delta() const { return delta == 0 ? 2 * n_int_init + 5 : delta; }
};

struct RunStats {
    long frames_tracked = 0;  // tracking iterations, re-tracked frames included
    long requests_sent = 0;
    long verifications_passed = 0;
    long verifications_failed = 0;
    long detections_reliable = 0;
    long detections_unreliable = 0;
    long rollbacks = 0;
    long degraded_reinits = 0;
    long templates_admitted = 0;
    long stale_feedback_dropped = 0;
    long stale_requests_dropped = 0;
};

struct TrackRun {
    std::vector<Box> boxes;  // exactly one per frame index
    std::vector<TraceEvent> trace;
    RunStats stats;
    double seconds = 0.0;
    double fps = 0.0;
    bool aborted = false;
    std::string abort_reason;

    std::string trace_text() const { return TraceLog::to_text(trace); }
};

// Ordered frame access shared by both loops; frames are immutable.
class FrameSource {
public:
    virtual ~FrameSource() = default;
    virtual size_t size() const = 0;
    virtual std::shared_ptr<const Image> frame(size_t index) const = 0;
};

class VectorFrameSource : public FrameSource {
public:
    explicit VectorFrameSource(std::vector<Image> frames) {
        for (Image& f : frames) frames_.push_back(std::make_shared<const Image>(std::move(f)));
    }
    explicit VectorFrameSource(std::vector<std::shared_ptr<const Image>> frames)
        : frames_(std::move(frames)) {}

    size_t size() const override { return frames_.size(); }
    std::shared_ptr<const Image> frame(size_t index) const override { return frames_.at(index); }

private:
    std::vector<std::shared_ptr<const Image>> frames_;
};

// ---------------------------------------------------------------------------
// Verifier side. An agent turns one request into one feedback; the production
// agent wraps the template pool and detection, tests plug in scripted stubs.

class VerifyAgent {
public:
    virtual ~VerifyAgent() = default;
    virtual Feedback handle(const VerifyRequest& request) = 0;
    // Called once before the run starts so the agent can log into the run's
    // trace and counters.
    virtual void bind(TraceLog* trace, RunStats* stats) {
        (void)trace;
        (void)stats;
    }
};

class PtavVerifyAgent : public VerifyAgent {
public:
    PtavVerifyAgent(std::shared_ptr<Embedder> embedder, std::vector<double> first_template,
                    VerifierConfig config, int n_int_init, uint64_t seed)
        : embedder_(std::move(embedder)), cfg_(std::move(config)),
          pool_(std::move(first_template), cfg_.pool_params(seed)),
          gamma_(cfg_.gamma_init), n_int_init_(n_int_init) {}

    void bind(TraceLog* trace, RunStats* stats) override {
        trace_ = trace;
        stats_ = stats;
    }

    Feedback handle(const VerifyRequest& req) override {
        if (cfg_.delay_ms > 0.0)
            std::this_thread::sleep_for(
                std::chrono::microseconds(int64_t(cfg_.delay_ms * 1000.0)));
        const Image patch = crop_resize(*req.frame, req.box, cfg_.patch_size, cfg_.patch_size);
        const std::vector<double> emb = embedder_->embed(patch);
        const double score = pool_.score(emb);

        Feedback fb;
        fb.frame_index = req.frame_index;
        fb.epoch = req.epoch;
        fb.score = score;
        if (score >= cfg_.tau1) {
            fb.passed = true;
            const std::vector<double> hog =
                compute_hog(patch, embedder_cell_size(), embedder_orientations()).data;
            if (pool_.maybe_admit(emb, hog, score)) {
                if (stats_) ++stats_->templates_admitted;
                if (trace_)
                    trace_->add(req.epoch, req.frame_index, "TemplateAdmitted",
                                {{"score", format_score(score)},
                                 {"clusters", std::to_string(pool_.cluster_count())}});
            }
            return fb;
        }

        fb.passed = false;
        const DetectionResult det = detect(pool_, *req.frame, req.box, gamma_, *embedder_, cfg_);
        if (det.reliable) {
            fb.corrected_box = det.best;
            fb.new_interval = n_int_init_;
            if (trace_)
                trace_->add(req.epoch, req.frame_index, "DetectionReliable",
                            {{"box", format_box(det.best)},
                             {"score", format_score(det.score)},
                             {"gamma", format_score(gamma_)}});
            if (stats_) ++stats_->detections_reliable;
            gamma_ = cfg_.gamma_init;
        } else {
            fb.new_interval = 1;
            if (trace_)
                trace_->add(req.epoch, req.frame_index, "DetectionUnreliable",
                            {{"score", format_score(det.score)},
                             {"gamma", format_score(gamma_)}});
            if (stats_) ++stats_->detections_unreliable;
            gamma_ = std::min(gamma_ * cfg_.gamma_step, cfg_.gamma_max);
        }
        return fb;
    }

    const TemplatePool& pool() const { return pool_; }
    double gamma() const { return gamma_; }

private:
    int embedder_cell_size() const {
        if (const auto* hc = dynamic_cast<const HogColorEmbedder*>(embedder_.get()))
            return hc->cell_size();
        return 4;
    }
    int embedder_orientations() const {
        if (const auto* hc = dynamic_cast<const HogColorEmbedder*>(embedder_.get()))
            return hc->n_orientations();
        return 9;
    }

    std::shared_ptr<Embedder> embedder_;
    VerifierConfig cfg_;
    TemplatePool pool_;
    double gamma_;
    int n_int_init_;
    TraceLog* trace_ = nullptr;
    RunStats* stats_ = nullptr;
};

// ---------------------------------------------------------------------------

struct PtavOptions {
    TrackerConfig tracker;
    VerifierConfig verifier;
    RuntimeConfig runtime;
    std::shared_ptr<Embedder> embedder;  // default: HogColorEmbedder per frame channels
};

namespace detail {

// State and per-iteration logic of the tracking loop, shared by the lockstep
// scheduler and the async thread.
class TrackingLoop {
public:
    TrackingLoop(const FrameSource& source, const Box& init_box, const TrackerConfig& tcfg,
                 const RuntimeConfig& rcfg, MessageQueue<VerifyRequest>* requests,
                 MessageQueue<Feedback>* feedback, TraceLog* trace)
        : source_(source), rcfg_(rcfg), requests_(requests), feedback_(feedback), trace_(trace),
          archive_(rcfg.effective_delta()),
          tracker_(*source.frame(0), init_box, tcfg) {
        boxes_.assign(source.size(), init_box);
        archive_.push(tracker_.snapshot(0));
        n_int_ = rcfg.n_int_init;
        trace_->add(0, 0, "FrameTracked", {{"box", format_box(init_box)}});
        ++stats_.frames_tracked;
    }

    bool done() const { return current_ >= long(source_.size()); }
    long current_frame() const { return current_; }
    uint64_t epoch() const { return epoch_; }
    const std::vector<Box>& boxes() const { return boxes_; }
    RunStats& stats() { return stats_; }
    int n_int() const { return n_int_; }

    // Drain feedback, then track one frame and possibly emit a request.
    void iterate() {
        while (auto fb = feedback_->try_pop()) apply_feedback(*fb);
        if (done()) return;

        const std::shared_ptr<const Image> frame = source_.frame(size_t(current_));
        const TargetState state = tracker_.step(*frame);
        boxes_[size_t(current_)] = state.box();
        archive_.push(tracker_.snapshot(current_));
        trace_->add(epoch_, current_, "FrameTracked",
                    {{"box", format_box(state.box())}, {"peak", format_score(state.peak)}});
        ++stats_.frames_tracked;

        if (rcfg_.verifier_enabled && current_ - last_request_ >= n_int_) {
            requests_->push(VerifyRequest{current_, state.box(), frame, epoch_});
            last_request_ = current_;
            ++stats_.requests_sent;
            trace_->add(epoch_, current_, "RequestSent", {{"box", format_box(state.box())}});
        }
        ++current_;
    }

private:
    void apply_feedback(const Feedback& fb) {
        if (fb.epoch != epoch_) {
            ++stats_.stale_feedback_dropped;
            return;
        }
        if (fb.new_interval && *fb.new_interval != n_int_) {
            n_int_ = *fb.new_interval;
            trace_->add(epoch_, fb.frame_index, "IntervalChanged",
                        {{"n_int", std::to_string(n_int_)}});
        }
        if (fb.passed || !fb.corrected_box) return;

        const long k = fb.frame_index;
        const long was_at = current_;
        ++epoch_;
        try {
            rollback(archive_, k, *fb.corrected_box, tracker_);
            current_ = k;
            last_request_ = k;
            ++stats_.rollbacks;
            trace_->add(epoch_, k, "RolledBack",
                        {{"from", std::to_string(was_at)},
                         {"box", format_box(*fb.corrected_box)},
                         {"mode", "archive"}});
        } catch (const std::runtime_error&) {
            // archive no longer holds k-1: rebuild models on frame k instead
            const std::shared_ptr<const Image> frame = source_.frame(size_t(k));
            tracker_.reinitialize(*frame, *fb.corrected_box);
            archive_ = SnapshotArchive(rcfg_.effective_delta());
            archive_.push(tracker_.snapshot(k));
            boxes_[size_t(k)] = *fb.corrected_box;
            current_ = k + 1;
            last_request_ = k;
            ++stats_.degraded_reinits;
            ++stats_.rollbacks;
            trace_->add(epoch_, k, "RolledBack",
                        {{"box", format_box(*fb.corrected_box)}, {"mode", "reinit"}});
        }
    }

    const FrameSource& source_;
    RuntimeConfig rcfg_;
    MessageQueue<VerifyRequest>* requests_;
    MessageQueue<Feedback>* feedback_;
    TraceLog* trace_;
    SnapshotArchive archive_;
    StapleTracker tracker_;
    std::vector<Box> boxes_;
    RunStats stats_;
    long current_ = 1;
    long last_request_ = 0;
    uint64_t epoch_ = 0;
    int n_int_ = 10;
};

// One verifying-loop step: stale-epoch requests are dropped without feedback,
// everything else produces exactly one feedback.
inline void verify_one(const VerifyRequest& req, VerifyAgent& agent, uint64_t& max_epoch,
                       MessageQueue<Feedback>& feedback, TraceLog& trace, RunStats& stats) {
    if (req.epoch < max_epoch) {
        ++stats.stale_requests_dropped;
        return;
    }
    max_epoch = req.epoch;
    const Feedback fb = agent.handle(req);
    if (fb.passed) {
        ++stats.verifications_passed;
        trace.add(req.epoch, req.frame_index, "VerifyPassed", {{"score", format_score(fb.score)}});
    } else {
        ++stats.verifications_failed;
        trace.add(req.epoch, req.frame_index, "VerifyFailed", {{"score", format_score(fb.score)}});
    }
    feedback.push(fb);
}

inline void merge_stats(RunStats& into, const RunStats& from) {
    into.requests_sent += from.requests_sent;
    into.frames_tracked += from.frames_tracked;
    into.verifications_passed += from.verifications_passed;
    into.verifications_failed += from.verifications_failed;
    into.detections_reliable += from.detections_reliable;
    into.detections_unreliable += from.detections_unreliable;
    into.rollbacks += from.rollbacks;
    into.degraded_reinits += from.degraded_reinits;
    into.templates_admitted += from.templates_admitted;
    into.stale_feedback_dropped += from.stale_feedback_dropped;
    into.stale_requests_dropped += from.stale_requests_dropped;
}

}  // namespace detail

// Run the two loops against a caller-supplied verify agent (production agent
// or a scripted stub).
inline TrackRun run_with_agent(const FrameSource& source, const Box& init_box,
                               const TrackerConfig& tcfg, const RuntimeConfig& rcfg,
                               VerifyAgent* agent) {
    tcfg.validate();
    rcfg.validate();
    if (source.size() < 1) throw std::invalid_argument("sequence must hold at least one frame");
    if (rcfg.verifier_enabled && agent == nullptr)
        throw std::invalid_argument("verifier enabled but no agent supplied");

    MessageQueue<VerifyRequest> requests;
    MessageQueue<Feedback> feedback;
    TraceLog trace;
    RunStats verifier_stats;
    if (agent) agent->bind(&trace, &verifier_stats);

    TrackRun run;
    std::optional<detail::TrackingLoop> loop;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        loop.emplace(source, init_box, tcfg, rcfg, &requests, &feedback, &trace);

        if (rcfg.mode == RuntimeConfig::Mode::kLockstep || !rcfg.verifier_enabled) {
            uint64_t max_epoch = 0;
            std::deque<VerifyRequest> pending;
            while (!loop->done()) {
                loop->iterate();
                while (auto req = requests.try_pop()) pending.push_back(std::move(*req));
                while (!pending.empty() && loop->current_frame() - pending.front().frame_index >
                                               rcfg.lockstep_latency) {
                    detail::verify_one(pending.front(), *agent, max_epoch, feedback, trace,
                                       verifier_stats);
                    pending.pop_front();
                }
            }
            // requests still in flight at the end of the sequence are
            // verified for accounting, their feedback goes unapplied
            while (!pending.empty()) {
                detail::verify_one(pending.front(), *agent, max_epoch, feedback, trace,
                                   verifier_stats);
                pending.pop_front();
            }
        } else {
            std::thread verifier([&]() {
                uint64_t max_epoch = 0;
                while (auto req = requests.pop_wait())
                    detail::verify_one(*req, *agent, max_epoch, feedback, trace, verifier_stats);
            });
            while (!loop->done()) loop->iterate();
            requests.close();
            verifier.join();
        }

        run.boxes = loop->boxes();
        run.stats = loop->stats();
    } catch (const std::exception& e) {
        run.aborted = true;
        run.abort_reason = e.what();
        if (loop) {
            run.boxes = loop->boxes();
            const size_t completed = size_t(std::max(0L, loop->current_frame()));
            if (run.boxes.size() > completed) run.boxes.resize(completed);
            run.stats = loop->stats();
        }
    }
    const auto t1 = std::chrono::steady_clock::now();
    detail::merge_stats(run.stats, verifier_stats);
    run.trace = trace.events();
    run.seconds = std::chrono::duration<double>(t1 - t0).count();
    run.fps = run.seconds > 0.0 ? double(run.boxes.size()) / run.seconds : 0.0;
    return run;
}

// Full pipeline: tracker plus the template-pool verifier initialized from the
// first frame.
inline TrackRun run(const FrameSource& source, const Box& init_box, const PtavOptions& opt) {
    opt.verifier.validate();
    if (source.size() < 1) throw std::invalid_argument("sequence must hold at least one frame");
    if (!opt.runtime.verifier_enabled)
        return run_with_agent(source, init_box, opt.tracker, opt.runtime, nullptr);

    const std::shared_ptr<const Image> first = source.frame(0);
    std::shared_ptr<Embedder> embedder = opt.embedder;
    if (!embedder)
        embedder = std::make_shared<HogColorEmbedder>(first->channels, opt.verifier.patch_size);
    const Image patch =
        crop_resize(*first, init_box, opt.verifier.patch_size, opt.verifier.patch_size);
    PtavVerifyAgent agent(embedder, embedder->embed(patch), opt.verifier, opt.runtime.n_int_init,
                          opt.runtime.seed);
    return run_with_agent(source, init_box, opt.tracker, opt.runtime, &agent);
}

}  // namespace ptav
