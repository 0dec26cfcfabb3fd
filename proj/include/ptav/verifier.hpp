#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ptav/features.hpp"
#include "ptav/geometry.hpp"
#include "ptav/image.hpp"
#include "ptav/kmeans.hpp"
#include "ptav/parallel.hpp"

namespace ptav {

// Unit-L2 feature embedding of a canonical patch. The production verifier in
// the original design is a learned network; here it is a pluggable interface
// with a hand-crafted default.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual int dim() const = 0;
    virtual std::vector<double> embed(const Image& patch) const = 0;
    virtual std::string name() const = 0;
};

namespace detail {

inline void l2_normalize(std::vector<double>& v) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    if (sq <= 0.0) return;
    const double inv = 1.0 / std::sqrt(sq);
    for (double& x : v) x *= inv;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("embedding dimension mismatch");
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace detail

// HOG and color-histogram halves, each unit-normalized, weighted 0.5/0.5 and
// jointly renormalized. All entries are nonnegative, so scores between
// embeddings lie in [0,1].
class HogColorEmbedder : public Embedder {
public:
    HogColorEmbedder(int channels, int patch_size = 64, int cell_size = 4,
                     int n_orientations = 9, int bins_rgb = 16, int bins_gray = 32)
        : channels_(channels), patch_(patch_size), cell_(cell_size), orients_(n_orientations),
          bins_(channels == 1 ? bins_gray : bins_rgb) {
        if (channels != 1 && channels != 3) throw std::invalid_argument("bad channel count");
        const int cells = patch_ / cell_;
        hog_dim_ = cells * cells * orients_;
        hist_dim_ = channels_ == 1 ? bins_ : bins_ * bins_ * bins_;
    }

    int dim() const override { return hog_dim_ + hist_dim_; }
    std::string name() const override { return "hogcolor"; }
    int patch_size() const { return patch_; }
    int cell_size() const { return cell_; }
    int n_orientations() const { return orients_; }

    std::vector<double> embed(const Image& patch) const override {
        if (patch.width != patch_ || patch.height != patch_ || patch.channels != channels_)
            throw std::invalid_argument("patch does not match embedder layout");
        std::vector<double> hog = compute_hog(patch, cell_, orients_).data;
        std::vector<double> hist = compute_color_histogram(patch, bins_);
        detail::l2_normalize(hog);
        detail::l2_normalize(hist);
        std::vector<double> v(dim());
        for (int i = 0; i < hog_dim_; ++i) v[i] = 0.5 * hog[i];
        for (int i = 0; i < hist_dim_; ++i) v[hog_dim_ + i] = 0.5 * hist[i];
        detail::l2_normalize(v);
        return v;
    }

private:
    int channels_, patch_, cell_, orients_, bins_;
    int hog_dim_ = 0, hist_dim_ = 0;
};

// Inner product of two unit embeddings; verification against the fixed
// first-frame template.
inline double score_fixed(const std::vector<double>& obj, const std::vector<double>& x) {
    return detail::dot(obj, x);
}

struct PoolWeights {
    double omega_o = 1.0;
    double omega_c = 0.0;
};

// Weight of the first-frame template vs each dynamic cluster. With no
// clusters all weight stays on the fixed template.
inline PoolWeights pool_weights(int n_clusters) {
    if (n_clusters < 0) throw std::invalid_argument("negative cluster count");
    if (n_clusters == 0) return {1.0, 0.0};
    const double e_half = std::exp(0.5);
    const double wo_raw = e_half / (e_half + n_clusters * std::exp(0.5 / n_clusters));
    const double wc = (1.0 - wo_raw) / n_clusters;
    // re-derive omega_o from the rounded omega_c so the pair sums to 1 exactly
    const double wo = 1.0 - n_clusters * wc;
    return {wo, wc};
}

enum class ScoreMode { kClusterMean, kLiteralSum };

struct PoolParams {
    int L = 5;            // staging size / nominal cluster size
    int n_c_max = 10;     // maximum cluster count
    double tau0 = 0.6;    // admission threshold
    ScoreMode score_mode = ScoreMode::kClusterMean;
    uint64_t kmeans_seed = 1;

    void validate() const {
        if (L < 1 || n_c_max < 1) throw std::invalid_argument("bad pool sizes");
        if (tau0 < 0.0 || tau0 >= 1.0) throw std::invalid_argument("tau0 must be in [0,1)");
    }
};

struct PoolEntry {
    std::vector<double> embedding;
    std::vector<double> hog;  // clustering feature
};

// Fixed first-frame template plus a dynamic set of admitted templates grouped
// by k-means on their HOG features. Scoring collapses to one cached vector:
// cluster-mean mode uses omega_o*x_obj + omega_c * sum_i mean(C_i), the
// literal mode omega_o*x_obj + omega_c * sum_j x_j.
class TemplatePool {
public:
    TemplatePool(std::vector<double> first_frame_embedding, PoolParams params)
        : params_(params), fixed_(std::move(first_frame_embedding)) {
        params_.validate();
        if (fixed_.empty()) throw std::invalid_argument("empty template embedding");
        scoring_ = fixed_;
    }

    double score(const std::vector<double>& x) const { return detail::dot(scoring_, x); }

    // Admit the embedding into the staging set when its verification score
    // clears tau0; flush staging into the dynamic set every L admissions,
    // evict the oldest L beyond the capacity, recluster and reweight.
    bool maybe_admit(std::vector<double> embedding, std::vector<double> hog, double score) {
        if (embedding.size() != fixed_.size())
            throw std::invalid_argument("embedding dimension mismatch");
        if (!(score > params_.tau0)) return false;
        staging_.push_back(PoolEntry{std::move(embedding), std::move(hog)});
        if (static_cast<int>(staging_.size()) < params_.L) return true;
        dynamic_.insert(dynamic_.end(), std::make_move_iterator(staging_.begin()),
                        std::make_move_iterator(staging_.end()));
        staging_.clear();
        if (static_cast<int>(dynamic_.size()) > params_.L * params_.n_c_max)
            dynamic_.erase(dynamic_.begin(), dynamic_.begin() + params_.L);
        recluster();
        return true;
    }

    const std::vector<double>& fixed_template() const { return fixed_; }
    const std::vector<PoolEntry>& dynamic_entries() const { return dynamic_; }
    size_t staging_size() const { return staging_.size(); }
    int cluster_count() const { return clusters_ ? clusters_->k : 0; }
    const PoolWeights& weights() const { return weights_; }
    const PoolParams& params() const { return params_; }
    const ClusterSet* clusters() const { return clusters_ ? &*clusters_ : nullptr; }

private:
    void recluster() {
        const int k = static_cast<int>(dynamic_.size()) / params_.L;
        std::vector<std::vector<double>> hogs;
        hogs.reserve(dynamic_.size());
        for (const PoolEntry& e : dynamic_) hogs.push_back(e.hog);
        clusters_ = kmeans(hogs, k, params_.kmeans_seed);
        weights_ = pool_weights(k);
        rebuild_scoring();
    }

    void rebuild_scoring() {
        scoring_.assign(fixed_.size(), 0.0);
        for (size_t i = 0; i < fixed_.size(); ++i) scoring_[i] = weights_.omega_o * fixed_[i];
        if (!clusters_) return;
        if (params_.score_mode == ScoreMode::kClusterMean) {
            const auto members = clusters_->members();
            for (const auto& cluster : members) {
                const double w = weights_.omega_c / double(cluster.size());
                for (int idx : cluster)
                    for (size_t i = 0; i < scoring_.size(); ++i)
                        scoring_[i] += w * dynamic_[idx].embedding[i];
            }
        } else {
            for (const PoolEntry& e : dynamic_)
                for (size_t i = 0; i < scoring_.size(); ++i)
                    scoring_[i] += weights_.omega_c * e.embedding[i];
        }
    }

    PoolParams params_;
    std::vector<double> fixed_;
    std::vector<PoolEntry> dynamic_;
    std::vector<PoolEntry> staging_;
    std::optional<ClusterSet> clusters_;
    PoolWeights weights_;
    std::vector<double> scoring_;
};

struct VerifierConfig {
    double tau0 = 0.6;
    double tau1 = 0.33;
    double tau2 = 0.53;
    double gamma_init = 1.5;
    double gamma_step = 1.5;
    double gamma_max = 4.0;
    double stride_fraction = 0.05;
    std::vector<double> candidate_scales{0.95, 1.0, 1.05};
    ScoreMode score_mode = ScoreMode::kClusterMean;
    int patch_size = 64;
    int L = 5;
    int n_c_max = 10;
    double delay_ms = 0.0;  // artificial per-request latency for benchmarks

    void validate() const {
        // tau1 = 0 is allowed: it disables failure detection entirely
        if (tau1 < 0.0 || tau1 > tau2 || tau2 >= 1.0)
            throw std::invalid_argument("thresholds must satisfy 0 <= tau1 <= tau2 < 1");
        if (tau0 < 0.0 || tau0 >= 1.0) throw std::invalid_argument("tau0 must be in [0,1)");
        if (gamma_init < 1.0 || gamma_step < 1.0 || gamma_max < gamma_init)
            throw std::invalid_argument("bad gamma settings");
        if (stride_fraction <= 0.0) throw std::invalid_argument("stride fraction must be > 0");
        if (candidate_scales.empty()) throw std::invalid_argument("need candidate scales");
        if (patch_size < 8) throw std::invalid_argument("patch size too small");
        if (L < 1 || n_c_max < 1) throw std::invalid_argument("bad pool sizes");
        if (delay_ms < 0.0) throw std::invalid_argument("delay must be >= 0");
    }

    PoolParams pool_params(uint64_t seed) const {
        return PoolParams{L, n_c_max, tau0, score_mode, seed};
    }
};

struct VerifyResult {
    double score = 0.0;
    bool passed = false;
};

inline VerifyResult verify(const TemplatePool& pool, const Image& frame, const Box& box,
                           const Embedder& embedder, double tau1) {
    const int ps = dynamic_cast<const HogColorEmbedder*>(&embedder)
                       ? static_cast<const HogColorEmbedder&>(embedder).patch_size()
                       : 64;
    const Image patch = crop_resize(frame, box, ps, ps);
    const double s = pool.score(embedder.embed(patch));
    return {s, s >= tau1};
}

struct CandidateSet {
    Box search_square;  // clamped to the frame
    std::vector<Box> boxes;
};

// Sliding-window candidates over the square of side gamma*sqrt(w^2+h^2)
// centered on the tracked box, at each candidate scale, clamped to the frame.
// The unshifted box itself is always present.
inline CandidateSet generate_candidates(const Image& frame, const Box& box, double gamma,
                                        const VerifierConfig& cfg) {
    require_valid(box);
    const double side = gamma * std::hypot(box.w, box.h);
    const Box square = Box::from_center(box.cx(), box.cy(), side, side);
    const Box frame_box{0, 0, double(frame.width), double(frame.height)};
    const double rx0 = std::max(square.x, 0.0), ry0 = std::max(square.y, 0.0);
    const double rx1 = std::min(square.x2(), frame_box.w), ry1 = std::min(square.y2(), frame_box.h);
    if (rx1 <= rx0 || ry1 <= ry0) throw std::invalid_argument("search region outside frame");
    const Box region{rx0, ry0, rx1 - rx0, ry1 - ry0};

    CandidateSet out;
    out.search_square = region;
    const int stride = std::max(1, int(std::lround(cfg.stride_fraction * std::min(box.w, box.h))));
    for (double s : cfg.candidate_scales) {
        const double cw = box.w * s, ch = box.h * s;
        if (cw > frame_box.w || ch > frame_box.h) continue;
        if (cw <= region.w && ch <= region.h) {
            const int nx = int(std::floor((region.w - cw) / stride)) + 1;
            const int ny = int(std::floor((region.h - ch) / stride)) + 1;
            for (int iy = 0; iy < ny; ++iy)
                for (int ix = 0; ix < nx; ++ix)
                    out.boxes.push_back(Box{region.x + ix * stride, region.y + iy * stride,
                                            cw, ch});
        } else {
            out.boxes.push_back(
                clamp_into(Box::from_center(region.cx(), region.cy(), cw, ch), frame_box.w,
                           frame_box.h));
        }
    }
    const Box unshifted = clamp_into(box, frame_box.w, frame_box.h);
    bool present = false;
    for (const Box& b : out.boxes)
        if (b == unshifted) {
            present = true;
            break;
        }
    if (!present) out.boxes.push_back(unshifted);
    return out;
}

// Batch scoring: embeds every candidate patch and scores it against the
// pool. Per-candidate results are independent of the worker count and equal
// sequential scoring exactly.
inline std::vector<double> score_candidates(const TemplatePool& pool, const Image& frame,
                                            const CandidateSet& candidates,
                                            const Embedder& embedder, int patch_size) {
    std::vector<double> scores(candidates.boxes.size(), 0.0);
    parallel_for(candidates.boxes.size(), [&](size_t i) {
        const Image patch = crop_resize(frame, candidates.boxes[i], patch_size, patch_size);
        scores[i] = pool.score(embedder.embed(patch));
    });
    return scores;
}

// Argmax with ties broken by the smallest center displacement from the
// reference box.
inline size_t select_best_candidate(const std::vector<double>& scores,
                                    const std::vector<Box>& boxes, const Box& reference) {
    if (scores.empty() || scores.size() != boxes.size())
        throw std::invalid_argument("bad candidate scoring");
    size_t best = 0;
    double best_score = scores[0];
    double best_dist = center_distance(boxes[0], reference);
    for (size_t i = 1; i < scores.size(); ++i) {
        const double d = center_distance(boxes[i], reference);
        if (scores[i] > best_score || (scores[i] == best_score && d < best_dist)) {
            best = i;
            best_score = scores[i];
            best_dist = d;
        }
    }
    return best;
}

struct DetectionResult {
    Box best;
    double score = 0.0;
    bool reliable = false;
};

// Verification-based detection: score every sliding-window candidate and
// take the argmax; the result is reliable when it clears tau2.
inline DetectionResult detect(const TemplatePool& pool, const Image& frame, const Box& box,
                              double gamma, const Embedder& embedder,
                              const VerifierConfig& cfg) {
    const CandidateSet cands = generate_candidates(frame, box, gamma, cfg);
    const std::vector<double> scores =
        score_candidates(pool, frame, cands, embedder, cfg.patch_size);
    const size_t best = select_best_candidate(scores, cands.boxes, box);
    return {cands.boxes[best], scores[best], scores[best] >= cfg.tau2};
}

}  // namespace ptav
