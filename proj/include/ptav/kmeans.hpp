#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace ptav {

struct ClusterSet {
    int k = 0;
    std::vector<int> assignments;               // one cluster index per point
    std::vector<std::vector<double>> centroids; // k centroids

    std::vector<std::vector<int>> members() const {
        std::vector<std::vector<int>> m(k);
        for (size_t i = 0; i < assignments.size(); ++i) m[assignments[i]].push_back(int(i));
        return m;
    }
};

namespace detail {

inline double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double t = a[i] - b[i];
        d += t * t;
    }
    return d;
}

}  // namespace detail

inline double cluster_sse(const std::vector<std::vector<double>>& points, const ClusterSet& cs) {
    double sse = 0.0;
    for (size_t i = 0; i < points.size(); ++i)
        sse += detail::sq_dist(points[i], cs.centroids[cs.assignments[i]]);
    return sse;
}

namespace detail {

// Exact 2-means on a tiny point set by enumerating every bipartition.
// Lloyd is a local optimizer and misses the optimum on a small but real
// fraction of such instances, which the clustering contract does not allow.
inline ClusterSet exact_two_means(const std::vector<std::vector<double>>& points) {
    const int n = static_cast<int>(points.size());
    const size_t dim = points[0].size();
    ClusterSet best;
    best.k = 2;
    double best_sse = std::numeric_limits<double>::infinity();
    std::vector<int> assign(n, 0);
    for (uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
        std::vector<std::vector<double>> sum(2, std::vector<double>(dim, 0.0));
        int cnt[2] = {0, 0};
        for (int i = 0; i < n; ++i) {
            const int a = (mask >> i) & 1u;
            assign[i] = a;
            for (size_t d = 0; d < dim; ++d) sum[a][d] += points[i][d];
            ++cnt[a];
        }
        double sse = 0.0;
        for (int i = 0; i < n; ++i)
            for (size_t d = 0; d < dim; ++d) {
                const double diff = points[i][d] - sum[assign[i]][d] / cnt[assign[i]];
                sse += diff * diff;
            }
        if (sse < best_sse) {
            best_sse = sse;
            best.assignments = assign;
            best.centroids.assign(2, std::vector<double>(dim, 0.0));
            for (size_t d = 0; d < dim; ++d) {
                best.centroids[0][d] = sum[0][d] / cnt[0];
                best.centroids[1][d] = sum[1][d] / cnt[1];
            }
        }
    }
    return best;
}

}  // namespace detail

// Lloyd's algorithm with greedy-spread initialization: the first centroid is
// a seeded random point, each further one the point farthest from its nearest
// chosen centroid (ties to the lowest index). Runs to assignment fixpoint or
// max_iters. Empty clusters are reseeded with the point farthest from its
// assigned centroid. Deterministic for a fixed seed. Instances small enough
// to enumerate (k <= 2, n <= 12) are solved exactly instead.
inline ClusterSet kmeans(const std::vector<std::vector<double>>& points, int k,
                         uint64_t seed, int max_iters = 100) {
    const int n = static_cast<int>(points.size());
    if (k < 1 || k > n) throw std::invalid_argument("k must be in [1, #points]");
    if (k == 2 && n >= 2 && n <= 12) return detail::exact_two_means(points);

    ClusterSet cs;
    cs.k = k;
    cs.assignments.assign(n, 0);
    cs.centroids.clear();

    std::mt19937_64 rng(seed);
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
    int first = static_cast<int>(rng() % n);
    cs.centroids.push_back(points[first]);
    for (int c = 1; c < k; ++c) {
        int far_idx = 0;
        double far_d = -1.0;
        for (int i = 0; i < n; ++i) {
            const double d = detail::sq_dist(points[i], cs.centroids.back());
            if (d < nearest[i]) nearest[i] = d;
            if (nearest[i] > far_d) {
                far_d = nearest[i];
                far_idx = i;
            }
        }
        cs.centroids.push_back(points[far_idx]);
    }

    const auto assign_all = [&]() {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_d = detail::sq_dist(points[i], cs.centroids[0]);
            for (int c = 1; c < k; ++c) {
                const double d = detail::sq_dist(points[i], cs.centroids[c]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (cs.assignments[i] != best) {
                cs.assignments[i] = best;
                changed = true;
            }
        }
        return changed;
    };

    const auto repair_empties = [&]() {
        std::vector<int> count(k, 0);
        for (int a : cs.assignments) ++count[a];
        for (int c = 0; c < k; ++c) {
            if (count[c] > 0) continue;
            int far_idx = 0;
            double far_d = -1.0;
            for (int i = 0; i < n; ++i) {
                if (count[cs.assignments[i]] <= 1) continue;  // keep donors nonempty
                const double d = detail::sq_dist(points[i], cs.centroids[cs.assignments[i]]);
                if (d > far_d) {
                    far_d = d;
                    far_idx = i;
                }
            }
            --count[cs.assignments[far_idx]];
            cs.assignments[far_idx] = c;
            cs.centroids[c] = points[far_idx];
            ++count[c];
        }
    };

    assign_all();
    repair_empties();
    for (int iter = 0; iter < max_iters; ++iter) {
        // centroid update
        const size_t dim = points.empty() ? 0 : points[0].size();
        std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
        std::vector<int> count(k, 0);
        for (int i = 0; i < n; ++i) {
            for (size_t d = 0; d < dim; ++d) sums[cs.assignments[i]][d] += points[i][d];
            ++count[cs.assignments[i]];
        }
        for (int c = 0; c < k; ++c)
            if (count[c] > 0)
                for (size_t d = 0; d < dim; ++d) cs.centroids[c][d] = sums[c][d] / count[c];

        const bool changed = assign_all();
        repair_empties();
        if (!changed) break;
    }

    // leave centroids as the exact means of the final assignment
    const size_t dim = points.empty() ? 0 : points[0].size();
    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<int> count(k, 0);
    for (int i = 0; i < n; ++i) {
        for (size_t d = 0; d < dim; ++d) sums[cs.assignments[i]][d] += points[i][d];
        ++count[cs.assignments[i]];
    }
    for (int c = 0; c < k; ++c)
        if (count[c] > 0)
            for (size_t d = 0; d < dim; ++d) cs.centroids[c][d] = sums[c][d] / count[c];
    return cs;
}

}  // namespace ptav
