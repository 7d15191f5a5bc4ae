#include "dqld/clustering.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace dqld {

namespace {

double sq_dist(const Position &a, const Position &b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return dx * dx + dy * dy;
}

void fill_clusters(std::span<const Position> points, ClusterAssignment &a, int n_clusters) {
    a.clusters.assign(static_cast<std::size_t>(n_clusters), Cluster{});
    for (std::size_t i = 0; i < a.labels.size(); ++i)
        if (a.labels[i] != kNoise) a.clusters[a.labels[i]].members.push_back(static_cast<int>(i));
    for (auto &c : a.clusters) {
        Position sum;
        for (int m : c.members) {
            sum.x += points[m].x;
            sum.y += points[m].y;
        }
        if (!c.members.empty()) c.centroid = {sum.x / c.members.size(), sum.y / c.members.size()};
    }
}

} // namespace

ClusterAssignment dbscan(std::span<const Position> points, double eps, int min_pts) {
    if (!(eps > 0.0) || min_pts < 1) throw std::invalid_argument("dbscan: eps must be > 0 and min_pts >= 1");
    const std::size_t n = points.size();
    ClusterAssignment out;
    out.labels.assign(n, kNoise);
    if (n == 0) return out;

    const double eps2 = eps * eps;
    std::vector<std::vector<int>> neighbours(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (sq_dist(points[i], points[j]) <= eps2) neighbours[i].push_back(static_cast<int>(j));

    std::vector<bool> core(n);
    for (std::size_t i = 0; i < n; ++i) core[i] = static_cast<int>(neighbours[i].size()) >= min_pts;

    // Expand core components in index order.
    int n_clusters = 0;
    std::vector<int> stack;
    for (std::size_t seed = 0; seed < n; ++seed) {
        if (!core[seed] || out.labels[seed] != kNoise) continue;
        const int id = n_clusters++;
        out.labels[seed] = id;
        stack.assign(1, static_cast<int>(seed));
        while (!stack.empty()) {
            const int p = stack.back();
            stack.pop_back();
            for (int q : neighbours[p]) {
                if (core[q] && out.labels[q] == kNoise) {
                    out.labels[q] = id;
                    stack.push_back(q);
                }
            }
        }
    }

    // neighbours[i] is in ascending index order, so the first core hit is the lowest.
    for (std::size_t i = 0; i < n; ++i) {
        if (core[i]) continue;
        for (int q : neighbours[i]) {
            if (core[q]) {
                out.labels[i] = out.labels[q];
                break;
            }
        }
    }
    fill_clusters(points, out, n_clusters);
    return out;
}

double inertia(std::span<const Position> points, const ClusterAssignment &a) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i)
        if (a.labels[i] != kNoise) total += sq_dist(points[i], a.clusters[a.labels[i]].centroid);
    return total;
}

KmeansResult kmeans_from(std::span<const Position> points, std::vector<Position> centroids, int max_iters) {
    const std::size_t n = points.size();
    const std::size_t k = centroids.size();
    KmeansResult res;
    std::vector<int> labels(n, -1);
    for (int iter = 0; iter < max_iters; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double d = sq_dist(points[i], centroids[c]);
                if (d < best_d) {
                    best_d = d;
                    best = static_cast<int>(c);
                }
            }
            if (labels[i] != best) {
                labels[i] = best;
                changed = true;
            }
        }
        if (!changed) break;
        ++res.iterations;
        std::vector<Position> sum(k);
        std::vector<int> count(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            sum[labels[i]].x += points[i].x;
            sum[labels[i]].y += points[i].y;
            ++count[labels[i]];
        }
        // An emptied cluster keeps its previous centre.
        for (std::size_t c = 0; c < k; ++c)
            if (count[c] > 0) centroids[c] = {sum[c].x / count[c], sum[c].y / count[c]};
        double w = 0.0;
        for (std::size_t i = 0; i < n; ++i) w += sq_dist(points[i], centroids[labels[i]]);
        res.inertia_trace.push_back(w);
    }

    // Compact away empty clusters so every reported cluster has a member.
    std::vector<int> remap(k, kNoise);
    int next = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (labels[i] >= 0 && remap[labels[i]] == kNoise) remap[labels[i]] = -2;
    for (std::size_t c = 0; c < k; ++c)
        if (remap[c] == -2) remap[c] = next++;
    res.assignment.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) res.assignment.labels[i] = labels[i] >= 0 ? remap[labels[i]] : kNoise;
    fill_clusters(points, res.assignment, next);
    return res;
}

KmeansResult kmeans(std::span<const Position> points, int k, int max_iters, Rng &rng) {
    const std::size_t n = points.size();
    if (k < 1 || static_cast<std::size_t>(k) > n) throw std::invalid_argument("kmeans: need 1 <= k <= |points|");

    std::vector<Position> centroids;
    std::vector<bool> chosen(n, false);
    std::size_t first = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    centroids.push_back(points[first]);
    chosen[first] = true;
    std::vector<double> d2(n);
    while (centroids.size() < static_cast<std::size_t>(k)) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto &c : centroids) best = std::min(best, sq_dist(points[i], c));
            d2[i] = chosen[i] ? 0.0 : best;
            total += d2[i];
        }
        std::size_t pick = n;
        if (total > 0.0) {
            double r = std::uniform_real_distribution<double>(0.0, total)(rng);
            for (std::size_t i = 0; i < n; ++i) {
                if (d2[i] <= 0.0) continue;
                pick = i;
                if (r < d2[i]) break;
                r -= d2[i];
            }
        } else {
            // Remaining points duplicate existing centres.
            for (std::size_t i = 0; i < n && pick == n; ++i)
                if (!chosen[i]) pick = i;
        }
        chosen[pick] = true;
        centroids.push_back(points[pick]);
    }
    return kmeans_from(points, std::move(centroids), max_iters);
}

std::vector<Beam> form_beams(const ClusterAssignment &assignment, std::span<const int> user_ids,
                             std::span<const Position> points, const GnbState &gnb) {
    if (user_ids.size() != points.size() || assignment.labels.size() != points.size())
        throw std::invalid_argument("form_beams: inconsistent sizes");
    std::vector<Beam> beams;
    if (points.empty()) return beams;

    auto aim = [&gnb](Beam &b) {
        b.gnb_id = gnb.id;
        b.boresight = (b.centroid == gnb.position) ? 0.0 : aod(gnb, b.centroid);
        b.weights = beamforming_weights(b.boresight, gnb.n_elements, gnb.spacing_m, gnb.wavelength_m);
    };

    if (assignment.clusters.empty()) {
        Beam b;
        Position sum;
        for (std::size_t i = 0; i < points.size(); ++i) {
            b.members.push_back(user_ids[i]);
            sum.x += points[i].x;
            sum.y += points[i].y;
        }
        b.centroid = {sum.x / points.size(), sum.y / points.size()};
        aim(b);
        beams.push_back(std::move(b));
        return beams;
    }

    for (std::size_t c = 0; c < assignment.clusters.size(); ++c) {
        Beam b;
        b.id = static_cast<int>(c);
        b.centroid = assignment.clusters[c].centroid;
        aim(b);
        beams.push_back(std::move(b));
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
        int label = assignment.labels[i];
        if (label == kNoise) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < beams.size(); ++c) {
                const double d = sq_dist(points[i], beams[c].centroid);
                if (d < best) {
                    best = d;
                    label = static_cast<int>(c);
                }
            }
        }
        beams[label].members.push_back(user_ids[i]);
    }
    return beams;
}

bool should_recluster(std::span<const double> mean_sinr_db, double threshold_db) {
    if (mean_sinr_db.empty()) throw std::invalid_argument("should_recluster: no beams");
    return *std::min_element(mean_sinr_db.begin(), mean_sinr_db.end()) < threshold_db;
}

void SinrWindow::push(double sinr_db) {
    values_.push_back(sinr_db);
    sum_ += sinr_db;
    if (static_cast<int>(values_.size()) > length_) {
        sum_ -= values_.front();
        values_.pop_front();
    }
}

double SinrWindow::mean() const { return values_.empty() ? 0.0 : sum_ / values_.size(); }

void SinrWindow::clear() {
    values_.clear();
    sum_ = 0.0;
}

} // namespace dqld
