#pragma once

#include "dqld/channel.hpp"
#include "dqld/rng.hpp"
#include "dqld/topology.hpp"

#include <deque>
#include <span>
#include <vector>

namespace dqld {

constexpr int kNoise = -1;

struct Cluster {
    std::vector<int> members;  // indices into the clustered point list
    Position centroid;
};

struct ClusterAssignment {
    std::vector<int> labels;   // per point: cluster index or kNoise
    std::vector<Cluster> clusters;
};

// Density-based clustering. A point is core when at least min_pts points (itself
// included) lie within eps. Clusters are the connected components of the core
// points under the eps relation, numbered by their lowest core index; a border
// point joins the cluster of its lowest-index core neighbour.
ClusterAssignment dbscan(std::span<const Position> points, double eps, int min_pts);

struct KmeansResult {
    ClusterAssignment assignment;
    std::vector<double> inertia_trace;  // within-cluster sum of squares after each Lloyd iteration
    int iterations = 0;
};

// k-means++ seeding followed by Lloyd iterations until the labels stop changing
// or max_iters is hit. Throws std::invalid_argument when k > |points| or k < 1.
KmeansResult kmeans(std::span<const Position> points, int k, int max_iters, Rng &rng);

// Lloyd iterations from given centroids.
KmeansResult kmeans_from(std::span<const Position> points, std::vector<Position> centroids, int max_iters);

double inertia(std::span<const Position> points, const ClusterAssignment &a);

struct Beam {
    int id = 0;
    int gnb_id = 0;
    std::vector<int> members;  // user ids
    Position centroid;
    double boresight = 0.0;
    CVector weights;
};

// One beam per cluster steered at the centroid. Noise users join the beam with the
// nearest centroid; with no clusters at all every user shares one beam aimed at
// their common centroid. user_ids[i] is the id of points[i].
std::vector<Beam> form_beams(const ClusterAssignment &assignment, std::span<const int> user_ids,
                             std::span<const Position> points, const GnbState &gnb);

// True iff some beam's member-averaged SINR is strictly below the threshold.
// Throws std::invalid_argument on an empty list.
bool should_recluster(std::span<const double> mean_sinr_db, double threshold_db);

// Sliding window of per-TTI member-averaged SINR (dB) for one beam.
class SinrWindow {
public:
    explicit SinrWindow(int length) : length_(length) {}

    void push(double sinr_db);
    double mean() const;
    bool empty() const { return values_.empty(); }
    void clear();

private:
    int length_;
    std::deque<double> values_;
    double sum_ = 0.0;
};

} // namespace dqld
