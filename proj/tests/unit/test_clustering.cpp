#include "dqld/clustering.hpp"

#include "../oracles.hpp"

#include <doctest.h>
#include <algorithm>
#include <numeric>
#include <set>

using namespace dqld;

namespace {

oracle::Partition partition_of(const ClusterAssignment &a) {
    oracle::Partition p;
    for (const auto &c : a.clusters) p.insert(std::set<int>(c.members.begin(), c.members.end()));
    return p;
}

std::set<int> noise_of(const ClusterAssignment &a) {
    std::set<int> s;
    for (std::size_t i = 0; i < a.labels.size(); ++i)
        if (a.labels[i] == kNoise) s.insert(static_cast<int>(i));
    return s;
}

std::vector<Position> blob(Position c, int n, double r, Rng &rng) {
    std::vector<Position> out;
    for (int i = 0; i < n; ++i) out.push_back(uniform_in_disc(c, r, rng));
    return out;
}

} // namespace

TEST_CASE("dbscan examples") {
    SUBCASE("five points within eps form one cluster") {
        std::vector<Position> p{{0, 0}, {10, 0}, {0, 10}, {10, 10}, {5, 5}};
        const auto a = dbscan(p, 30, 5);
        CHECK(a.clusters.size() == 1);
        CHECK(noise_of(a).empty());
    }
    SUBCASE("isolated points are all noise") {
        std::vector<Position> p{{0, 0}, {100, 0}, {0, 100}, {200, 200}};
        const auto a = dbscan(p, 30, 2);
        CHECK(a.clusters.empty());
        CHECK(noise_of(a).size() == 4);
    }
    SUBCASE("two blobs far apart") {
        Rng rng(1);
        auto p = blob({0, 0}, 6, 10, rng);
        const auto q = blob({200, 0}, 6, 10, rng);
        p.insert(p.end(), q.begin(), q.end());
        const auto a = dbscan(p, 30, 5);
        CHECK(a.clusters.size() == 2);
        const auto o = oracle::dbscan(p, 30, 5);
        CHECK(partition_of(a) == o.clusters);
    }
    SUBCASE("empty input") {
        const auto a = dbscan({}, 30, 5);
        CHECK(a.labels.empty());
        CHECK(a.clusters.empty());
    }
}

TEST_CASE("dbscan equals the brute-force oracle on random instances") {
    Rng rng(2024);
    std::uniform_int_distribution<int> nd(0, 15), md(1, 6);
    std::uniform_real_distribution<double> ed(5, 40), cd(0, 120);
    for (int t = 0; t < 200; ++t) {
        const int n = nd(rng);
        std::vector<Position> p;
        for (int i = 0; i < n; ++i) p.push_back({cd(rng), cd(rng)});
        const double eps = ed(rng);
        const int m = md(rng);
        const auto a = dbscan(p, eps, m);
        const auto o = oracle::dbscan(p, eps, m);
        CHECK(partition_of(a) == o.clusters);
        CHECK(noise_of(a) == o.noise);
    }
}

TEST_CASE("dbscan is invariant to input order") {
    Rng rng(77);
    std::uniform_real_distribution<double> cd(0, 80);
    for (int t = 0; t < 50; ++t) {
        std::vector<Position> p;
        for (int i = 0; i < 14; ++i) p.push_back({cd(rng), cd(rng)});
        const auto a = dbscan(p, 20, 3);
        std::vector<int> perm(p.size());
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<Position> q;
        for (int i : perm) q.push_back(p[i]);
        const auto b = dbscan(q, 20, 3);
        // Core points and their clusters must agree; map b back to p's indices.
        oracle::Partition mapped;
        for (const auto &c : b.clusters) {
            std::set<int> s;
            for (int m : c.members) s.insert(perm[m]);
            mapped.insert(s);
        }
        // Border points on ties may move, so compare the core-only view.
        auto core_view = [&](const oracle::Partition &part) {
            oracle::Partition out;
            for (const auto &c : part) {
                std::set<int> s;
                for (int i : c) {
                    int cnt = 0;
                    for (const auto &o : p) cnt += distance(o, p[i]) <= 20;
                    if (cnt >= 3) s.insert(i);
                }
                out.insert(s);
            }
            return out;
        };
        CHECK(core_view(mapped) == core_view(partition_of(a)));
        CHECK(a.clusters.size() == b.clusters.size());
    }
}

TEST_CASE("kmeans") {
    Rng rng(5);
    SUBCASE("k = n gives zero inertia") {
        auto p = blob({0, 0}, 7, 50, rng);
        const auto r = kmeans(p, 7, 100, rng);
        CHECK(r.assignment.clusters.size() == 7);
        CHECK(inertia(p, r.assignment) == doctest::Approx(0.0));
    }
    SUBCASE("k > n is rejected") {
        auto p = blob({0, 0}, 3, 5, rng);
        CHECK_THROWS_AS(kmeans(p, 4, 10, rng), std::invalid_argument);
    }
    SUBCASE("two separated blobs match the exhaustive 2-partition") {
        for (int t = 0; t < 20; ++t) {
            auto p = blob({0, 0}, 6, 10, rng);
            const auto q = blob({100, 30}, 6, 10, rng);
            p.insert(p.end(), q.begin(), q.end());
            std::vector<int> labels;
            const double best = oracle::best_two_partition(p, &labels);
            const auto r = kmeans(p, 2, 100, rng);
            CHECK(inertia(p, r.assignment) == doctest::Approx(best).epsilon(1e-9));
            for (std::size_t i = 0; i < p.size(); ++i)
                CHECK((r.assignment.labels[i] == r.assignment.labels[0]) == (labels[i] == labels[0]));
        }
    }
    SUBCASE("inertia never increases across Lloyd iterations") {
        for (int t = 0; t < 30; ++t) {
            auto p = blob({0, 0}, 15, 80, rng);
            const auto r = kmeans(p, 3, 100, rng);
            for (std::size_t i = 1; i < r.inertia_trace.size(); ++i)
                CHECK(r.inertia_trace[i] <= r.inertia_trace[i - 1] + 1e-9);
        }
    }
    SUBCASE("a converged start is a fixpoint") {
        auto p = blob({0, 0}, 12, 60, rng);
        const auto r = kmeans(p, 3, 100, rng);
        std::vector<Position> cents;
        for (const auto &c : r.assignment.clusters) cents.push_back(c.centroid);
        const auto again = kmeans_from(p, cents, 1);
        CHECK(again.assignment.labels == r.assignment.labels);
    }
}

TEST_CASE("form_beams") {
    GnbState g{0, {0, 0}, 8, 0.005, 0.01};
    SUBCASE("one cluster due +x gives boresight 0") {
        std::vector<Position> p{{50, -1}, {50, 1}, {49, 0}, {51, 0}, {50, 0}};
        std::vector<int> ids{10, 11, 12, 13, 14};
        const auto beams = form_beams(dbscan(p, 30, 5), ids, p, g);
        REQUIRE(beams.size() == 1);
        CHECK(beams[0].boresight == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(beams[0].members.size() == 5);
    }
    SUBCASE("three clusters give three beams partitioning the users") {
        Rng rng(8);
        std::vector<Position> p;
        for (Position c : {Position{60, 60}, Position{60, -60}, Position{-80, 0}}) {
            const auto b = blob(c, 5, 5, rng);
            p.insert(p.end(), b.begin(), b.end());
        }
        std::vector<int> ids(p.size());
        std::iota(ids.begin(), ids.end(), 0);
        const auto beams = form_beams(dbscan(p, 30, 5), ids, p, g);
        CHECK(beams.size() == 3);
        std::multiset<int> seen;
        for (const auto &b : beams) {
            seen.insert(b.members.begin(), b.members.end());
            CHECK(b.boresight == doctest::Approx(aod(g, b.centroid)));
        }
        CHECK(seen == std::multiset<int>(ids.begin(), ids.end()));
    }
    SUBCASE("a far noise user joins the only beam") {
        std::vector<Position> p{{50, 0}, {51, 0}, {52, 0}, {50, 1}, {51, 1}, {150, 0}};
        std::vector<int> ids{0, 1, 2, 3, 4, 5};
        const auto a = dbscan(p, 30, 5);
        CHECK(a.labels[5] == kNoise);
        const auto beams = form_beams(a, ids, p, g);
        REQUIRE(beams.size() == 1);
        CHECK(beams[0].members.size() == 6);
    }
    SUBCASE("no clusters at all share one beam") {
        std::vector<Position> p{{50, 0}, {0, 80}};
        std::vector<int> ids{0, 1};
        const auto beams = form_beams(dbscan(p, 30, 5), ids, p, g);
        REQUIRE(beams.size() == 1);
        CHECK(beams[0].members.size() == 2);
    }
    SUBCASE("no users, no beams") { CHECK(form_beams(dbscan({}, 30, 5), {}, {}, g).empty()); }
}

TEST_CASE("re-cluster trigger") {
    std::vector<double> above{7, 9}, one_below{7, 4.9}, at{5, 9};
    CHECK_FALSE(should_recluster(above, 5));
    CHECK(should_recluster(one_below, 5));
    CHECK_FALSE(should_recluster(at, 5));
    CHECK_THROWS_AS(should_recluster(std::vector<double>{}, 5), std::invalid_argument);
}

TEST_CASE("sinr window slides") {
    SinrWindow w(3);
    w.push(1);
    w.push(2);
    CHECK(w.mean() == doctest::Approx(1.5));
    w.push(3);
    w.push(10);
    CHECK(w.mean() == doctest::Approx(5.0));
}
