#include "dqld/traffic.hpp"

#include <doctest.h>
#include <cmath>

using namespace dqld;

namespace {
constexpr double kTti = 2.0e-3 / 14.0;
}

TEST_CASE("zero load never generates packets") {
    Rng rng(1);
    std::int64_t id = 0;
    for (int t = 0; t < 10000; ++t) CHECK(generate_arrivals(0, 0.0, kTti, 256, t, rng, id).empty());
}

TEST_CASE("arrival counts follow the Poisson mean") {
    // 1 Mbps over 1.5 s in 256-bit packets: mean 5859.375, sd 76.5 per run.
    const double mean = 1e6 * 1.5 / 256.0;
    double total = 0;
    std::int64_t id = 0;
    for (int run = 0; run < 10; ++run) {
        Rng rng(100 + run);
        for (int t = 0; t < 10500; ++t) {
            const auto a = generate_arrivals(0, 1e6, kTti, 256, t, rng, id);
            for (const auto &p : a) {
                CHECK(p.arrival_tti == t);
                CHECK(p.size_bits == 256);
            }
            total += static_cast<double>(a.size());
        }
    }
    const double sample_mean = total / 10;
    CHECK(std::abs(sample_mean - mean) <= 3.0 * std::sqrt(mean / 10));
    CHECK(id == static_cast<std::int64_t>(total));
}

TEST_CASE("load split per user") {
    CHECK(per_user_load(1e6, 12) == doctest::Approx(83333.333333).epsilon(1e-9));
    CHECK(per_user_load(1e6, 6) == doctest::Approx(166666.666667).epsilon(1e-9));
    CHECK(per_user_load(1e6, 0) == 0.0);
}

TEST_CASE("head-of-line delay") {
    UserQueue q;
    CHECK_FALSE(q.head_of_line_delay(5, kTti).has_value());
    q.enqueue(Packet{0, 0, 256, 3});
    CHECK(*q.head_of_line_delay(3, kTti) == 0.0);
    CHECK(*q.head_of_line_delay(10, kTti) == doctest::Approx(1.0e-3).epsilon(1e-12));
}

TEST_CASE("queue is FIFO and tracks bits") {
    UserQueue q;
    q.enqueue(Packet{0, 0, 256, 1});
    q.enqueue(Packet{1, 0, 256, 1});
    q.enqueue(Packet{2, 0, 256, 4});
    CHECK(q.queued_bits() == 768);
    CHECK(q.pop_front().id == 0);
    CHECK(q.front().id == 1);
    CHECK(q.queued_bits() == 512);
    CHECK(q.bits_enqueued() == 768);
    CHECK(q.bits_dequeued() == 256);
    CHECK_THROWS(q.enqueue(Packet{3, 0, 256, 2}));
}
