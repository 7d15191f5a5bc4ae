#include "dqld/metrics.hpp"

#include "../oracles.hpp"

#include <doctest.h>
#include <cmath>
#include <fstream>
#include <sstream>

using namespace dqld;

namespace {
std::string slurp(const std::filesystem::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}
} // namespace

TEST_CASE("eccdf") {
    SUBCASE("single sample") {
        const std::vector<double> s{0.3};
        const auto c = eccdf(s);
        CHECK(c.values == std::vector<double>{0.3});
        CHECK(c.probs == std::vector<double>{0.0});
    }
    SUBCASE("direct count") {
        const std::vector<double> s{4, 2, 3, 1};
        const auto c = eccdf(s);
        CHECK(c.values == std::vector<double>{1, 2, 3, 4});
        CHECK(c.probs[1] == 0.5);
        CHECK(c.probs.front() == 0.75);
        CHECK(c.probs.back() == 0.0);
    }
    SUBCASE("non-increasing with ties") {
        Rng rng(1);
        std::uniform_int_distribution<int> u(0, 20);
        std::vector<double> s;
        for (int i = 0; i < 500; ++i) s.push_back(u(rng));
        const auto c = eccdf(s);
        for (std::size_t i = 1; i < c.probs.size(); ++i) CHECK(c.probs[i] <= c.probs[i - 1]);
    }
    SUBCASE("empty input") { CHECK_THROWS_AS(eccdf(std::vector<double>{}), std::invalid_argument); }
}

TEST_CASE("plr") {
    CHECK(*plr(100, 0) == 0.0);
    CHECK(*plr(100, 50) == 0.5);
    CHECK_FALSE(plr(0, 0).has_value());
    CHECK_THROWS_AS(plr(10, 11), std::invalid_argument);
}

TEST_CASE("nearest-rank percentile") {
    std::vector<double> s;
    for (int i = 1; i <= 1000; ++i) s.push_back(i);
    CHECK(*percentile(s, 0.5) == 500);
    CHECK(*percentile(s, 0.999) == 999);
    CHECK(*percentile(s, 1.0) == 1000);
    CHECK_FALSE(percentile(std::vector<double>{}, 0.5).has_value());
}

TEST_CASE("sum rate") {
    SUBCASE("one link at unit SINR") {
        std::vector<ScheduledLink> l{{0, 0, ServiceClass::Embb, 0, 720e3, 1.0}};
        CHECK(sum_rate(l, ServiceClass::Embb) == doctest::Approx(720e3));
    }
    SUBCASE("no links") { CHECK(sum_rate({}, ServiceClass::Embb) == 0.0); }
    SUBCASE("additive over disjoint links") {
        std::vector<ScheduledLink> a{{0, 0, ServiceClass::Urllc, 0, 720e3, 3.0}},
            b{{1, 1, ServiceClass::Urllc, 1, 720e3, 7.0}}, ab{a[0], b[0]};
        CHECK(sum_rate(ab, ServiceClass::Urllc) ==
              doctest::Approx(sum_rate(a, ServiceClass::Urllc) + sum_rate(b, ServiceClass::Urllc)));
    }
}

TEST_CASE("sum rate matches the triple-loop oracle") {
    Rng rng(31);
    std::uniform_int_distribution<int> nb(1, 3), nu(1, 4), nk(1, 6), coin(0, 1);
    std::uniform_real_distribution<double> sd(0.0, 100.0);
    for (int t = 0; t < 100; ++t) {
        const int B = nb(rng), U = nu(rng), K = nk(rng);
        std::vector<std::vector<std::vector<oracle::RateCell>>> grid(B);
        std::vector<ScheduledLink> links;
        for (int b = 0; b < B; ++b) {
            grid[b].resize(U);
            std::vector<int> owner(K, -1);
            for (int k = 0; k < K; ++k)
                if (coin(rng)) owner[k] = static_cast<int>(rng() % U);
            for (int u = 0; u < U; ++u) {
                const int cls = (u % 2) + 1;
                for (int k = 0; k < K; ++k) {
                    const double s = sd(rng);
                    const bool on = owner[k] == u;
                    grid[b][u].push_back({on, cls, 720e3, s});
                    if (on)
                        links.push_back({b, u, cls == 1 ? ServiceClass::Urllc : ServiceClass::Embb, k, 720e3, s});
                }
            }
        }
        for (int cls : {1, 2}) {
            const double expect = oracle::sum_rate(grid, cls);
            const double got = sum_rate(links, cls == 1 ? ServiceClass::Urllc : ServiceClass::Embb);
            CHECK(std::abs(got - expect) <= 1e-12 * std::max(expect, 1.0));
        }
    }
}

TEST_CASE("t interval") {
    const std::vector<double> v{1, 2, 3};
    const auto ci = t_interval(v, 0.95);
    // t(0.975, 2) = 4.302652729911275, sd = 1
    const double half = 4.302652729911275 / std::sqrt(3.0);
    CHECK(ci.mean == doctest::Approx(2.0));
    CHECK(ci.hi - ci.mean == doctest::Approx(half).epsilon(1e-10));
    CHECK(ci.mean - ci.lo == doctest::Approx(half).epsilon(1e-10));
    const std::vector<double> same(10, 4.2);
    const auto z = t_interval(same, 0.95);
    CHECK(z.lo == z.hi);
    const std::vector<double> one{5.0};
    CHECK(t_interval(one, 0.95).lo == 5.0);
    const std::vector<double> with_nan{1, NAN, 3};
    CHECK(t_interval(with_nan, 0.95).n == 2);
    const std::vector<double> all_nan{NAN};
    CHECK(std::isnan(t_interval(all_nan, 0.95).mean));
}

TEST_CASE("campaign export") {
    std::vector<CampaignPoint> pts;
    for (const char *s : {"kppf", "dqld"}) {
        for (double load : {2e6, 5e5, 1e6, 1.5e6}) {
            CampaignPoint p{s, load, {}, {1e-4, 2e-4, 2e-4}, {3e-4}};
            for (const auto &m : headline_metrics()) p.metrics.emplace_back(m, std::vector<double>{1.0, 2.0});
            p.metrics.emplace_back("embb_shannon_rate", std::vector<double>{5.0});
            pts.push_back(p);
        }
    }
    const auto rows = campaign_rows(pts, 0.95);
    CHECK(rows.size() == 40);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto &a = rows[i - 1], &b = rows[i];
        CHECK(std::tie(a.scheduler, a.load_bps, a.metric) < std::tie(b.scheduler, b.load_bps, b.metric));
    }
    const auto dir = std::filesystem::temp_directory_path() / "dqld_export_test";
    std::filesystem::remove_all(dir);
    export_csv(pts, 0.95, dir);
    const auto first = slurp(dir / "campaign.csv");
    CHECK(first.rfind("scheduler,load_bps,metric,mean,ci_lo,ci_hi\n", 0) == 0);
    CHECK(std::count(first.begin(), first.end(), '\n') == 41);
    CHECK(slurp(dir / "dqld" / "eccdf_urllc_500000.csv") == "value_s,prob\n0.0001,0.6666666667\n0.0002,0\n");
    CHECK(slurp(dir / "campaign_extra.csv").find("embb_shannon_rate") != std::string::npos);
    export_csv(pts, 0.95, dir);
    CHECK(slurp(dir / "campaign.csv") == first);
}

TEST_CASE("unwritable export directory") {
    std::vector<CampaignPoint> pts{{"dqld", 1e6, {}, {1e-4}, {1e-4}}};
    CHECK_THROWS_AS(export_csv(pts, 0.95, "/proc/dqld_cannot_write_here"), std::runtime_error);
}

TEST_CASE("number formatting") {
    CHECK(format_number(NAN) == "NA");
    CHECK(format_number(1e6) == "1000000");
    CHECK(format_number(0.5) == "0.5");
}
