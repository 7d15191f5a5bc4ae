#include "dqld/config.hpp"

#include <doctest.h>
#include <cmath>
#include <filesystem>
#include <fstream>

using namespace dqld;

TEST_CASE("empty config yields the table defaults") {
    const auto c = parse_config("");
    CHECK(c.harq_rtt_ttis == 4);
    CHECK(c.clustering.min_pts == 5);
    CHECK(c.clustering.eps_m == 30.0);
    CHECK(c.harq_processes == 6);
    CHECK(c.harq_max_retx == 1);
    CHECK(c.agent.replay_capacity == 60);
    CHECK(c.agent.copy_interval == 120);
    CHECK(c.clusters_per_gnb == 3);
    CHECK(c.scheduler == SchedulerKind::Dqld);
}

TEST_CASE("tti is two symbols of a 14-symbol millisecond slot") {
    const SimConfig c;
    CHECK(c.tti_seconds() == doctest::Approx(2.0e-3 / 14.0).epsilon(1e-15));
    CHECK(c.tti_seconds() == doctest::Approx(1.4286e-4).epsilon(1e-4));
}

TEST_CASE("1.5 s at 2/14 ms is exactly 10500 TTIs") {
    SimConfig c;
    CHECK(c.total_ttis() == 10500);
    c.sim_seconds = 1.0;
    CHECK(c.total_ttis() == 7000);
    c.sim_seconds = 1.0e-4;  // less than one TTI still runs one
    CHECK(c.total_ttis() == 1);
}

TEST_CASE("sim_seconds = 0 is rejected naming the key") {
    try {
        parse_config("sim_seconds = 0\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError &e) {
        CHECK(e.key() == "sim_seconds");
    }
}

TEST_CASE("single-key scheduler override keeps other defaults") {
    const auto c = parse_config("scheduler = kppf\n");
    CHECK(c.scheduler == SchedulerKind::Kppf);
    const auto q = parse_config("scheduler = \"kppf\"\n");
    CHECK(q.scheduler == SchedulerKind::Kppf);
    CHECK(c.harq_rtt_ttis == 4);
    CHECK(c.sim_seconds == 1.5);
}

TEST_CASE("comments, blank lines and whitespace are accepted") {
    const auto c = parse_config("# header\n\n  n_gnbs=3  # trailing\nurllc_load_bps = 5e5\n");
    CHECK(c.n_gnbs == 3);
    CHECK(c.urllc_load_bps == 5e5);
}

TEST_CASE("malformed input reports the offending key") {
    auto key_of = [](const std::string &text) {
        try {
            parse_config(text);
        } catch (const ConfigError &e) {
            return e.key();
        }
        return std::string("<none>");
    };
    CHECK(key_of("max_tx_power_dbm = -3\n") == "max_tx_power_dbm");
    CHECK(key_of("n_gnbs = two\n") == "n_gnbs");
    CHECK(key_of("bogus_key = 1\n") == "bogus_key");
    CHECK(key_of("bler_target_urllc = 1.5\n") == "bler_target_urllc");
    CHECK(key_of("harq_max_retx = -1\n") == "harq_max_retx");
    CHECK(key_of("scheduler = random\n") == "scheduler");
    CHECK(key_of("tti_seconds = 0.001\n") == "tti_seconds");
    CHECK(key_of("no equals sign\n").empty());
}

TEST_CASE("a consistent tti_seconds is accepted") {
    CHECK_NOTHROW(parse_config("tti_seconds = 1.4286e-4\n"));
}

TEST_CASE("load_config reads files and reports unreadable ones") {
    const auto dir = std::filesystem::temp_directory_path() / "dqld_cfg_test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream(dir / "a.cfg") << "dbscan_eps_m = 25\ndbscan_min_pts = 4\n";
    }
    const auto c = load_config(dir / "a.cfg");
    CHECK(c.clustering.eps_m == 25.0);
    CHECK(c.clustering.min_pts == 4);
    CHECK_THROWS_AS(load_config(dir / "missing.cfg"), ConfigError);
}

TEST_CASE("derived physical quantities") {
    const SimConfig c;
    CHECK(c.wavelength_m() == doctest::Approx(0.00999308).epsilon(1e-5));
    CHECK(c.max_tx_power_w() == doctest::Approx(0.630957).epsilon(1e-5));
    // -174 dBm/Hz + 73.01 dB + 9 dB = -91.99 dBm
    CHECK(10.0 * std::log10(c.noise_power_w() * 1e3) == doctest::Approx(-91.9897).epsilon(1e-5));
    CHECK(c.users_per_gnb() == 12);
    CHECK(c.packet_bits() == 256);
}
