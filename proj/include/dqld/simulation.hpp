#pragma once

#include "dqld/config.hpp"
#include "dqld/topology.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dqld {

inline int class_index(ServiceClass c) { return c == ServiceClass::Urllc ? 0 : 1; }

// The fixed per-TTI phase order.
enum class Phase { Mobility, Traffic, Clustering, Channel, Scheduling, Transmission, Metrics, Training };
const char *phase_name(Phase p);

struct PacketRecord {
    std::int64_t packet_id = 0;
    int user_id = 0;
    ServiceClass cls = ServiceClass::Urllc;
    std::int64_t arrival_tti = 0;
    enum class Fate { Delivered, Lost, Pending } fate = Fate::Pending;
    std::int64_t delivery_tti = -1;
    double latency_s = 0.0;

    bool operator==(const PacketRecord &) const = default;
};

struct ClusterEvent {
    std::int64_t tti = 0;
    int gnb = 0;
    int trigger_beam = -1;  // -1 for the initial clustering
    double trigger_sinr_db = 0.0;
    int old_beams = 0;
    int new_beams = 0;
    std::vector<Position> centroids;

    bool operator==(const ClusterEvent &) const = default;
};

struct InvariantCount {
    std::int64_t checks = 0;
    std::int64_t violations = 0;
    std::string first_violation;

    bool operator==(const InvariantCount &) const = default;
};

struct RunReport {
    std::uint64_t seed = 0;
    SchedulerKind scheduler = SchedulerKind::Dqld;
    double tti_seconds = 0.0;
    double sim_seconds = 0.0;
    int n_gnbs = 0;
    std::int64_t ttis_executed = 0;

    // Indexed by class_index: 0 = URLLC, 1 = eMBB.
    std::array<std::vector<double>, 2> latency_s;
    std::array<std::int64_t, 2> packets_generated{};
    std::array<std::int64_t, 2> packets_sent{};
    std::array<std::int64_t, 2> packets_lost{};
    std::array<std::int64_t, 2> packets_delivered{};
    std::array<std::int64_t, 2> packets_pending{};
    std::array<double, 2> offered_bits{};
    std::array<double, 2> goodput_bits{};
    std::array<double, 2> shannon_bits{};
    // (gNB, beam) -> per-class delivered bits
    std::map<std::pair<int, int>, std::array<double, 2>> goodput_bits_by_beam;

    std::vector<double> reward_trace;  // mean reward of each TTI with decisions
    std::vector<ClusterEvent> cluster_events;
    std::vector<PacketRecord> packets;
    std::map<std::string, InvariantCount> invariants;
    std::int64_t experiences = 0;
    std::int64_t training_steps = 0;
    std::int64_t target_syncs = 0;
    std::int64_t rbg_grants = 0;

    bool operator==(const RunReport &) const = default;
};

struct MacTraceRow {
    std::int64_t tti = 0;
    int gnb = 0;
    int beam = 0;
    int rbg = 0;
    int user = 0;
    int cqi = 0;
    int mcs = 0;
    int ack = -1;  // -1 when the grant carried no payload
};

struct RunOptions {
    std::function<void(std::int64_t, Phase)> phase_hook;
    std::function<void(const MacTraceRow &)> mac_trace;
    std::function<void(std::int64_t, const std::vector<UserState> &)> topology_hook;
    std::optional<std::filesystem::path> agent_dump_dir;
    bool keep_packets = true;
};

// One seeded run. Identical (cfg, seed) gives an identical report.
RunReport run_simulation(const SimConfig &cfg, std::uint64_t seed, const RunOptions &opts = {});

// Per-packet CSV: class,arrival_tti,delivery_tti,latency_s with LOST/PENDING markers.
void write_run_csv(const RunReport &r, const std::filesystem::path &path);
void write_events_log(const RunReport &r, std::ostream &out);

// Headline and auxiliary metrics of one run, keyed by metric name. Undefined
// values (e.g. PLR without traffic) are NaN.
std::vector<std::pair<std::string, double>> run_metrics(const RunReport &r);

// Inspection dumps.
void dump_tables(const std::filesystem::path &dir);

} // namespace dqld
