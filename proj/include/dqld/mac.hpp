#pragma once

#include "dqld/config.hpp"
#include "dqld/rng.hpp"
#include "dqld/topology.hpp"
#include "dqld/traffic.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace dqld {

struct RbgGrid {
    int n_rbs = 0;
    int rbs_per_rbg = 0;
    int n_rbgs = 0;      // K
    double rbg_hz = 0.0; // omega per RBG
};

// RB count is min(max_rbs, bandwidth / RB width); RBGs are whole groups of
// rbs_per_rbg. Throws ConfigError when not even one RBG fits.
RbgGrid build_rbg_grid(const SimConfig &cfg);

// floor(omega * tti * efficiency)
int transport_block_bits(double rbg_hz, double tti_seconds, double spectral_efficiency);

constexpr int kUnassigned = -1;

// RBG -> user for one beam; at most one user per RBG.
class Allocation {
public:
    explicit Allocation(int n_rbgs = 0) : user_of_rbg_(static_cast<std::size_t>(n_rbgs), kUnassigned) {}

    // Throws std::logic_error if the RBG is already taken.
    void assign(int rbg, int user_id);
    int user(int rbg) const { return user_of_rbg_[rbg]; }
    bool taken(int rbg) const { return user_of_rbg_[rbg] != kUnassigned; }
    int n_rbgs() const { return static_cast<int>(user_of_rbg_.size()); }
    bool empty() const;
    std::vector<int> rbgs_of(int user_id) const;
    // Every assigned user is in members.
    bool consistent_with(std::span<const int> members) const;

private:
    std::vector<int> user_of_rbg_;
};

// What a beam scheduler knows about one member user in the current TTI.
struct SchedUser {
    int user_id = 0;
    int action_index = 0;                  // position within the gNB's user list
    ServiceClass cls = ServiceClass::Urllc;
    std::int64_t pending_bits = 0;         // 0 when idle or out of HARQ processes
    std::optional<double> hol_delay_s;
    std::vector<int> cqi;                  // per RBG
    std::vector<int> tbs_bits;             // per RBG, from the CQI's MCS
    std::vector<double> avg_rate_bps;      // per RBG, PF average
};

// Strict URLLC-first, proportional fair within a class: RBG k goes to the
// eligible user maximising (tbs/tti) / average, ties to the lowest user id.
// A user stays eligible while its granted capacity is below its pending bits.
// RBGs marked in `blocked` are skipped.
Allocation kppf_schedule(std::span<const SchedUser> users, int n_rbgs, double tti_seconds,
                         const std::vector<bool> &blocked);

// Exponential moving average of served rate per (user, RBG), seeded with the
// first achievable rate seen.
class PfAverages {
public:
    PfAverages() = default;
    PfAverages(int n_users, int n_rbgs, double ema);

    double get(int user, int rbg) const;
    void seed_if_unset(int user, int rbg, double achievable_bps);
    void update(int user, int rbg, double served_bps);

private:
    int n_rbgs_ = 0;
    double ema_ = 0.05;
    std::vector<double> avg_;
    std::vector<bool> set_;
};

// NACK with probability bler.
bool draw_ack(double bler, Rng &rng);

struct MappedPacket {
    std::size_t packet = 0;  // index into the input packet list
    int first_link = 0;
    int last_link = 0;
};

struct PacketMapping {
    std::vector<MappedPacket> packets;
    std::vector<int> payload_bits;  // per link
};

// Packs whole packets, in order, as a bit stream over the links; a packet may
// straddle links but never the TTI. Stops at the first packet that no longer fits.
PacketMapping map_packets(std::span<const int> link_capacity_bits, std::span<const int> packet_bits);

struct HarqProcess {
    int id = 0;
    bool busy = false;
    std::int64_t send_tti = 0;
    int retx_count = 0;
    std::vector<Packet> failed;  // awaiting feedback
};

struct HarqFeedback {
    struct Retx {
        int process = 0;
        std::vector<Packet> packets;
    };
    std::vector<Retx> retransmissions;
    std::vector<Packet> lost;
};

// Per-user HARQ entity: a fixed pool of stop-and-wait processes with feedback
// consumed exactly rtt TTIs after each send.
class HarqEntity {
public:
    HarqEntity(int n_processes = 6, int rtt_ttis = 4, int max_retx = 1);

    std::optional<int> free_process() const;
    int busy_count() const;

    // Marks the process busy from now_tti; failed packets wait for feedback.
    void send(int process, std::int64_t now_tti, std::vector<Packet> failed, int retx_count);
    // Consumes feedback due at now_tti. A NACKed block is returned for
    // retransmission while retx_count < max_retx, otherwise its packets are lost.
    // Processes with nothing pending are released.
    HarqFeedback collect(std::int64_t now_tti);
    // Releases a process whose retransmission could not be placed.
    void release(int process);

    const std::vector<HarqProcess> &processes() const { return processes_; }
    int rtt() const { return rtt_; }
    int max_retx() const { return max_retx_; }

private:
    std::vector<HarqProcess> processes_;
    int rtt_;
    int max_retx_;
};

struct LatencyRecord {
    double d_tx = 0.0;
    double d_q = 0.0;
    double d_harq = 0.0;
    double total = 0.0;
};

// Queueing + one TTI of transmission + rtt per retransmission. Throws
// std::logic_error for an undelivered packet or one whose delivery time does
// not match first_tx + retx * rtt.
LatencyRecord record_latency(const Packet &p, double tti_seconds, int rtt_ttis);

} // namespace dqld
