#pragma once

#include "dqld/rng.hpp"

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

namespace dqld {

struct Packet {
    std::int64_t id = 0;
    int user_id = 0;
    int size_bits = 256;
    std::int64_t arrival_tti = 0;
    std::optional<std::int64_t> first_tx_tti;
    std::optional<std::int64_t> delivered_tti;
    int retx_count = 0;
};

// FIFO of packets not yet handed to HARQ.
class UserQueue {
public:
    // Packets must arrive in non-decreasing arrival_tti order.
    void enqueue(Packet p);
    Packet pop_front();
    const Packet &front() const { return packets_.front(); }
    const Packet &at(std::size_t i) const { return packets_[i]; }
    bool empty() const { return packets_.empty(); }
    std::size_t size() const { return packets_.size(); }
    std::int64_t queued_bits() const { return bits_in_ - bits_out_; }
    std::int64_t bits_enqueued() const { return bits_in_; }
    std::int64_t bits_dequeued() const { return bits_out_; }

    // (now - head.arrival_tti) * tti_seconds; nullopt for an empty queue.
    std::optional<double> head_of_line_delay(std::int64_t now_tti, double tti_seconds) const;

private:
    std::deque<Packet> packets_;
    std::int64_t bits_in_ = 0;
    std::int64_t bits_out_ = 0;
};

// Equal split of a class's per-gNB offered load over that class's users.
double per_user_load(double class_load_bps, int n_class_users);

// Poisson(load * dt / packet_bits) packets stamped with now_tti. Ids are taken
// from next_id, which is advanced.
std::vector<Packet> generate_arrivals(int user_id, double offered_load_bps, double dt, int packet_bits,
                                      std::int64_t now_tti, Rng &rng, std::int64_t &next_id);

} // namespace dqld
