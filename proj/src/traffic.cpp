#include "dqld/traffic.hpp"

#include <stdexcept>

namespace dqld {

void UserQueue::enqueue(Packet p) {
    if (!packets_.empty() && p.arrival_tti < packets_.back().arrival_tti)
        throw std::invalid_argument("UserQueue: arrivals out of order");
    bits_in_ += p.size_bits;
    packets_.push_back(std::move(p));
}

Packet UserQueue::pop_front() {
    if (packets_.empty()) throw std::logic_error("UserQueue: pop from empty queue");
    Packet p = std::move(packets_.front());
    packets_.pop_front();
    bits_out_ += p.size_bits;
    return p;
}

std::optional<double> UserQueue::head_of_line_delay(std::int64_t now_tti, double tti_seconds) const {
    if (packets_.empty()) return std::nullopt;
    return static_cast<double>(now_tti - packets_.front().arrival_tti) * tti_seconds;
}

double per_user_load(double class_load_bps, int n_class_users) {
    return n_class_users > 0 ? class_load_bps / n_class_users : 0.0;
}

std::vector<Packet> generate_arrivals(int user_id, double offered_load_bps, double dt, int packet_bits,
                                      std::int64_t now_tti, Rng &rng, std::int64_t &next_id) {
    if (offered_load_bps < 0.0) throw std::invalid_argument("generate_arrivals: negative load");
    std::vector<Packet> out;
    const double mean = offered_load_bps * dt / packet_bits;
    if (mean <= 0.0) return out;
    const auto n = std::poisson_distribution<int>(mean)(rng);
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Packet p;
        p.id = next_id++;
        p.user_id = user_id;
        p.size_bits = packet_bits;
        p.arrival_tti = now_tti;
        out.push_back(p);
    }
    return out;
}

} // namespace dqld
