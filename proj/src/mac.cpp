#include "dqld/mac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dqld {

RbgGrid build_rbg_grid(const SimConfig &cfg) {
    RbgGrid g;
    const double rb_hz = cfg.subcarriers_per_rb * cfg.scs_hz;
    const auto fit = static_cast<int>(std::floor(cfg.bandwidth_hz / rb_hz + 1e-9));
    g.n_rbs = std::min(cfg.max_rbs, fit);
    g.rbs_per_rbg = cfg.rbs_per_rbg;
    g.n_rbgs = g.n_rbs / cfg.rbs_per_rbg;
    g.rbg_hz = cfg.rbs_per_rbg * rb_hz;
    if (g.n_rbgs < 1) throw ConfigError("bandwidth_hz", "too small for one resource block group");
    return g;
}

int transport_block_bits(double rbg_hz, double tti_seconds, double spectral_efficiency) {
    return static_cast<int>(std::floor(rbg_hz * tti_seconds * spectral_efficiency + 1e-9));
}

void Allocation::assign(int rbg, int user_id) {
    if (rbg < 0 || rbg >= n_rbgs()) throw std::out_of_range("Allocation: RBG index");
    if (user_of_rbg_[rbg] != kUnassigned) throw std::logic_error("Allocation: RBG already assigned");
    user_of_rbg_[rbg] = user_id;
}

bool Allocation::empty() const {
    return std::all_of(user_of_rbg_.begin(), user_of_rbg_.end(), [](int u) { return u == kUnassigned; });
}

std::vector<int> Allocation::rbgs_of(int user_id) const {
    std::vector<int> out;
    for (int k = 0; k < n_rbgs(); ++k)
        if (user_of_rbg_[k] == user_id) out.push_back(k);
    return out;
}

bool Allocation::consistent_with(std::span<const int> members) const {
    return std::all_of(user_of_rbg_.begin(), user_of_rbg_.end(), [&](int u) {
        return u == kUnassigned || std::find(members.begin(), members.end(), u) != members.end();
    });
}

Allocation kppf_schedule(std::span<const SchedUser> users, int n_rbgs, double tti_seconds,
                         const std::vector<bool> &blocked) {
    Allocation alloc(n_rbgs);
    std::vector<std::int64_t> remaining(users.size());
    for (std::size_t i = 0; i < users.size(); ++i) remaining[i] = users[i].pending_bits;

    for (int k = 0; k < n_rbgs; ++k) {
        if (!blocked.empty() && blocked[k]) continue;
        bool urllc_waiting = false;
        bool anyone = false;
        for (std::size_t i = 0; i < users.size(); ++i) {
            if (remaining[i] <= 0) continue;
            anyone = true;
            urllc_waiting = urllc_waiting || users[i].cls == ServiceClass::Urllc;
        }
        if (!anyone) break;
        const ServiceClass cls = urllc_waiting ? ServiceClass::Urllc : ServiceClass::Embb;

        std::size_t best = users.size();
        double best_metric = -1.0;
        for (std::size_t i = 0; i < users.size(); ++i) {
            if (remaining[i] <= 0 || users[i].cls != cls) continue;
            const double rate = users[i].tbs_bits[k] / tti_seconds;
            const double avg = users[i].avg_rate_bps[k];
            const double metric = avg > 0.0 ? rate / avg : (rate > 0.0 ? std::numeric_limits<double>::max() : 0.0);
            if (best == users.size() || metric > best_metric ||
                (metric == best_metric && users[i].user_id < users[best].user_id)) {
                best = i;
                best_metric = metric;
            }
        }
        alloc.assign(k, users[best].user_id);
        remaining[best] -= users[best].tbs_bits[k];
    }
    return alloc;
}

PfAverages::PfAverages(int n_users, int n_rbgs, double ema)
    : n_rbgs_(n_rbgs), ema_(ema), avg_(static_cast<std::size_t>(n_users) * n_rbgs, 0.0),
      set_(static_cast<std::size_t>(n_users) * n_rbgs, false) {}

double PfAverages::get(int user, int rbg) const { return avg_[static_cast<std::size_t>(user) * n_rbgs_ + rbg]; }

void PfAverages::seed_if_unset(int user, int rbg, double achievable_bps) {
    const auto i = static_cast<std::size_t>(user) * n_rbgs_ + rbg;
    if (!set_[i]) {
        avg_[i] = achievable_bps;
        set_[i] = true;
    }
}

void PfAverages::update(int user, int rbg, double served_bps) {
    const auto i = static_cast<std::size_t>(user) * n_rbgs_ + rbg;
    avg_[i] = (1.0 - ema_) * avg_[i] + ema_ * served_bps;
}

bool draw_ack(double bler, Rng &rng) { return !(std::uniform_real_distribution<double>(0.0, 1.0)(rng) < bler); }

PacketMapping map_packets(std::span<const int> link_capacity_bits, std::span<const int> packet_bits) {
    PacketMapping out;
    out.payload_bits.assign(link_capacity_bits.size(), 0);
    std::int64_t total = 0;
    for (int c : link_capacity_bits) total += std::max(c, 0);

    std::size_t link = 0;
    int used = 0;  // bits used on the current link
    for (std::size_t p = 0; p < packet_bits.size(); ++p) {
        int need = packet_bits[p];
        if (need > total) break;
        total -= need;
        while (link < link_capacity_bits.size() && used >= link_capacity_bits[link]) {
            ++link;
            used = 0;
        }
        MappedPacket m{p, static_cast<int>(link), static_cast<int>(link)};
        while (need > 0) {
            if (used >= link_capacity_bits[link]) {
                ++link;
                used = 0;
                continue;
            }
            const int take = std::min(need, link_capacity_bits[link] - used);
            used += take;
            need -= take;
            out.payload_bits[link] += take;
            m.last_link = static_cast<int>(link);
        }
        out.packets.push_back(m);
    }
    return out;
}

HarqEntity::HarqEntity(int n_processes, int rtt_ttis, int max_retx) : rtt_(rtt_ttis), max_retx_(max_retx) {
    for (int i = 0; i < n_processes; ++i) processes_.push_back(HarqProcess{i});
}

std::optional<int> HarqEntity::free_process() const {
    for (const auto &p : processes_)
        if (!p.busy) return p.id;
    return std::nullopt;
}

int HarqEntity::busy_count() const {
    return static_cast<int>(std::count_if(processes_.begin(), processes_.end(), [](const auto &p) { return p.busy; }));
}

void HarqEntity::send(int process, std::int64_t now_tti, std::vector<Packet> failed, int retx_count) {
    auto &p = processes_.at(static_cast<std::size_t>(process));
    if (retx_count == 0 && p.busy) throw std::logic_error("HarqEntity: new data on a busy process");
    if (retx_count > max_retx_) throw std::logic_error("HarqEntity: retransmission limit exceeded");
    p.busy = true;
    p.send_tti = now_tti;
    p.retx_count = retx_count;
    p.failed = std::move(failed);
}

HarqFeedback HarqEntity::collect(std::int64_t now_tti) {
    HarqFeedback fb;
    for (auto &p : processes_) {
        if (!p.busy) continue;
        const std::int64_t due = p.send_tti + rtt_;
        if (due < now_tti) throw std::logic_error("HarqEntity: feedback missed");
        if (due > now_tti) continue;
        if (p.failed.empty()) {
            p.busy = false;
        } else if (p.retx_count < max_retx_) {
            fb.retransmissions.push_back({p.id, std::move(p.failed)});
            p.failed.clear();
        } else {
            for (auto &pk : p.failed) fb.lost.push_back(std::move(pk));
            p.failed.clear();
            p.busy = false;
        }
    }
    return fb;
}

void HarqEntity::release(int process) {
    auto &p = processes_.at(static_cast<std::size_t>(process));
    p.busy = false;
    p.failed.clear();
}

LatencyRecord record_latency(const Packet &p, double tti_seconds, int rtt_ttis) {
    if (!p.delivered_tti || !p.first_tx_tti) throw std::logic_error("record_latency: packet not delivered");
    if (*p.delivered_tti != *p.first_tx_tti + static_cast<std::int64_t>(p.retx_count) * rtt_ttis)
        throw std::logic_error("record_latency: delivery time inconsistent with HARQ timing");
    LatencyRecord r;
    r.d_q = static_cast<double>(*p.first_tx_tti - p.arrival_tti) * tti_seconds;
    r.d_tx = tti_seconds;
    r.d_harq = static_cast<double>(p.retx_count * rtt_ttis) * tti_seconds;
    r.total = r.d_tx + r.d_q + r.d_harq;
    return r;
}

} // namespace dqld
