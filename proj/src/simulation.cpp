#include "dqld/simulation.hpp"

#include "dqld/agent.hpp"
#include "dqld/channel.hpp"
#include "dqld/clustering.hpp"
#include "dqld/mac.hpp"
#include "dqld/metrics.hpp"
#include "dqld/rng.hpp"
#include "dqld/traffic.hpp"

#include <algorithm>
#include <array>
#include <filesystem>
#include <map>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace dqld {

const char *phase_name(Phase p) {
    switch (p) {
    case Phase::Mobility: return "mobility";
    case Phase::Traffic: return "traffic";
    case Phase::Clustering: return "clustering";
    case Phase::Channel: return "channel";
    case Phase::Scheduling: return "scheduling";
    case Phase::Transmission: return "transmission";
    case Phase::Metrics: return "metrics";
    case Phase::Training: return "training";
    }
    return "?";
}

namespace {

struct UserRt {
    UserQueue queue;
    HarqEntity harq;
    int gnb = 0;
    int local = 0;        // action index within the gNB
    int beam = 0;         // index into the gNB's beam list
    double load_bps = 0.0;
};

struct GnbRt {
    std::vector<int> users;  // global ids, local order
    std::vector<Beam> beams;
    std::vector<SinrWindow> windows;
    std::vector<DqlAgent> agents;
    PfAverages pf;
    double rbg_power_w = 0.0;
    std::int64_t clustered_at = 0;
    // [beam][rbg] carried payload in the previous TTI
    std::vector<std::vector<char>> active_prev;
    Rng agent_rng;
    Rng cluster_rng;
};

// A transport block prepared for one user in one TTI.
struct Block {
    int user = 0;
    int beam = 0;
    int process = 0;
    int retx = 0;
    std::vector<int> rbgs;         // link order used for mapping
    std::vector<Packet> packets;   // packets carried
    PacketMapping mapping;
};

double angular_gap(double a, double b) {
    double d = std::fmod(std::abs(a - b), 2.0 * std::numbers::pi);
    return d > std::numbers::pi ? 2.0 * std::numbers::pi - d : d;
}

class Simulation {
public:
    Simulation(const SimConfig &cfg, std::uint64_t seed, const RunOptions &opts)
        : cfg_(cfg), opts_(opts), grid_(build_rbg_grid(cfg)), gnbs_(make_gnbs(cfg)),
          topo_rng_(make_stream(seed, Stream::Topology)), mob_rng_(make_stream(seed, Stream::Mobility)),
          traffic_rng_(make_stream(seed, Stream::Traffic)), channel_rng_(make_stream(seed, Stream::Channel)),
          mac_rng_(make_stream(seed, Stream::Mac)) {
        validate(cfg_);
        tti_ = cfg_.tti_seconds();
        K_ = grid_.n_rbgs;
        noise_ = cfg_.noise_power_w();
        chan_.path_count = cfg_.path_count;
        chan_.pathloss_exponent = cfg_.pathloss_exponent;
        chan_.noise_w = noise_;
        chan_.gain_variance = cfg_.gain_variance;
        sinr_qos_ = from_db(cfg_.agent.gamma_qos_db);

        report_.seed = seed;
        report_.scheduler = cfg_.scheduler;
        report_.tti_seconds = tti_;
        report_.sim_seconds = cfg_.sim_seconds;
        report_.n_gnbs = cfg_.n_gnbs;

        users_ = sample_pcp(cfg_, gnbs_, topo_rng_);
        G_ = static_cast<int>(gnbs_.size());
        U_ = static_cast<int>(users_.size());
        for (int g = 0; g < G_; ++g) {
            GnbRt rt;
            rt.agent_rng = make_stream(seed, Stream::Agent, g);
            rt.cluster_rng = make_stream(seed, Stream::Clustering, g);
            gnb_.push_back(std::move(rt));
        }
        std::vector<std::array<int, 2>> per_gnb(static_cast<std::size_t>(G_));
        for (const auto &u : users_) ++per_gnb[u.gnb_id][class_index(u.qci)];
        for (const auto &u : users_) {
            UserRt rt{UserQueue{}, HarqEntity(cfg_.harq_processes, cfg_.harq_rtt_ttis, cfg_.harq_max_retx)};
            rt.gnb = u.gnb_id;
            rt.local = static_cast<int>(gnb_[u.gnb_id].users.size());
            const double class_load = u.qci == ServiceClass::Urllc ? cfg_.urllc_load_bps : cfg_.embb_load_bps;
            rt.load_bps = per_user_load(class_load, per_gnb[u.gnb_id][class_index(u.qci)]);
            gnb_[u.gnb_id].users.push_back(u.id);
            urt_.push_back(std::move(rt));
        }
        for (auto &g : gnb_) g.pf = PfAverages(U_, K_, cfg_.pf_ema);

        // per-TTI scratch
        large_.assign(static_cast<std::size_t>(U_) * G_, 0.0);
        fade_.assign(static_cast<std::size_t>(U_) * G_ * K_, 0.0);
        cqi_.assign(static_cast<std::size_t>(U_) * K_, 1);
        mcs_.assign(static_cast<std::size_t>(U_) * K_, LinkAdaptation{});
        tbs_.assign(static_cast<std::size_t>(U_) * K_, 0);
        adapt_table_ = {};
        for (int c = kMinCqi; c <= kMaxCqi; ++c) {
            adapt_table_[0][c] = cqi_to_mcs(c, cfg_.bler_target_urllc);
            adapt_table_[1][c] = cqi_to_mcs(c, cfg_.bler_target_embb);
        }
    }

    RunReport run() {
        const std::int64_t n = cfg_.total_ttis();
        for (std::int64_t t = 0; t < n; ++t) step(t);
        report_.ttis_executed = n;
        finish();
        return std::move(report_);
    }

private:
    void phase(std::int64_t t, Phase p) {
        if (opts_.phase_hook) opts_.phase_hook(t, p);
    }

    void check(const std::string &name, bool ok, const std::string &detail = {}) {
        auto &c = report_.invariants[name];
        ++c.checks;
        if (!ok) {
            if (c.violations == 0) c.first_violation = detail;
            ++c.violations;
        }
    }

    std::size_t ug(int u, int g) const { return static_cast<std::size_t>(u) * G_ + g; }
    std::size_t uk(int u, int k) const { return static_cast<std::size_t>(u) * K_ + k; }
    std::size_t ugk(int u, int g, int k) const { return (static_cast<std::size_t>(u) * G_ + g) * K_ + k; }

    // Received power on RBG k at user u from beam b of gNB g.
    double rx(int u, int g, int b, int k) const {
        return gnb_[g].rbg_power_w * fade_[ugk(u, g, k)] * large_[ug(u, g)] * array_[g][b][u];
    }

    template <typename Active>
    double sinr_of(int u, int k, Active &&active) const {
        const int g = urt_[u].gnb;
        const int b = urt_[u].beam;
        double interference = 0.0;
        for (int g2 = 0; g2 < G_; ++g2)
            for (int b2 = 0; b2 < static_cast<int>(gnb_[g2].beams.size()); ++b2)
                if ((g2 != g || b2 != b) && active(g2, b2, k)) interference += rx(u, g2, b2, k);
        return rx(u, g, b, k) / (noise_ + interference);
    }

    void step(std::int64_t t) {
        phase(t, Phase::Mobility);
        for (auto &u : users_) u = step_waypoint(u, tti_, cfg_, gnbs_[u.gnb_id].position, mob_rng_);
        if (opts_.topology_hook) opts_.topology_hook(t, users_);

        phase(t, Phase::Traffic);
        for (int u = 0; u < U_; ++u) {
            auto arrivals = generate_arrivals(u, urt_[u].load_bps, tti_, cfg_.packet_bits(), t, traffic_rng_,
                                              next_packet_id_);
            const int c = class_index(users_[u].qci);
            report_.packets_generated[c] += static_cast<std::int64_t>(arrivals.size());
            for (auto &p : arrivals) urt_[u].queue.enqueue(std::move(p));
        }
        const double offered = tti_;
        report_.offered_bits[0] += cfg_.urllc_load_bps * cfg_.n_gnbs * offered;
        report_.offered_bits[1] += cfg_.embb_load_bps * cfg_.n_gnbs * offered;

        phase(t, Phase::Clustering);
        for (int g = 0; g < G_; ++g) maybe_cluster(g, t);

        phase(t, Phase::Channel);
        update_channel();

        phase(t, Phase::Scheduling);
        schedule(t);

        phase(t, Phase::Transmission);
        transmit(t);

        phase(t, Phase::Metrics);
        record(t);

        phase(t, Phase::Training);
        train(t);
    }

    void maybe_cluster(int g, std::int64_t t) {
        auto &gn = gnb_[g];
        int trigger = -1;
        double trigger_db = 0.0;
        if (!gn.beams.empty()) {
            if (t - gn.clustered_at < cfg_.clustering.recluster_window_ttis) return;
            std::vector<double> means;
            for (const auto &w : gn.windows) means.push_back(w.mean());
            if (!should_recluster(means, cfg_.clustering.recluster_threshold_db)) return;
            trigger = static_cast<int>(std::min_element(means.begin(), means.end()) - means.begin());
            trigger_db = means[trigger];
        }

        std::vector<Position> pts;
        for (int id : gn.users) pts.push_back(users_[id].position);
        ClusterAssignment assignment;
        if (cfg_.scheduler == SchedulerKind::Dqld) {
            assignment = dbscan(pts, cfg_.clustering.eps_m, cfg_.clustering.min_pts);
        } else {
            const int k = std::min<int>(cfg_.clusters_per_gnb, static_cast<int>(pts.size()));
            assignment = kmeans(pts, k, cfg_.clustering.kmeans_max_iters, gn.cluster_rng).assignment;
        }
        auto beams = form_beams(assignment, gn.users, pts, gnbs_[g]);

        ClusterEvent ev{t, g, trigger, trigger_db, static_cast<int>(gn.beams.size()), static_cast<int>(beams.size()), {}};
        for (const auto &b : beams) ev.centroids.push_back(b.centroid);
        report_.cluster_events.push_back(std::move(ev));

        if (cfg_.scheduler == SchedulerKind::Dqld) {
            std::vector<DqlAgent> agents;
            for (const auto &b : beams) {
                if (gn.agents.empty()) {
                    agents.emplace_back(cfg_.agent, static_cast<int>(gn.users.size()), K_, gn.agent_rng);
                    continue;
                }
                std::size_t nearest = 0;
                for (std::size_t i = 1; i < gn.beams.size(); ++i)
                    if (angular_gap(gn.beams[i].boresight, b.boresight) <
                        angular_gap(gn.beams[nearest].boresight, b.boresight))
                        nearest = i;
                agents.push_back(gn.agents[nearest]);
            }
            gn.agents = std::move(agents);
        }

        gn.beams = std::move(beams);
        gn.windows.assign(gn.beams.size(), SinrWindow(cfg_.clustering.recluster_window_ttis));
        gn.active_prev.assign(gn.beams.size(), std::vector<char>(static_cast<std::size_t>(K_), 0));
        gn.rbg_power_w = cfg_.max_tx_power_w() / static_cast<double>(gn.beams.size()) / K_;
        gn.clustered_at = t;
        for (std::size_t b = 0; b < gn.beams.size(); ++b)
            for (int id : gn.beams[b].members) urt_[id].beam = static_cast<int>(b);
    }

    void update_channel() {
        array_.assign(static_cast<std::size_t>(G_), {});
        for (int g = 0; g < G_; ++g) {
            const auto &gnb = gnbs_[g];
            auto &per_beam = array_[g];
            per_beam.assign(gnb_[g].beams.size(), std::vector<double>(static_cast<std::size_t>(U_), 0.0));
            for (int u = 0; u < U_; ++u) {
                const double d = distance(users_[u].position, gnb.position);
                const double theta = d > 0.0 ? aod(gnb, users_[u].position) : 0.0;
                large_[ug(u, g)] = large_scale_gain(d, chan_);
                for (std::size_t b = 0; b < gnb_[g].beams.size(); ++b)
                    per_beam[b][u] = array_gain(theta, gnb_[g].beams[b].weights, gnb.spacing_m, gnb.wavelength_m);
                for (int k = 0; k < K_; ++k) fade_[ugk(u, g, k)] = std::norm(draw_path_gain(chan_.gain_variance, channel_rng_));
            }
        }
        // Measured SINR sees the interference pattern of the previous TTI.
        auto prev = [this](int g, int b, int k) { return gnb_[g].active_prev[b][k] != 0; };
        measured_.assign(static_cast<std::size_t>(U_) * K_, 0.0);
        for (int u = 0; u < U_; ++u) {
            const int c = class_index(users_[u].qci);
            for (int k = 0; k < K_; ++k) {
                const double s = sinr_of(u, k, prev);
                measured_[uk(u, k)] = s;
                const int q = sinr_to_cqi(s);
                cqi_[uk(u, k)] = q;
                mcs_[uk(u, k)] = adapt_table_[c][q];
                tbs_[uk(u, k)] = transport_block_bits(grid_.rbg_hz, tti_, adapt_table_[c][q].spectral_efficiency);
            }
        }
        for (int g = 0; g < G_; ++g) {
            auto &gn = gnb_[g];
            for (std::size_t b = 0; b < gn.beams.size(); ++b) {
                double sum_db = 0.0;
                for (int id : gn.beams[b].members) {
                    double lin = 0.0;
                    for (int k = 0; k < K_; ++k) lin += measured_[uk(id, k)];
                    sum_db += to_db(std::max(lin / K_, 1e-30));
                }
                if (!gn.beams[b].members.empty()) gn.windows[b].push(sum_db / gn.beams[b].members.size());
            }
        }
    }

    // Chooses the user's best free RBGs until the packets fit.
    bool place(Block &blk, const std::vector<bool> &taken) {
        std::vector<int> order;
        for (int k = 0; k < K_; ++k)
            if (!taken[k]) order.push_back(k);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return tbs_[uk(blk.user, a)] > tbs_[uk(blk.user, b)]; });
        std::vector<int> sizes;
        for (const auto &p : blk.packets) sizes.push_back(p.size_bits);
        std::vector<int> caps;
        for (int k : order) {
            blk.rbgs.push_back(k);
            caps.push_back(tbs_[uk(blk.user, k)]);
            auto m = map_packets(caps, sizes);
            if (m.packets.size() == sizes.size()) {
                blk.mapping = std::move(m);
                return true;
            }
        }
        blk.rbgs.clear();
        return false;
    }

    void schedule(std::int64_t t) {
        blocks_.clear();
        decisions_.clear();
        alloc_.assign(static_cast<std::size_t>(G_), {});
        for (int g = 0; g < G_; ++g) {
            auto &gn = gnb_[g];
            alloc_[g].assign(gn.beams.size(), Allocation(K_));
            std::vector<std::vector<bool>> blocked(gn.beams.size(), std::vector<bool>(static_cast<std::size_t>(K_), false));

            // HARQ feedback and retransmissions first.
            for (int id : gn.users) {
                auto fb = urt_[id].harq.collect(t);
                for (auto &p : fb.lost) lose(p, t);
                for (auto &r : fb.retransmissions) {
                    Block blk{id, urt_[id].beam, r.process, 0, {}, std::move(r.packets), {}};
                    for (auto &p : blk.packets) {
                        check("harq_feedback_timing", t - *p.first_tx_tti >= cfg_.harq_rtt_ttis,
                              fmt::format("retx of packet {} at tti {}", p.id, t));
                        ++p.retx_count;
                        blk.retx = std::max(blk.retx, p.retx_count);
                    }
                    check("harq_retx_bound", blk.retx <= cfg_.harq_max_retx);
                    if (!place(blk, blocked[blk.beam])) {
                        urt_[id].harq.release(blk.process);
                        for (auto &p : blk.packets) lose(p, t);
                        continue;
                    }
                    for (std::size_t i = 0; i < blk.rbgs.size(); ++i) {
                        const int k = blk.rbgs[i];
                        if (blk.mapping.payload_bits[i] == 0) continue;
                        blocked[blk.beam][k] = true;
                        alloc_[g][blk.beam].assign(k, id);
                    }
                    blocks_.push_back(std::move(blk));
                }
            }

            for (std::size_t b = 0; b < gn.beams.size(); ++b) {
                const auto &beam = gn.beams[b];
                std::vector<SchedUser> su;
                for (int id : beam.members) {
                    SchedUser s;
                    s.user_id = id;
                    s.action_index = urt_[id].local;
                    s.cls = users_[id].qci;
                    const bool has_process = urt_[id].harq.free_process().has_value();
                    s.pending_bits = has_process ? urt_[id].queue.queued_bits() : 0;
                    s.hol_delay_s = urt_[id].queue.head_of_line_delay(t, tti_);
                    s.cqi.resize(K_);
                    s.tbs_bits.resize(K_);
                    s.avg_rate_bps.resize(K_);
                    for (int k = 0; k < K_; ++k) {
                        s.cqi[k] = cqi_[uk(id, k)];
                        s.tbs_bits[k] = tbs_[uk(id, k)];
                        if (cfg_.scheduler == SchedulerKind::Kppf) {
                            gn.pf.seed_if_unset(id, k, s.tbs_bits[k] / tti_);
                            s.avg_rate_bps[k] = gn.pf.get(id, k);
                        }
                    }
                    su.push_back(std::move(s));
                }

                Allocation fresh(K_);
                if (cfg_.scheduler == SchedulerKind::Kppf) {
                    fresh = kppf_schedule(su, K_, tti_, blocked[b]);
                } else {
                    std::vector<int> fallback(static_cast<std::size_t>(K_));
                    for (int k = 0; k < K_; ++k) {
                        double mean = 0.0;
                        for (int id : beam.members) mean += cqi_[uk(id, k)];
                        fallback[k] = static_cast<int>(std::lround(mean / std::max<std::size_t>(beam.members.size(), 1)));
                        fallback[k] = std::clamp(fallback[k], kMinCqi, kMaxCqi);
                    }
                    auto res = dqld_schedule(su, gn.agents[b], K_, blocked[b], fallback, gn.agent_rng);
                    fresh = std::move(res.allocation);
                    for (auto &d : res.decisions) {
                        const auto it = std::find_if(su.begin(), su.end(), [&](const SchedUser &x) { return x.user_id == d.user_id; });
                        check("action_legality", it != su.end() && it->pending_bits > 0,
                              fmt::format("tti {} rbg {} user {}", t, d.rbg, d.user_id));
                        decisions_.push_back(PendingDecision{g, static_cast<int>(b), std::move(d),
                                                             it != su.end() ? it->hol_delay_s.value_or(0.0) : 0.0});
                    }
                }

                bool exclusive = true;
                for (int k = 0; k < K_; ++k) {
                    if (!fresh.taken(k)) continue;
                    if (alloc_[g][b].taken(k)) {
                        exclusive = false;
                        continue;
                    }
                    alloc_[g][b].assign(k, fresh.user(k));
                }
                check("rbg_exclusivity", exclusive && alloc_[g][b].consistent_with(beam.members),
                      fmt::format("tti {} gnb {} beam {}", t, g, b));

                // New-data blocks.
                for (int id : beam.members) {
                    auto rbgs = fresh.rbgs_of(id);
                    if (rbgs.empty()) continue;
                    auto process = urt_[id].harq.free_process();
                    if (!process) continue;
                    std::stable_sort(rbgs.begin(), rbgs.end(),
                                     [&](int a, int c) { return tbs_[uk(id, a)] > tbs_[uk(id, c)]; });
                    Block blk{id, static_cast<int>(b), *process, 0, rbgs, {}, {}};
                    std::vector<int> caps;
                    for (int k : rbgs) caps.push_back(tbs_[uk(id, k)]);
                    std::vector<int> sizes;
                    auto &q = urt_[id].queue;
                    std::int64_t cap_total = std::accumulate(caps.begin(), caps.end(), std::int64_t{0});
                    for (std::size_t i = 0; i < q.size() && cap_total >= q.at(i).size_bits; ++i) {
                        sizes.push_back(q.at(i).size_bits);
                        cap_total -= q.at(i).size_bits;
                    }
                    blk.mapping = map_packets(caps, sizes);
                    for (std::size_t i = 0; i < blk.mapping.packets.size(); ++i) {
                        Packet p = q.pop_front();
                        p.first_tx_tti = t;
                        blk.packets.push_back(std::move(p));
                    }
                    if (blk.packets.empty()) continue;
                    report_.packets_sent[class_index(users_[id].qci)] += static_cast<std::int64_t>(blk.packets.size());
                    blocks_.push_back(std::move(blk));
                }
            }
        }
    }

    void transmit(std::int64_t t) {
        // Links carrying payload this TTI.
        tx_.assign(static_cast<std::size_t>(G_), {});
        for (int g = 0; g < G_; ++g)
            tx_[g].assign(gnb_[g].beams.size(), std::vector<char>(static_cast<std::size_t>(K_), 0));
        for (const auto &blk : blocks_) {
            const int g = urt_[blk.user].gnb;
            for (std::size_t i = 0; i < blk.rbgs.size(); ++i)
                if (blk.mapping.payload_bits[i] > 0) tx_[g][blk.beam][blk.rbgs[i]] = 1;
        }
        auto now = [this](int g, int b, int k) { return tx_[g][b][k] != 0; };

        links_.clear();
        for (auto &blk : blocks_) {
            const int u = blk.user;
            const int g = urt_[u].gnb;
            const int c = class_index(users_[u].qci);
            std::vector<char> ack(blk.rbgs.size(), 1);
            for (std::size_t i = 0; i < blk.rbgs.size(); ++i) {
                const int k = blk.rbgs[i];
                const auto &la = mcs_[uk(u, k)];
                if (blk.mapping.payload_bits[i] == 0) {
                    trace(t, g, blk.beam, k, u, -1);
                    continue;
                }
                const double s = sinr_of(u, k, now);
                const double bler = mcs_bler(mcs_table()[la.mcs - 1], to_db(std::max(s, 1e-30)));
                ack[i] = draw_ack(bler, mac_rng_) ? 1 : 0;
                links_.push_back(ScheduledLink{blk.beam, u, users_[u].qci, k, grid_.rbg_hz, s});
                report_.shannon_bits[c] += grid_.rbg_hz * tti_ * std::log2(1.0 + s);
                if (cfg_.scheduler == SchedulerKind::Kppf && ack[i])
                    served_[{u, k}] += blk.mapping.payload_bits[i];
                trace(t, g, blk.beam, k, u, ack[i]);
            }
            std::vector<Packet> failed;
            for (std::size_t i = 0; i < blk.mapping.packets.size(); ++i) {
                const auto &m = blk.mapping.packets[i];
                bool ok = true;
                for (int l = m.first_link; l <= m.last_link; ++l) ok = ok && ack[l];
                Packet &p = blk.packets[m.packet];
                if (ok) {
                    deliver(p, blk.beam, t);
                } else {
                    failed.push_back(std::move(p));
                }
            }
            urt_[u].harq.send(blk.process, t, std::move(failed), blk.retx);
        }
        for (int g = 0; g < G_; ++g)
            for (std::size_t b = 0; b < gnb_[g].beams.size(); ++b) gnb_[g].active_prev[b] = tx_[g][b];

        // Experiences for every agent decision, from the realized SINR of the grant.
        double reward_sum = 0.0;
        for (auto &pd : decisions_) {
            const int u = pd.decision.user_id;
            const int k = pd.decision.rbg;
            const double s = sinr_of(u, k, now);
            const double r = reward(users_[u].qci, s, sinr_qos_, pd.hol_delay_s, cfg_.agent.d_qos_s, tti_);
            check("reward_range", r > 0.0 && r < 1.0, fmt::format("reward {}", r));
            auto &agent = gnb_[pd.gnb].agents[pd.beam];
            const auto next = agent.observe(k, sinr_to_cqi(s));
            agent.remember(Experience{std::move(pd.decision.state_seq), pd.decision.action, r, next});
            check("replay_capacity", static_cast<int>(agent.replay().size()) <= cfg_.agent.replay_capacity);
            reward_sum += r;
            ++report_.experiences;
        }
        if (!decisions_.empty()) report_.reward_trace.push_back(reward_sum / decisions_.size());
        report_.rbg_grants += static_cast<std::int64_t>(decisions_.size());
    }

    void record(std::int64_t) {
        if (cfg_.scheduler != SchedulerKind::Kppf) return;
        for (int g = 0; g < G_; ++g) {
            for (int id : gnb_[g].users) {
                for (int k = 0; k < K_; ++k) {
                    const auto it = served_.find({id, k});
                    gnb_[g].pf.update(id, k, it == served_.end() ? 0.0 : it->second / tti_);
                }
            }
        }
        served_.clear();
    }

    void train(std::int64_t t) {
        if (cfg_.scheduler != SchedulerKind::Dqld) return;
        for (auto &gn : gnb_) {
            for (auto &agent : gn.agents) {
                const auto st = agent.maybe_train_and_sync(t, gn.agent_rng);
                report_.training_steps += st.trained;
                report_.target_syncs += st.synced;
                if (st.synced) check("target_sync_exact", agent.target() == agent.main());
                check("target_staleness", t - agent.last_sync_tti() <= cfg_.agent.copy_interval,
                      fmt::format("tti {} last sync {}", t, agent.last_sync_tti()));
            }
        }
    }

    void deliver(Packet &p, int beam, std::int64_t t) {
        p.delivered_tti = t;
        const int c = class_index(users_[p.user_id].qci);
        LatencyRecord rec;
        try {
            rec = record_latency(p, tti_, cfg_.harq_rtt_ttis);
            const double expected = static_cast<double>(t - p.arrival_tti + 1) * tti_;
            check("latency_decomposition", std::abs(rec.total - expected) <= 1e-12 && rec.d_q >= 0.0,
                  fmt::format("packet {} latency {} expected {}", p.id, rec.total, expected));
        } catch (const std::logic_error &e) {
            check("latency_decomposition", false, e.what());
            return;
        }
        report_.latency_s[c].push_back(rec.total);
        ++report_.packets_delivered[c];
        report_.goodput_bits[c] += p.size_bits;
        report_.goodput_bits_by_beam[{urt_[p.user_id].gnb, beam}][c] += p.size_bits;
        if (opts_.keep_packets)
            report_.packets.push_back(PacketRecord{p.id, p.user_id, users_[p.user_id].qci, p.arrival_tti,
                                                   PacketRecord::Fate::Delivered, t, rec.total});
    }

    void lose(const Packet &p, std::int64_t) {
        const int c = class_index(users_[p.user_id].qci);
        ++report_.packets_lost[c];
        if (opts_.keep_packets)
            report_.packets.push_back(PacketRecord{p.id, p.user_id, users_[p.user_id].qci, p.arrival_tti,
                                                   PacketRecord::Fate::Lost, -1, 0.0});
    }

    void trace(std::int64_t t, int g, int b, int k, int u, int ack) {
        if (!opts_.mac_trace) return;
        opts_.mac_trace(MacTraceRow{t, g, b, k, u, cqi_[uk(u, k)], mcs_[uk(u, k)].mcs, ack});
    }

    void finish() {
        for (int u = 0; u < U_; ++u) {
            const int c = class_index(users_[u].qci);
            auto pending = [&](const Packet &p) {
                ++report_.packets_pending[c];
                if (opts_.keep_packets)
                    report_.packets.push_back(PacketRecord{p.id, u, users_[u].qci, p.arrival_tti,
                                                           PacketRecord::Fate::Pending, -1, 0.0});
            };
            auto &q = urt_[u].queue;
            while (!q.empty()) pending(q.pop_front());
            for (const auto &proc : urt_[u].harq.processes())
                for (const auto &p : proc.failed) pending(p);
        }
        for (int c = 0; c < 2; ++c)
            check("packet_conservation",
                  report_.packets_generated[c] ==
                      report_.packets_delivered[c] + report_.packets_lost[c] + report_.packets_pending[c]);
        std::sort(report_.packets.begin(), report_.packets.end(),
                  [](const PacketRecord &a, const PacketRecord &b) { return a.packet_id < b.packet_id; });

        if (opts_.agent_dump_dir && cfg_.scheduler == SchedulerKind::Dqld) dump_agents(*opts_.agent_dump_dir);
    }

    void dump_agents(const std::filesystem::path &dir) const {
        std::filesystem::create_directories(dir);
        for (int g = 0; g < G_; ++g) {
            for (std::size_t b = 0; b < gnb_[g].agents.size(); ++b) {
                const auto &a = gnb_[g].agents[b];
                std::ofstream out(dir / fmt::format("agent_g{}_b{}.txt", g, b));
                out << "# hidden " << a.main().hidden() << " actions " << a.main().n_actions() << '\n'
                    << "# order: w_x, w_h, b (gates i,f,o,g), w_y, b_y; row-major; main then target\n";
                for (double w : a.main().flatten()) out << format_number(w) << '\n';
                for (double w : a.target().flatten()) out << format_number(w) << '\n';
                out << "# replay: state_seq;action;reward;next_seq (oldest first)\n";
                for (const auto &e : a.replay().contents()) {
                    auto seq = [](const std::vector<int> &s) {
                        std::string o;
                        for (std::size_t i = 0; i < s.size(); ++i) o += (i ? " " : "") + std::to_string(s[i]);
                        return o;
                    };
                    out << "# " << seq(e.state_seq) << ';' << e.action << ';' << format_number(e.reward) << ';'
                        << seq(e.next_seq) << '\n';
                }
            }
        }
    }

    struct PendingDecision {
        int gnb = 0;
        int beam = 0;
        DqldDecision decision;
        double hol_delay_s = 0.0;
    };

    SimConfig cfg_;
    RunOptions opts_;
    RbgGrid grid_;
    std::vector<GnbState> gnbs_;
    Rng topo_rng_, mob_rng_, traffic_rng_, channel_rng_, mac_rng_;
    double tti_ = 0.0;
    double noise_ = 0.0;
    double sinr_qos_ = 1.0;
    ChannelParams chan_;
    int K_ = 0, G_ = 0, U_ = 0;

    std::vector<UserState> users_;
    std::vector<UserRt> urt_;
    std::vector<GnbRt> gnb_;
    std::int64_t next_packet_id_ = 0;

    std::array<std::array<LinkAdaptation, kMaxCqi + 1>, 2> adapt_table_{};
    std::vector<double> large_;
    std::vector<double> fade_;
    std::vector<std::vector<std::vector<double>>> array_;  // [gnb][beam][user]
    std::vector<double> measured_;
    std::vector<int> cqi_;
    std::vector<LinkAdaptation> mcs_;
    std::vector<int> tbs_;

    std::vector<std::vector<Allocation>> alloc_;
    std::vector<Block> blocks_;
    std::vector<PendingDecision> decisions_;
    std::vector<std::vector<std::vector<char>>> tx_;
    std::vector<ScheduledLink> links_;
    std::map<std::pair<int, int>, double> served_;

    RunReport report_;
};

const char *class_name(ServiceClass c) { return c == ServiceClass::Urllc ? "urllc" : "embb"; }

} // namespace

RunReport run_simulation(const SimConfig &cfg, std::uint64_t seed, const RunOptions &opts) {
    validate(cfg);
    return Simulation(cfg, seed, opts).run();
}

void write_run_csv(const RunReport &r, const std::filesystem::path &path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "class,arrival_tti,delivery_tti,latency_s\n";
    for (const auto &p : r.packets) {
        out << class_name(p.cls) << ',' << p.arrival_tti << ',';
        switch (p.fate) {
        case PacketRecord::Fate::Delivered: out << p.delivery_tti << ',' << format_number(p.latency_s); break;
        case PacketRecord::Fate::Lost: out << "LOST,"; break;
        case PacketRecord::Fate::Pending: out << "PENDING,"; break;
        }
        out << '\n';
    }
}

void write_events_log(const RunReport &r, std::ostream &out) {
    for (const auto &e : r.cluster_events) {
        out << "seed=" << r.seed << " tti=" << e.tti << " gnb=" << e.gnb << " trigger_beam=" << e.trigger_beam
            << " trigger_sinr_db=" << format_number(e.trigger_sinr_db) << " old_beams=" << e.old_beams
            << " new_beams=" << e.new_beams << " centroids=";
        for (std::size_t i = 0; i < e.centroids.size(); ++i)
            out << (i ? ";" : "") << format_number(e.centroids[i].x) << ':' << format_number(e.centroids[i].y);
        out << '\n';
    }
}

std::vector<std::pair<std::string, double>> run_metrics(const RunReport &r) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    const double per_gnb_seconds = r.sim_seconds * std::max(r.n_gnbs, 1);
    auto pct = [&](int c, double q) { return percentile(r.latency_s[c], q).value_or(nan); };
    auto ratio = [&](int c) { return r.offered_bits[c] > 0.0 ? r.goodput_bits[c] / r.offered_bits[c] : nan; };
    return {
        {"embb_rate", r.goodput_bits[1] / per_gnb_seconds},
        {"urllc_latency_p50", pct(0, 0.5)},
        {"urllc_latency_p999", pct(0, 0.999)},
        {"urllc_plr", plr(r.packets_sent[0], r.packets_lost[0]).value_or(nan)},
        {"urllc_rate", r.goodput_bits[0] / per_gnb_seconds},
        {"embb_plr", plr(r.packets_sent[1], r.packets_lost[1]).value_or(nan)},
        {"embb_latency_p999", pct(1, 0.999)},
        {"urllc_shannon_rate", r.shannon_bits[0] / per_gnb_seconds},
        {"embb_shannon_rate", r.shannon_bits[1] / per_gnb_seconds},
        {"urllc_delivery_ratio", ratio(0)},
        {"embb_delivery_ratio", ratio(1)},
    };
}

void dump_tables(const std::filesystem::path &dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "cqi_table.csv", std::ios::binary | std::ios::trunc);
        out << "cqi,sinr_lo_db,sinr_hi_db\n";
        for (int c = kMinCqi; c <= kMaxCqi; ++c) {
            const std::string lo = c == kMinCqi ? "-inf" : format_number(cqi_nominal_sinr_db(c));
            const std::string hi = c == kMaxCqi ? "inf" : format_number(cqi_nominal_sinr_db(c + 1));
            out << c << ',' << lo << ',' << hi << '\n';
        }
    }
    {
        std::ofstream out(dir / "mcs_table.csv", std::ios::binary | std::ios::trunc);
        out << "mcs,efficiency,threshold_db\n";
        for (const auto &m : mcs_table())
            out << m.index << ',' << format_number(m.efficiency) << ',' << format_number(m.threshold_db) << '\n';
    }
    {
        std::ofstream out(dir / "link_adaptation.csv", std::ios::binary | std::ios::trunc);
        out << "cqi,class,bler_target,mcs,efficiency,predicted_bler\n";
        for (int c = kMinCqi; c <= kMaxCqi; ++c) {
            for (auto [name, target] : {std::pair{"urllc", 0.01}, std::pair{"embb", 0.1}}) {
                const auto la = cqi_to_mcs(c, target);
                out << c << ',' << name << ',' << format_number(target) << ',' << la.mcs << ','
                    << format_number(la.spectral_efficiency) << ',' << format_number(la.predicted_bler) << '\n';
            }
        }
    }
}

} // namespace dqld
