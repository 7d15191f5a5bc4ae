// Acceptance checks, one line per criterion. Tolerances are pinned below.

#include "dqld/agent.hpp"
#include "dqld/campaign.hpp"
#include "dqld/channel.hpp"
#include "dqld/clustering.hpp"
#include "dqld/lstm.hpp"
#include "dqld/metrics.hpp"
#include "dqld/simulation.hpp"

#include "../oracles.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

using namespace dqld;

namespace {

constexpr double kSinrRelTol = 1e-12;
constexpr double kGradRelTol = 1e-4;
constexpr double kGradFloor = 1e-7;        // relative error denominator floor
constexpr double kRewardFixedPoint = 0.73106;
constexpr double kRewardTol = 1e-5;
constexpr double kMonotoneTol = 0.005;     // delivery-ratio slack for "non-increasing"
constexpr int kSeedQuorum = 8;             // of 10 seeds

using Clock = std::chrono::steady_clock;

struct Outcome {
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
    double budget_s = 0.0;
};

std::vector<Outcome> outcomes;

template <typename F>
void criterion(const std::string &name, double budget_s, F &&body) {
    Outcome o{name};
    o.budget_s = budget_s;
    const auto t0 = Clock::now();
    try {
        o.pass = body(o.detail);
    } catch (const std::exception &e) {
        o.pass = false;
        o.detail = std::string("exception: ") + e.what();
    }
    o.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    if (budget_s > 0 && o.seconds > budget_s) {
        o.pass = false;
        o.detail += fmt::format(" [over time budget {:.0f} s]", budget_s);
    }
    std::cout << fmt::format("{} {} ({:.1f} s): {}", o.pass ? "PASS" : "FAIL", o.name, o.seconds, o.detail)
              << std::endl;
    outcomes.push_back(o);
}

bool oracle_equivalences(std::string &detail) {
    Rng rng(20240601);
    int dbscan_ok = 0;
    std::uniform_int_distribution<int> nd(0, 15), md(1, 6);
    std::uniform_real_distribution<double> ed(5, 40), cd(0, 120);
    for (int t = 0; t < 200; ++t) {
        std::vector<Position> p(nd(rng));
        for (auto &q : p) q = {cd(rng), cd(rng)};
        const double eps = ed(rng);
        const int m = md(rng);
        const auto a = dbscan(p, eps, m);
        const auto o = oracle::dbscan(p, eps, m);
        oracle::Partition got;
        std::set<int> noise;
        for (const auto &c : a.clusters) got.insert(std::set<int>(c.members.begin(), c.members.end()));
        for (std::size_t i = 0; i < a.labels.size(); ++i)
            if (a.labels[i] == kNoise) noise.insert(static_cast<int>(i));
        dbscan_ok += got == o.clusters && noise == o.noise;
    }

    int sinr_ok = 0, rate_ok = 0;
    double worst_sinr = 0.0, worst_rate = 0.0;
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> pw(0.01, 2.0), sd(0.0, 100.0);
    std::uniform_int_distribution<int> nn(1, 4), ni(0, 3), nb(1, 3), nu(1, 4), nk(1, 6), coin(0, 1);
    for (int t = 0; t < 100; ++t) {
        const int n = nn(rng);
        auto vec = [&] {
            CVector v(n);
            for (auto &e : v) e = {z(rng), z(rng)};
            return v;
        };
        LinkTerm s{pw(rng), vec(), vec()};
        std::vector<LinkTerm> intf(ni(rng));
        std::vector<oracle::ScalarLink> oi;
        for (auto &l : intf) {
            l = {pw(rng), vec(), vec()};
            oi.push_back({l.power_w, l.h, l.w});
        }
        const double noise = pw(rng) * 1e-2;
        const double expect = oracle::sinr({s.power_w, s.h, s.w}, oi, noise);
        const double rel = std::abs(sinr(s, intf, noise) - expect) / expect;
        worst_sinr = std::max(worst_sinr, rel);
        sinr_ok += rel <= kSinrRelTol;

        const int B = nb(rng), U = nu(rng), K = nk(rng);
        std::vector<std::vector<std::vector<oracle::RateCell>>> grid(B);
        std::vector<ScheduledLink> links;
        for (int b = 0; b < B; ++b) {
            grid[b].resize(U);
            std::vector<int> owner(K, -1);
            for (int k = 0; k < K; ++k)
                if (coin(rng)) owner[k] = static_cast<int>(rng() % U);
            for (int u = 0; u < U; ++u)
                for (int k = 0; k < K; ++k) {
                    const double sv = sd(rng);
                    const int cls = u % 2 + 1;
                    grid[b][u].push_back({owner[k] == u, cls, 720e3, sv});
                    if (owner[k] == u)
                        links.push_back({b, u, cls == 1 ? ServiceClass::Urllc : ServiceClass::Embb, k, 720e3, sv});
                }
        }
        bool ok = true;
        for (int cls : {1, 2}) {
            const double e = oracle::sum_rate(grid, cls);
            const double g = sum_rate(links, cls == 1 ? ServiceClass::Urllc : ServiceClass::Embb);
            const double rel_r = e > 0 ? std::abs(g - e) / e : std::abs(g);
            worst_rate = std::max(worst_rate, rel_r);
            ok = ok && rel_r <= kSinrRelTol;
        }
        rate_ok += ok;
    }
    detail = fmt::format("dbscan {}/200 exact, sinr {}/100 (worst rel {:.2e}), sum rate {}/100 (worst rel {:.2e})",
                         dbscan_ok, sinr_ok, worst_sinr, rate_ok, worst_rate);
    return dbscan_ok == 200 && sinr_ok == 100 && rate_ok == 100;
}

bool gradient_check(std::string &detail) {
    Rng rng(777);
    std::uniform_real_distribution<double> u(0, 1);
    std::uniform_int_distribution<int> len(1, 8);
    int ok = 0;
    double worst = 0.0;
    for (int net = 0; net < 50; ++net) {
        const auto p = LstmParams::random(2, 4, rng);
        std::vector<FitSample> batch(4);
        for (auto &s : batch) {
            s.inputs.resize(len(rng));
            for (auto &v : s.inputs) v = u(rng);
            s.action = static_cast<int>(rng() % 4);
            s.label = u(rng);
        }
        const auto g = lstm_gradients(batch, p).flatten();
        const auto n = oracle::numeric_gradient(p, [&](const LstmParams &q) { return lstm_loss(batch, q); });
        double net_worst = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i)
            net_worst = std::max(net_worst, std::abs(g[i] - n[i]) / std::max({std::abs(g[i]), std::abs(n[i]), kGradFloor}));
        worst = std::max(worst, net_worst);
        ok += net_worst < kGradRelTol;
    }
    detail = fmt::format("{}/50 networks within {:.0e} relative (worst {:.2e})", ok, kGradRelTol, worst);
    return ok == 50;
}

bool invariant_suite(std::string &detail) {
    bool all = true;
    std::ostringstream out;
    for (auto s : {SchedulerKind::Dqld, SchedulerKind::Kppf}) {
        SimConfig cfg;
        cfg.scheduler = s;
        const auto r = run_simulation(cfg, 1);
        std::int64_t checks = 0, bad = 0;
        std::string first;
        for (const auto &[name, inv] : r.invariants) {
            checks += inv.checks;
            bad += inv.violations;
            if (inv.violations && first.empty()) first = name + ": " + inv.first_violation;
        }
        const std::vector<std::string> required =
            s == SchedulerKind::Dqld
                ? std::vector<std::string>{"rbg_exclusivity", "harq_feedback_timing", "harq_retx_bound",
                                           "latency_decomposition", "reward_range", "replay_capacity",
                                           "target_staleness", "target_sync_exact", "action_legality",
                                           "packet_conservation"}
                : std::vector<std::string>{"rbg_exclusivity", "harq_feedback_timing", "harq_retx_bound",
                                           "latency_decomposition", "packet_conservation"};
        int missing = 0;
        for (const auto &n : required) missing += r.invariants.count(n) == 0 || r.invariants.at(n).checks == 0;
        out << fmt::format("{}: {} TTIs, {} checks, {} violations{}; ", to_string(s), r.ttis_executed, checks, bad,
                           first.empty() ? "" : " (" + first + ")");
        all = all && bad == 0 && missing == 0 && r.ttis_executed == 10500;
    }
    // Reward monotonicity in SINR and queueing delay over a dense grid.
    const double qos = std::pow(10.0, 1.5), tti = SimConfig{}.tti_seconds();
    bool mono = true;
    for (auto cls : {ServiceClass::Urllc, ServiceClass::Embb}) {
        for (double d = 0; d <= 5e-3; d += 2.5e-4) {
            double prev = 0.0;
            for (double g = 0; g <= 2000; g += 0.5) {
                const double r = reward(cls, g, qos, d, 1e-3, tti);
                mono = mono && r >= prev && r > 0 && r < 1;
                prev = r;
            }
        }
        for (double g = 0; g <= 2000; g += 25) {
            double prev = 1.0;
            for (double d = 0; d <= 5e-3; d += 1e-5) {
                const double r = reward(cls, g, qos, d, 1e-3, tti);
                mono = mono && r <= prev;
                prev = r;
            }
        }
    }
    out << "reward monotone in SINR and D_q: " << (mono ? "yes" : "no");
    detail = out.str();
    return all && mono;
}

bool reward_fixed_points(std::string &detail) {
    const double qos = std::pow(10.0, 1.5), tti = SimConfig{}.tti_seconds();
    const double e = reward(ServiceClass::Embb, qos, qos, 0.0, 1e-3, tti);
    const double u = reward(ServiceClass::Urllc, qos, qos, 1e-3, 1e-3, tti);
    detail = fmt::format("eMBB {:.7f}, URLLC {:.7f}, target {} +- {:.0e}", e, u, kRewardFixedPoint, kRewardTol);
    return std::abs(e - kRewardFixedPoint) <= kRewardTol && std::abs(u - kRewardFixedPoint) <= kRewardTol;
}

double metric(const RunReport &r, const std::string &name) {
    for (const auto &[n, v] : run_metrics(r))
        if (n == name) return v;
    throw std::logic_error("unknown metric " + name);
}

void trend(int n_runs, const std::filesystem::path &out_dir) {
    const std::vector<double> loads{0.5e6, 1.0e6, 1.5e6, 2.0e6};
    CampaignSpec spec;
    spec.schedulers = {SchedulerKind::Dqld, SchedulerKind::Kppf};
    spec.loads_bps = loads;
    spec.first_seed = 1;
    spec.n_runs = n_runs;
    CampaignResult res;
    criterion("trend campaign completes", 1800, [&](std::string &d) {
        res = run_campaign(SimConfig{}, spec);
        if (!out_dir.empty()) write_campaign(res, 0.95, out_dir);
        d = fmt::format("{} runs", res.points.size() * n_runs);
        return true;
    });
    if (res.points.empty()) return;

    // point index: scheduler-major, then load
    auto runs = [&](SchedulerKind s, std::size_t load) -> const std::vector<RunReport> & {
        return res.runs[(s == SchedulerKind::Dqld ? 0 : 1) * loads.size() + load];
    };
    auto mean = [&](SchedulerKind s, std::size_t load, const std::string &m) {
        std::vector<double> v;
        for (const auto &r : runs(s, load)) v.push_back(metric(r, m));
        return t_interval(v, 0.95).mean;
    };

    criterion("trend (a) URLLC p999 latency DQLD <= KPPF per seed at loads >= 1 Mbps", 0, [&](std::string &d) {
        bool ok = true;
        for (std::size_t l = 1; l < loads.size(); ++l) {
            int wins = 0;
            for (int i = 0; i < n_runs; ++i)
                wins += metric(runs(SchedulerKind::Dqld, l)[i], "urllc_latency_p999") <=
                        metric(runs(SchedulerKind::Kppf, l)[i], "urllc_latency_p999");
            d += fmt::format("{} Mbps {}/{}; ", loads[l] / 1e6, wins, n_runs);
            ok = ok && wins * 10 >= kSeedQuorum * n_runs;
        }
        d += fmt::format("need >= {}/10", kSeedQuorum);
        return ok;
    });

    criterion("trend (b) URLLC PLR mean DQLD <= KPPF at 1.5 and 2 Mbps", 0, [&](std::string &d) {
        bool ok = true;
        for (std::size_t l : {std::size_t{2}, std::size_t{3}}) {
            const double a = mean(SchedulerKind::Dqld, l, "urllc_plr"), b = mean(SchedulerKind::Kppf, l, "urllc_plr");
            d += fmt::format("{} Mbps dqld {:.4f} kppf {:.4f}; ", loads[l] / 1e6, a, b);
            ok = ok && a <= b;
        }
        return ok;
    });

    criterion("trend (c) eMBB goodput non-increasing with load; KPPF degrades at >= 1 Mbps", 0, [&](std::string &d) {
        bool ok = true;
        for (auto s : {SchedulerKind::Dqld, SchedulerKind::Kppf}) {
            d += to_string(s) + " delivery ratio";
            double prev = INFINITY;
            for (std::size_t l = 0; l < loads.size(); ++l) {
                const double v = mean(s, l, "embb_delivery_ratio");
                d += fmt::format(" {:.4f}", v);
                ok = ok && v <= prev + kMonotoneTol;
                prev = v;
            }
            d += "; ";
        }
        const double base = mean(SchedulerKind::Kppf, 0, "embb_delivery_ratio");
        for (std::size_t l = 1; l < loads.size(); ++l) ok = ok && mean(SchedulerKind::Kppf, l, "embb_delivery_ratio") < base;
        d += fmt::format("slack {}", kMonotoneTol);
        return ok;
    });
}

bool determinism(std::string &detail) {
    const auto dir = std::filesystem::temp_directory_path() / "dqld_acceptance_determinism";
    std::filesystem::remove_all(dir);
    auto slurp = [](const std::filesystem::path &p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    bool ok = true;
    for (auto s : {SchedulerKind::Dqld, SchedulerKind::Kppf}) {
        SimConfig cfg;
        cfg.scheduler = s;
        const auto a = dir / (to_string(s) + "_a.csv"), b = dir / (to_string(s) + "_b.csv");
        write_run_csv(run_simulation(cfg, 42), a);
        write_run_csv(run_simulation(cfg, 42), b);
        const auto ta = slurp(a), tb = slurp(b);
        const bool same = !ta.empty() && ta == tb;
        detail += fmt::format("{}: {} bytes {}; ", to_string(s), ta.size(), same ? "identical" : "DIFFER");
        ok = ok && same;
    }
    return ok;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"acceptance checks"};
    int runs = 10;
    std::string out_dir;
    bool skip_trend = false;
    app.add_option("--runs", runs, "seeds in the trend campaign")->check(CLI::PositiveNumber);
    app.add_option("--campaign-out", out_dir, "also write the trend campaign outputs here");
    app.add_flag("--skip-trend", skip_trend, "skip the trend campaign");
    CLI11_PARSE(app, argc, argv);

    criterion("oracle equivalences (DBSCAN, SINR, sum rate)", 10, oracle_equivalences);
    criterion("gradient check (BPTT vs central differences)", 30, gradient_check);
    criterion("invariant suite (full 1.5 s runs, both schedulers)", 300, invariant_suite);
    criterion("reward fixed points", 0, reward_fixed_points);
    if (!skip_trend) trend(runs, out_dir);
    criterion("determinism (byte-identical run CSVs)", 0, determinism);

    int failed = 0;
    for (const auto &o : outcomes) failed += !o.pass;
    std::cout << fmt::format("{} of {} criteria passed", outcomes.size() - failed, outcomes.size()) << std::endl;
    return 0;
}
