#include "dqld/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <iterator>
#include <cmath>
#include <exception>
#include <fmt/format.h>
#include <fstream>
#include <mutex>
#include <thread>

namespace dqld {

namespace {

struct Job {
    std::size_t point = 0;
    std::size_t run = 0;
    SimConfig cfg;
    std::uint64_t seed = 0;
};

std::string load_label(double bps) { return format_number(bps); }

} // namespace

CampaignResult run_campaign(const SimConfig &cfg, const CampaignSpec &spec,
                            const std::function<void(const RunReport &)> &progress) {
    if (spec.n_runs < 1) throw ConfigError("n_runs", "must be at least 1");
    std::vector<double> loads = spec.loads_bps;
    if (loads.empty()) loads.push_back(cfg.urllc_load_bps);

    CampaignResult out;
    std::vector<Job> jobs;
    for (auto sched : spec.schedulers) {
        for (double load : loads) {
            SimConfig c = cfg;
            c.scheduler = sched;
            if (!spec.loads_bps.empty()) {
                c.urllc_load_bps = load;
                c.embb_load_bps = load;
            }
            validate(c);
            const std::size_t point = out.points.size();
            out.points.push_back(CampaignPoint{to_string(sched), load, {}, {}, {}});
            out.runs.emplace_back(static_cast<std::size_t>(spec.n_runs));
            for (int r = 0; r < spec.n_runs; ++r)
                jobs.push_back(Job{point, static_cast<std::size_t>(r), c, spec.first_seed + static_cast<std::uint64_t>(r)});
        }
    }

    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::exception_ptr error;
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            try {
                auto rep = run_simulation(jobs[i].cfg, jobs[i].seed);
                std::lock_guard lock(mu);
                if (progress) progress(rep);
                out.runs[jobs[i].point][jobs[i].run] = std::move(rep);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!error) error = std::current_exception();
                next = jobs.size();
            }
        }
    };
    const int n_threads = std::max(1, spec.threads);
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto &t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);

    for (std::size_t p = 0; p < out.points.size(); ++p) {
        auto &pt = out.points[p];
        for (const auto &rep : out.runs[p]) {
            for (const auto &[name, value] : run_metrics(rep)) {
                auto it = std::find_if(pt.metrics.begin(), pt.metrics.end(),
                                       [&](const auto &m) { return m.first == name; });
                if (it == pt.metrics.end()) {
                    pt.metrics.emplace_back(name, std::vector<double>{});
                    it = std::prev(pt.metrics.end());
                }
                it->second.push_back(value);
            }
            pt.urllc_latency.insert(pt.urllc_latency.end(), rep.latency_s[0].begin(), rep.latency_s[0].end());
            pt.embb_latency.insert(pt.embb_latency.end(), rep.latency_s[1].begin(), rep.latency_s[1].end());
        }
    }
    return out;
}

void write_campaign(const CampaignResult &result, double ci_level, const std::filesystem::path &dir) {
    std::filesystem::create_directories(dir / "runs");
    export_csv(result.points, ci_level, dir);
    std::ofstream events(dir / "events.log", std::ios::binary | std::ios::trunc);
    if (!events) throw std::runtime_error("cannot write " + (dir / "events.log").string());
    const bool single = result.points.size() == 1;
    for (std::size_t p = 0; p < result.points.size(); ++p) {
        const auto &pt = result.points[p];
        for (const auto &rep : result.runs[p]) {
            const auto name = single ? fmt::format("{}.csv", rep.seed)
                                     : fmt::format("{}_{}_{}.csv", pt.scheduler, load_label(pt.load_bps), rep.seed);
            write_run_csv(rep, dir / "runs" / name);
            if (!single) events << "# " << pt.scheduler << " load=" << load_label(pt.load_bps) << '\n';
            write_events_log(rep, events);
        }
    }
}

} // namespace dqld
