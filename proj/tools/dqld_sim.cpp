#include "dqld/campaign.hpp"
#include "dqld/config.hpp"
#include "dqld/simulation.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace dqld;

int main(int argc, char **argv) {
    CLI::App app{"Multi-cell mmWave URLLC/eMBB scheduling simulator"};
    std::string config_path;
    std::vector<std::string> schedulers;
    std::uint64_t seed = 0;
    int runs = 0;
    std::vector<double> loads;
    std::string out_dir = "out";
    int threads = 1;
    std::string dump_topology, dump_tables_dir, trace_mac, dump_agent;

    app.add_option("--config", config_path, "config file (key = value lines)")->check(CLI::ExistingFile);
    app.add_option("--scheduler", schedulers, "dqld or kppf; repeat for both")
        ->check(CLI::IsMember({"dqld", "kppf"}));
    app.add_option("--seed", seed, "first seed (default: config seed)");
    app.add_option("--runs", runs, "independent runs (default: config n_runs)");
    app.add_option("--load", loads, "offered load per class per gNB in bit/s; repeat for a sweep");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--dump-topology", dump_topology, "write user positions of the first run every 10 ms to this CSV");
    app.add_option("--dump-tables", dump_tables_dir, "write CQI/MCS tables to this directory and exit");
    app.add_option("--trace-mac", trace_mac, "write the per-link MAC trace of the first run to this CSV");
    app.add_option("--dump-agent", dump_agent, "write agent weights and replay of the first run to this directory");
    CLI11_PARSE(app, argc, argv);

    if (!dump_tables_dir.empty()) {
        dump_tables(dump_tables_dir);
        return 0;
    }

    SimConfig cfg;
    try {
        if (!config_path.empty()) cfg = load_config(config_path);
        if (!schedulers.empty()) cfg.scheduler = parse_scheduler(schedulers.front());
        if (app.count("--seed")) cfg.seed = seed;
        if (app.count("--runs")) cfg.n_runs = runs;
        if (loads.size() == 1) cfg.urllc_load_bps = cfg.embb_load_bps = loads.front();
        validate(cfg);
    } catch (const ConfigError &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }

    CampaignSpec spec;
    spec.schedulers.clear();
    for (const auto &s : schedulers) spec.schedulers.push_back(parse_scheduler(s));
    if (spec.schedulers.empty()) spec.schedulers.push_back(cfg.scheduler);
    if (loads.size() > 1) spec.loads_bps = loads;
    spec.first_seed = cfg.seed;
    spec.n_runs = cfg.n_runs;
    spec.threads = threads;

    try {
        if (!dump_topology.empty() || !trace_mac.empty() || !dump_agent.empty()) {
            RunOptions opts;
            std::ofstream topo, mac;
            auto open_csv = [](std::ofstream &f, const std::filesystem::path &path) {
                if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
                f.open(path);
                if (!f) throw std::runtime_error("cannot write " + path.string());
            };
            if (!dump_topology.empty()) {
                open_csv(topo, dump_topology);
                topo << "tti,user,gnb,class,x,y\n";
                const auto stride = std::max<std::int64_t>(1, std::llround(0.01 / cfg.tti_seconds()));
                opts.topology_hook = [&, stride](std::int64_t t, const std::vector<UserState> &users) {
                    if (t % stride != 0) return;
                    for (const auto &u : users)
                        topo << t << ',' << u.id << ',' << u.gnb_id << ',' << static_cast<int>(u.qci) << ','
                             << format_number(u.position.x) << ',' << format_number(u.position.y) << '\n';
                };
            }
            if (!trace_mac.empty()) {
                open_csv(mac, trace_mac);
                mac << "tti,gnb,beam,rbg,user,cqi,mcs,ack\n";
                opts.mac_trace = [&](const MacTraceRow &r) {
                    mac << r.tti << ',' << r.gnb << ',' << r.beam << ',' << r.rbg << ',' << r.user << ',' << r.cqi
                        << ',' << r.mcs << ',' << r.ack << '\n';
                };
            }
            if (!dump_agent.empty()) opts.agent_dump_dir = dump_agent;
            SimConfig first = cfg;
            first.scheduler = spec.schedulers.front();
            run_simulation(first, cfg.seed, opts);
        }

        auto result = run_campaign(cfg, spec, [](const RunReport &r) {
            std::cerr << fmt::format("{} seed {} done\n", to_string(r.scheduler), r.seed);
        });
        write_campaign(result, cfg.ci_level, out_dir);
        for (const auto &row : campaign_rows(result.points, cfg.ci_level))
            std::cout << fmt::format("{},{},{},{},{},{}\n", row.scheduler, format_number(row.load_bps), row.metric,
                                     format_number(row.ci.mean), format_number(row.ci.lo), format_number(row.ci.hi));
    } catch (const ConfigError &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
