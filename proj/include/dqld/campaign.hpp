#pragma once

#include "dqld/config.hpp"
#include "dqld/metrics.hpp"
#include "dqld/simulation.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

namespace dqld {

struct CampaignSpec {
    std::vector<SchedulerKind> schedulers{SchedulerKind::Dqld};
    std::vector<double> loads_bps;  // applied to both classes; empty keeps the config loads
    std::uint64_t first_seed = 1;
    int n_runs = 10;
    int threads = 1;
};

struct CampaignResult {
    std::vector<CampaignPoint> points;
    // Same order as points; inner index is the run.
    std::vector<std::vector<RunReport>> runs;
};

// Runs seeds first_seed .. first_seed + n_runs - 1 for every (scheduler, load).
// progress, when set, is called after each finished run.
CampaignResult run_campaign(const SimConfig &cfg, const CampaignSpec &spec,
                            const std::function<void(const RunReport &)> &progress = {});

// campaign.csv and friends via export_csv, runs/<scheduler>_<load>_<seed>.csv and events.log.
void write_campaign(const CampaignResult &result, double ci_level, const std::filesystem::path &dir);

} // namespace dqld
