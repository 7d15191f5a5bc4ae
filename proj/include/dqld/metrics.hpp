#pragma once

#include "dqld/topology.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dqld {

struct EccdfCurve {
    std::vector<double> values;  // distinct samples, ascending
    std::vector<double> probs;   // fraction of samples strictly greater
};

// Throws std::invalid_argument on empty input.
EccdfCurve eccdf(std::span<const double> samples);

// lost / sent; nullopt when nothing was sent. Throws std::invalid_argument
// when lost > sent or either is negative.
std::optional<double> plr(std::int64_t sent, std::int64_t lost);

// Nearest-rank percentile (q in (0, 1]); nullopt on empty input.
std::optional<double> percentile(std::span<const double> samples, double q);

struct ScheduledLink {
    int beam = 0;
    int user = 0;
    ServiceClass cls = ServiceClass::Embb;
    int rbg = 0;
    double rbg_hz = 0.0;
    double sinr = 0.0;  // linear
};

// sum over links of the class of omega * log2(1 + sinr), in bits/s.
double sum_rate(std::span<const ScheduledLink> links, ServiceClass cls);

struct MeanCi {
    double mean = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    int n = 0;
};

// Two-sided Student-t interval; width 0 for a single value. NaN values are skipped;
// an all-NaN input yields NaN fields with n = 0.
MeanCi t_interval(std::span<const double> values, double level);

// One (scheduler, load) cell of a campaign.
struct CampaignPoint {
    std::string scheduler;
    double load_bps = 0.0;
    // metric name -> per-run values
    std::vector<std::pair<std::string, std::vector<double>>> metrics;
    // pooled latency samples, urllc then embb
    std::vector<double> urllc_latency;
    std::vector<double> embb_latency;
};

inline const std::vector<std::string> &headline_metrics() {
    static const std::vector<std::string> names{"embb_rate", "urllc_latency_p50", "urllc_latency_p999",
                                                "urllc_plr", "urllc_rate"};
    return names;
}

struct CampaignRow {
    std::string scheduler;
    double load_bps = 0.0;
    std::string metric;
    MeanCi ci;
};

// Rows for the headline metrics, ordered by (scheduler, load, metric).
std::vector<CampaignRow> campaign_rows(std::span<const CampaignPoint> points, double level,
                                       const std::vector<std::string> &metric_names = headline_metrics());

// Writes campaign.csv (headline metrics), campaign_extra.csv (any other
// metrics) and <scheduler>/eccdf_<class>_<load>.csv. Throws std::runtime_error
// when the directory cannot be written.
void export_csv(std::span<const CampaignPoint> points, double level, const std::filesystem::path &dir);

std::string format_number(double v);

} // namespace dqld
