#include "dqld/metrics.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>

namespace dqld {

EccdfCurve eccdf(std::span<const double> samples) {
    if (samples.empty()) throw std::invalid_argument("eccdf: no samples");
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    EccdfCurve c;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        c.values.push_back(sorted[i]);
        c.probs.push_back(static_cast<double>(sorted.size() - j) / n);
        i = j;
    }
    return c;
}

std::optional<double> plr(std::int64_t sent, std::int64_t lost) {
    if (sent < 0 || lost < 0 || lost > sent) throw std::invalid_argument("plr: need sent >= lost >= 0");
    if (sent == 0) return std::nullopt;
    return static_cast<double>(lost) / static_cast<double>(sent);
}

std::optional<double> percentile(std::span<const double> samples, double q) {
    if (samples.empty()) return std::nullopt;
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const auto rank = static_cast<std::size_t>(std::ceil(q * sorted.size() - 1e-9));
    return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

double sum_rate(std::span<const ScheduledLink> links, ServiceClass cls) {
    double total = 0.0;
    for (const auto &l : links)
        if (l.cls == cls) total += l.rbg_hz * std::log2(1.0 + l.sinr);
    return total;
}

MeanCi t_interval(std::span<const double> values, double level) {
    std::vector<double> v;
    for (double x : values)
        if (!std::isnan(x)) v.push_back(x);
    MeanCi out;
    out.n = static_cast<int>(v.size());
    if (v.empty()) {
        out.mean = out.lo = out.hi = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    double sum = 0.0;
    for (double x : v) sum += x;
    out.mean = sum / v.size();
    if (v.size() < 2 || std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); })) {
        out.lo = out.hi = out.mean;
        return out;
    }
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    const double sd = std::sqrt(ss / (v.size() - 1));
    const boost::math::students_t dist(static_cast<double>(v.size() - 1));
    const double t = boost::math::quantile(dist, 0.5 + level / 2.0);
    const double half = t * sd / std::sqrt(static_cast<double>(v.size()));
    out.lo = out.mean - half;
    out.hi = out.mean + half;
    return out;
}

std::vector<CampaignRow> campaign_rows(std::span<const CampaignPoint> points, double level,
                                       const std::vector<std::string> &metric_names) {
    std::vector<CampaignRow> rows;
    for (const auto &p : points) {
        for (const auto &[name, values] : p.metrics) {
            if (std::find(metric_names.begin(), metric_names.end(), name) == metric_names.end()) continue;
            rows.push_back({p.scheduler, p.load_bps, name, t_interval(values, level)});
        }
    }
    std::sort(rows.begin(), rows.end(), [](const CampaignRow &a, const CampaignRow &b) {
        return std::tie(a.scheduler, a.load_bps, a.metric) < std::tie(b.scheduler, b.load_bps, b.metric);
    });
    return rows;
}

std::string format_number(double v) {
    if (std::isnan(v)) return "NA";
    return fmt::format("{:.10g}", v);
}

namespace {

std::ofstream open_out(const std::filesystem::path &path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

void write_rows(const std::filesystem::path &path, const std::vector<CampaignRow> &rows) {
    auto out = open_out(path);
    out << "scheduler,load_bps,metric,mean,ci_lo,ci_hi\n";
    for (const auto &r : rows)
        out << r.scheduler << ',' << format_number(r.load_bps) << ',' << r.metric << ','
            << format_number(r.ci.mean) << ',' << format_number(r.ci.lo) << ',' << format_number(r.ci.hi) << '\n';
}

void write_eccdf(const std::filesystem::path &path, std::span<const double> samples) {
    auto out = open_out(path);
    out << "value_s,prob\n";
    if (samples.empty()) return;
    const auto curve = eccdf(samples);
    for (std::size_t i = 0; i < curve.values.size(); ++i)
        out << format_number(curve.values[i]) << ',' << format_number(curve.probs[i]) << '\n';
}

} // namespace

void export_csv(std::span<const CampaignPoint> points, double level, const std::filesystem::path &dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
    write_rows(dir / "campaign.csv", campaign_rows(points, level));

    std::set<std::string> extra_names;
    for (const auto &p : points)
        for (const auto &m : p.metrics)
            if (std::find(headline_metrics().begin(), headline_metrics().end(), m.first) == headline_metrics().end())
                extra_names.insert(m.first);
    write_rows(dir / "campaign_extra.csv",
               campaign_rows(points, level, std::vector<std::string>(extra_names.begin(), extra_names.end())));

    for (const auto &p : points) {
        const auto sub = dir / p.scheduler;
        std::filesystem::create_directories(sub, ec);
        if (ec) throw std::runtime_error("cannot create " + sub.string() + ": " + ec.message());
        const auto load = format_number(p.load_bps);
        write_eccdf(sub / ("eccdf_urllc_" + load + ".csv"), p.urllc_latency);
        write_eccdf(sub / ("eccdf_embb_" + load + ".csv"), p.embb_latency);
    }
}

} // namespace dqld
