#include "dqld/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <type_traits>
#include <vector>

namespace dqld {

std::string to_string(SchedulerKind kind) { return kind == SchedulerKind::Dqld ? "dqld" : "kppf"; }

SchedulerKind parse_scheduler(const std::string &name) {
    if (name == "dqld") return SchedulerKind::Dqld;
    if (name == "kppf") return SchedulerKind::Kppf;
    throw ConfigError("scheduler", "expected dqld or kppf, got '" + name + "'");
}

double SimConfig::max_tx_power_w() const { return std::pow(10.0, (max_tx_power_dbm - 30.0) / 10.0); }

double SimConfig::noise_power_w() const {
    const double dbm = -174.0 + 10.0 * std::log10(bandwidth_hz) + noise_figure_db;
    return std::pow(10.0, (dbm - 30.0) / 10.0);
}

std::int64_t SimConfig::total_ttis() const {
    const double ratio = sim_seconds / tti_seconds();
    return static_cast<std::int64_t>(std::ceil(ratio - 1e-9 * ratio));
}

namespace {

void require(bool ok, const char *key, const std::string &what) {
    if (!ok) throw ConfigError(key, what);
}

void positive(double v, const char *key) { require(std::isfinite(v) && v > 0.0, key, "must be positive"); }

void probability(double v, const char *key) {
    require(std::isfinite(v) && v >= 0.0 && v <= 1.0, key, "must lie in [0, 1]");
}

} // namespace

void validate(const SimConfig &c) {
    positive(c.bandwidth_hz, "bandwidth_hz");
    positive(c.carrier_hz, "carrier_hz");
    positive(c.scs_hz, "scs_hz");
    positive(c.subcarriers_per_rb, "subcarriers_per_rb");
    positive(c.tti_symbols, "tti_symbols");
    require(std::isfinite(c.max_tx_power_dbm) && c.max_tx_power_dbm > 0.0, "max_tx_power_dbm", "must be positive");
    probability(c.bler_target_urllc, "bler_target_urllc");
    probability(c.bler_target_embb, "bler_target_embb");

    require(c.antenna_elements >= 1, "antenna_elements", "must be >= 1");
    positive(c.element_spacing_wavelengths, "element_spacing_wavelengths");
    require(c.path_count >= 1, "path_count", "must be >= 1");
    positive(c.pathloss_exponent, "pathloss_exponent");
    require(std::isfinite(c.noise_figure_db), "noise_figure_db", "must be finite");
    positive(c.gain_variance, "gain_variance");

    positive(c.max_rbs, "max_rbs");
    positive(c.rbs_per_rbg, "rbs_per_rbg");
    require(c.pf_ema > 0.0 && c.pf_ema <= 1.0, "pf_ema", "must lie in (0, 1]");
    positive(c.harq_rtt_ttis, "harq_rtt_ttis");
    positive(c.harq_processes, "harq_processes");
    require(c.harq_max_retx >= 0, "harq_max_retx", "must be >= 0");

    positive(c.n_gnbs, "n_gnbs");
    positive(c.cell_radius_m, "cell_radius_m");
    positive(c.inter_site_m, "inter_site_m");
    positive(c.clusters_per_gnb, "clusters_per_gnb");
    require(c.urllc_per_cluster >= 0, "urllc_per_cluster", "must be >= 0");
    require(c.embb_per_cluster >= 0, "embb_per_cluster", "must be >= 0");
    require(c.urllc_per_cluster + c.embb_per_cluster >= 1, "urllc_per_cluster", "clusters need at least one user");
    require(std::isfinite(c.cluster_radius_m) && c.cluster_radius_m >= 0.0, "cluster_radius_m", "must be >= 0");
    require(std::isfinite(c.speed_min_mps) && c.speed_min_mps >= 0.0, "speed_min_mps", "must be >= 0");
    require(std::isfinite(c.speed_max_mps) && c.speed_max_mps >= c.speed_min_mps, "speed_max_mps",
            "must be >= speed_min_mps");
    require(std::isfinite(c.mobility_scale) && c.mobility_scale >= 0.0, "mobility_scale", "must be >= 0");

    positive(c.packet_bytes, "packet_bytes");
    require(std::isfinite(c.urllc_load_bps) && c.urllc_load_bps >= 0.0, "urllc_load_bps", "must be >= 0");
    require(std::isfinite(c.embb_load_bps) && c.embb_load_bps >= 0.0, "embb_load_bps", "must be >= 0");

    const auto &a = c.agent;
    positive(a.learning_rate, "learning_rate");
    require(a.discount > 0.0 && a.discount < 1.0, "discount", "must lie in (0, 1)");
    probability(a.epsilon, "epsilon");
    positive(a.d_qos_s, "d_qos_s");
    require(std::isfinite(a.gamma_qos_db), "gamma_qos_db", "must be finite");
    positive(a.hidden_units, "hidden_units");
    positive(a.batch_size, "batch_size");
    require(a.replay_capacity >= a.batch_size, "replay_capacity", "must be >= batch_size");
    positive(a.train_interval, "train_interval");
    positive(a.copy_interval, "copy_interval");
    positive(a.network_lr, "network_lr");
    positive(a.grad_clip, "grad_clip");
    positive(a.history_len, "history_len");

    const auto &k = c.clustering;
    require(k.min_pts >= 1, "dbscan_min_pts", "must be >= 1");
    positive(k.eps_m, "dbscan_eps_m");
    positive(k.kmeans_max_iters, "kmeans_max_iters");
    require(std::isfinite(k.recluster_threshold_db), "recluster_threshold_db", "must be finite");
    positive(k.recluster_window_ttis, "recluster_window_ttis");

    positive(c.sim_seconds, "sim_seconds");
    require(c.n_runs >= 1, "n_runs", "must be >= 1");
    require(c.ci_level > 0.0 && c.ci_level < 1.0, "ci_level", "must lie in (0, 1)");
}

namespace {

using Setter = std::function<void(SimConfig &, const std::string &)>;

double to_double(const std::string &key, const std::string &v) {
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &used);
    } catch (const std::exception &) {
        throw ConfigError(key, "not a number: '" + v + "'");
    }
    if (used != v.size()) throw ConfigError(key, "not a number: '" + v + "'");
    return out;
}

long long to_int(const std::string &key, const std::string &v) {
    std::size_t used = 0;
    long long out = 0;
    try {
        out = std::stoll(v, &used);
    } catch (const std::exception &) {
        throw ConfigError(key, "not an integer: '" + v + "'");
    }
    if (used != v.size()) throw ConfigError(key, "not an integer: '" + v + "'");
    return out;
}

const std::map<std::string, Setter> &setters() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> m;
        auto dbl = [&m](const std::string &key, auto getter) {
            m[key] = [key, getter](SimConfig &c, const std::string &v) { getter(c) = to_double(key, v); };
        };
        auto integer = [&m](const std::string &key, auto getter) {
            m[key] = [key, getter](SimConfig &c, const std::string &v) {
                getter(c) = static_cast<std::remove_reference_t<decltype(getter(c))>>(to_int(key, v));
            };
        };
#define DQLD_DBL(name, expr) dbl(name, [](SimConfig &c) -> double & { return expr; })
#define DQLD_INT(name, expr) integer(name, [](SimConfig &c) -> int & { return expr; })
        DQLD_DBL("bandwidth_hz", c.bandwidth_hz);
        DQLD_DBL("carrier_hz", c.carrier_hz);
        DQLD_DBL("scs_hz", c.scs_hz);
        DQLD_INT("subcarriers_per_rb", c.subcarriers_per_rb);
        DQLD_INT("tti_symbols", c.tti_symbols);
        DQLD_DBL("max_tx_power_dbm", c.max_tx_power_dbm);
        DQLD_DBL("bler_target_urllc", c.bler_target_urllc);
        DQLD_DBL("bler_target_embb", c.bler_target_embb);
        DQLD_INT("antenna_elements", c.antenna_elements);
        DQLD_DBL("element_spacing_wavelengths", c.element_spacing_wavelengths);
        DQLD_INT("path_count", c.path_count);
        DQLD_DBL("pathloss_exponent", c.pathloss_exponent);
        DQLD_DBL("noise_figure_db", c.noise_figure_db);
        DQLD_DBL("gain_variance", c.gain_variance);
        DQLD_INT("max_rbs", c.max_rbs);
        DQLD_INT("rbs_per_rbg", c.rbs_per_rbg);
        DQLD_DBL("pf_ema", c.pf_ema);
        DQLD_INT("harq_rtt_ttis", c.harq_rtt_ttis);
        DQLD_INT("harq_processes", c.harq_processes);
        DQLD_INT("harq_max_retx", c.harq_max_retx);
        DQLD_INT("n_gnbs", c.n_gnbs);
        DQLD_DBL("cell_radius_m", c.cell_radius_m);
        DQLD_DBL("inter_site_m", c.inter_site_m);
        DQLD_INT("clusters_per_gnb", c.clusters_per_gnb);
        DQLD_INT("urllc_per_cluster", c.urllc_per_cluster);
        DQLD_INT("embb_per_cluster", c.embb_per_cluster);
        DQLD_DBL("cluster_radius_m", c.cluster_radius_m);
        DQLD_DBL("speed_min_mps", c.speed_min_mps);
        DQLD_DBL("speed_max_mps", c.speed_max_mps);
        DQLD_DBL("mobility_scale", c.mobility_scale);
        DQLD_INT("packet_bytes", c.packet_bytes);
        DQLD_DBL("urllc_load_bps", c.urllc_load_bps);
        DQLD_DBL("embb_load_bps", c.embb_load_bps);
        DQLD_DBL("learning_rate", c.agent.learning_rate);
        DQLD_DBL("discount", c.agent.discount);
        DQLD_DBL("epsilon", c.agent.epsilon);
        DQLD_DBL("d_qos_s", c.agent.d_qos_s);
        DQLD_DBL("gamma_qos_db", c.agent.gamma_qos_db);
        DQLD_INT("hidden_units", c.agent.hidden_units);
        DQLD_INT("batch_size", c.agent.batch_size);
        DQLD_INT("replay_capacity", c.agent.replay_capacity);
        DQLD_INT("train_interval", c.agent.train_interval);
        DQLD_INT("copy_interval", c.agent.copy_interval);
        DQLD_DBL("network_lr", c.agent.network_lr);
        DQLD_DBL("grad_clip", c.agent.grad_clip);
        DQLD_INT("history_len", c.agent.history_len);
        DQLD_INT("dbscan_min_pts", c.clustering.min_pts);
        DQLD_DBL("dbscan_eps_m", c.clustering.eps_m);
        DQLD_INT("kmeans_max_iters", c.clustering.kmeans_max_iters);
        DQLD_DBL("recluster_threshold_db", c.clustering.recluster_threshold_db);
        DQLD_INT("recluster_window_ttis", c.clustering.recluster_window_ttis);
        DQLD_DBL("sim_seconds", c.sim_seconds);
        DQLD_INT("n_runs", c.n_runs);
        DQLD_DBL("ci_level", c.ci_level);
#undef DQLD_DBL
#undef DQLD_INT
        m["scheduler"] = [](SimConfig &c, const std::string &v) { c.scheduler = parse_scheduler(v); };
        m["seed"] = [](SimConfig &c, const std::string &v) {
            const auto s = to_int("seed", v);
            if (s < 0) throw ConfigError("seed", "must be >= 0");
            c.seed = static_cast<std::uint64_t>(s);
        };
        // Derived from tti_symbols and scs_hz; accepted only as a consistency check so
        // that the rounded 0.1429 ms figure can appear in a file.
        m["tti_seconds"] = [](SimConfig &c, const std::string &v) {
            const double given = to_double("tti_seconds", v);
            if (!(std::abs(given - c.tti_seconds()) <= 1e-3 * c.tti_seconds()))
                throw ConfigError("tti_seconds", "inconsistent with tti_symbols and scs_hz");
        };
        return m;
    }();
    return table;
}

std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

SimConfig parse_config(const std::string &text) {
    SimConfig cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    std::vector<std::pair<std::string, std::string>> deferred;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("", "line " + std::to_string(line_no) + ": expected 'key = value'");
        const auto key = trim(line.substr(0, eq));
        auto value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        if (key.empty() || value.empty())
            throw ConfigError(key, "line " + std::to_string(line_no) + ": empty key or value");
        const auto it = setters().find(key);
        if (it == setters().end()) throw ConfigError(key, "unknown key");
        if (key == "tti_seconds") {
            deferred.emplace_back(key, value);
            continue;
        }
        try {
            it->second(cfg, value);
        } catch (const ConfigError &e) {
            if (!e.key().empty()) throw;
            throw ConfigError(key, e.what());
        }
    }
    for (const auto &[key, value] : deferred) setters().at(key)(cfg, value);
    validate(cfg);
    return cfg;
}

SimConfig load_config(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot read config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

} // namespace dqld
