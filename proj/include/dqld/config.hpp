#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

namespace dqld {

enum class SchedulerKind { Dqld, Kppf };

std::string to_string(SchedulerKind kind);
SchedulerKind parse_scheduler(const std::string &name);

// Raised for unreadable files, malformed lines and invariant violations.
// key() names the offending key, empty when the error is not key-specific.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string &what)
        : std::runtime_error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
    const std::string &key() const { return key_; }

private:
    std::string key_;
};

struct AgentConfig {
    double learning_rate = 0.5;   // Q-update step size
    double discount = 0.9;
    double epsilon = 0.1;
    double d_qos_s = 1e-3;
    double gamma_qos_db = 15.0;
    int hidden_units = 20;
    int batch_size = 20;
    int replay_capacity = 60;
    int train_interval = 60;      // T, in TTIs
    int copy_interval = 120;      // C, in TTIs
    double network_lr = 0.01;     // LSTM weight step size
    double grad_clip = 1.0;       // global gradient-norm clip
    int history_len = 8;          // CQI sequence fed to the LSTM
};

struct ClusteringConfig {
    int min_pts = 5;
    double eps_m = 30.0;
    int kmeans_max_iters = 100;
    double recluster_threshold_db = 5.0;
    int recluster_window_ttis = 50;
};

struct SimConfig {
    // PHY
    double bandwidth_hz = 2.0e7;
    double carrier_hz = 3.0e10;
    double scs_hz = 1.5e4;
    int subcarriers_per_rb = 12;
    int tti_symbols = 2;
    double max_tx_power_dbm = 28.0;
    double bler_target_urllc = 0.01;
    double bler_target_embb = 0.1;

    // Channel
    int antenna_elements = 8;
    double element_spacing_wavelengths = 0.5;
    int path_count = 1;
    double pathloss_exponent = 2.0;
    double noise_figure_db = 9.0;
    double gain_variance = 1.0;

    // MAC / HARQ
    int max_rbs = 100;
    int rbs_per_rbg = 4;
    double pf_ema = 0.05;
    int harq_rtt_ttis = 4;
    int harq_processes = 6;
    int harq_max_retx = 1;

    // Topology and mobility
    int n_gnbs = 2;
    double cell_radius_m = 150.0;
    double inter_site_m = 300.0;
    int clusters_per_gnb = 3;
    int urllc_per_cluster = 2;
    int embb_per_cluster = 2;
    double cluster_radius_m = 20.0;
    double speed_min_mps = 1.0;
    double speed_max_mps = 5.0;
    double mobility_scale = 1.0;

    // Traffic, per class per gNB
    int packet_bytes = 32;
    double urllc_load_bps = 1.0e6;
    double embb_load_bps = 1.0e6;

    AgentConfig agent;
    ClusteringConfig clustering;

    // Campaign
    double sim_seconds = 1.5;
    int n_runs = 10;
    double ci_level = 0.95;
    SchedulerKind scheduler = SchedulerKind::Dqld;
    std::uint64_t seed = 1;

    // 2 OFDM symbols of a 14-symbol slot; the slot lasts 1 ms at 15 kHz.
    double tti_seconds() const { return tti_symbols * (1.0e-3 * 1.5e4 / scs_hz) / 14.0; }
    double wavelength_m() const { return 299792458.0 / carrier_hz; }
    double max_tx_power_w() const;
    double noise_power_w() const;
    std::int64_t total_ttis() const;
    int users_per_gnb() const { return clusters_per_gnb * (urllc_per_cluster + embb_per_cluster); }
    int packet_bits() const { return packet_bytes * 8; }
};

// Throws ConfigError naming the first violated key.
void validate(const SimConfig &cfg);

// Flat `key = value` lines; `#` starts a comment. Absent keys keep defaults.
SimConfig parse_config(const std::string &text);
SimConfig load_config(const std::filesystem::path &path);

} // namespace dqld
