#include "dqld/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dqld {

CVector steering_vector(double theta, int n_elements, double spacing_m, double wavelength_m) {
    if (n_elements < 1) throw std::invalid_argument("steering_vector: need at least one element");
    CVector v(static_cast<std::size_t>(n_elements));
    const double step = -2.0 * std::numbers::pi * (spacing_m / wavelength_m) * std::sin(theta);
    for (int i = 0; i < n_elements; ++i) v[i] = std::polar(1.0, step * i);
    return v;
}

cplx draw_path_gain(double variance, Rng &rng) {
    std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
    const double re = n(rng);
    const double im = n(rng);
    return {re, im};
}

CVector channel_vector(double theta, double distance_m, cplx alpha, const ChannelParams &params, int n_elements,
                       double spacing_m, double wavelength_m) {
    if (distance_m < 0.0) throw std::invalid_argument("channel_vector: negative distance");
    CVector h = steering_vector(theta, n_elements, spacing_m, wavelength_m);
    const cplx scale =
        alpha / (std::sqrt(static_cast<double>(params.path_count)) * (1.0 + std::pow(distance_m, params.pathloss_exponent)));
    for (auto &x : h) x *= scale;
    return h;
}

CVector beamforming_weights(double boresight, int n_elements, double spacing_m, double wavelength_m) {
    CVector w = steering_vector(boresight, n_elements, spacing_m, wavelength_m);
    const double norm = 1.0 / std::sqrt(static_cast<double>(n_elements));
    for (auto &x : w) x *= norm;
    return w;
}

cplx inner(std::span<const cplx> h, std::span<const cplx> w) {
    if (h.size() != w.size()) throw std::invalid_argument("inner: length mismatch");
    cplx acc{0.0, 0.0};
    for (std::size_t i = 0; i < h.size(); ++i) acc += std::conj(h[i]) * w[i];
    return acc;
}

double array_gain(double theta, std::span<const cplx> w, double spacing_m, double wavelength_m) {
    const auto v = steering_vector(theta, static_cast<int>(w.size()), spacing_m, wavelength_m);
    return std::norm(inner(v, w));
}

double large_scale_gain(double distance_m, const ChannelParams &params) {
    const double denom = 1.0 + std::pow(distance_m, params.pathloss_exponent);
    return 1.0 / (params.path_count * denom * denom);
}

double sinr(const LinkTerm &serving, std::span<const LinkTerm> interferers, double noise_w) {
    double interference = 0.0;
    for (const auto &t : interferers) interference += t.power_w * std::norm(inner(t.h, t.w));
    return serving.power_w * std::norm(inner(serving.h, serving.w)) / (noise_w + interference);
}

int sinr_to_cqi(double sinr_linear) {
    if (!(sinr_linear > 0.0)) return kMinCqi;
    const double db = to_db(sinr_linear);
    const double bin = std::floor((db + 6.0) / 2.0);
    if (bin < 0.0) return kMinCqi;
    if (bin >= kMaxCqi - 1) return kMaxCqi;
    return 1 + static_cast<int>(bin);
}

double cqi_nominal_sinr_db(int cqi) { return -6.0 + 2.0 * (std::clamp(cqi, kMinCqi, kMaxCqi) - 1); }

const std::array<McsEntry, 15> &mcs_table() {
    // Efficiencies of the 4-bit CQI table (QPSK to 64QAM). Each row reaches 10%
    // BLER just below its CQI's nominal SINR.
    static const std::array<McsEntry, 15> table = [] {
        constexpr std::array<double, 15> eff{0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766, 1.9141,
                                             2.4063, 2.7305, 3.3223, 3.9023, 4.5234, 5.1152, 5.5547};
        std::array<McsEntry, 15> t{};
        for (int i = 0; i < 15; ++i) t[i] = McsEntry{i + 1, eff[i], cqi_nominal_sinr_db(i + 1) - 2.3};
        return t;
    }();
    return table;
}

double mcs_bler(const McsEntry &mcs, double sinr_db) {
    return 1.0 / (1.0 + std::exp((sinr_db - mcs.threshold_db) / kBlerTransitionDb));
}

LinkAdaptation cqi_to_mcs(int cqi, double bler_target) {
    if (cqi < kMinCqi || cqi > kMaxCqi) throw std::invalid_argument("cqi_to_mcs: CQI out of range");
    const double nominal = cqi_nominal_sinr_db(cqi);
    const auto &table = mcs_table();
    const McsEntry *pick = &table.front();
    for (const auto &row : table)
        if (mcs_bler(row, nominal) <= bler_target) pick = &row;
    return {pick->index, pick->efficiency, mcs_bler(*pick, nominal)};
}

} // namespace dqld
