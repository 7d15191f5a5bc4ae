#pragma once

#include "dqld/rng.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

namespace dqld {

using cplx = std::complex<double>;
using CVector = std::vector<cplx>;

struct ChannelParams {
    int path_count = 1;            // M
    double pathloss_exponent = 2.0; // n
    double noise_w = 1e-12;        // sigma^2
    double gain_variance = 1.0;    // variance of the complex path gain
};

// Entry i is exp(-j 2 pi i (L / lambda) sin(theta)).
CVector steering_vector(double theta, int n_elements, double spacing_m, double wavelength_m);

// Complex normal CN(0, variance).
cplx draw_path_gain(double variance, Rng &rng);

// Single-LoS channel: v(theta) * alpha / (sqrt(M) (1 + d^n)).
CVector channel_vector(double theta, double distance_m, cplx alpha, const ChannelParams &params, int n_elements,
                       double spacing_m, double wavelength_m);

// Maximum-ratio weights toward the boresight, unit norm: v(theta_b) / sqrt(N), so
// that h^H w is coherent for a user on the boresight.
CVector beamforming_weights(double boresight, int n_elements, double spacing_m, double wavelength_m);

// h^H w
cplx inner(std::span<const cplx> h, std::span<const cplx> w);

// |v(theta)^H w|^2; with |alpha|^2 and large_scale_gain() this factors |h^H w|^2.
double array_gain(double theta, std::span<const cplx> w, double spacing_m, double wavelength_m);

// 1 / (M (1 + d^n)^2)
double large_scale_gain(double distance_m, const ChannelParams &params);

struct LinkTerm {
    double power_w = 0.0;
    CVector h;
    CVector w;
};

// p |h^H w|^2 / (sigma^2 + sum_i p_i |h_i^H w_i|^2)
double sinr(const LinkTerm &serving, std::span<const LinkTerm> interferers, double noise_w);

inline double to_db(double linear) { return 10.0 * std::log10(linear); }
inline double from_db(double db) { return std::pow(10.0, db / 10.0); }

constexpr int kMinCqi = 1;
constexpr int kMaxCqi = 15;

// Uniform 2 dB bins anchored at -6 dB: clamp(1 + floor((dB + 6) / 2), 1, 15).
int sinr_to_cqi(double sinr_linear);

// Lower edge of a CQI bin in dB, the SINR the link adaptation plans for.
double cqi_nominal_sinr_db(int cqi);

struct McsEntry {
    int index = 0;               // 1-based
    double efficiency = 0.0;     // bits/s/Hz
    double threshold_db = 0.0;   // SINR at 50% BLER
};

constexpr double kBlerTransitionDb = 1.0;

const std::array<McsEntry, 15> &mcs_table();

// Logistic AWGN curve: 1 / (1 + exp((sinr_db - threshold_db) / width)).
double mcs_bler(const McsEntry &mcs, double sinr_db);

struct LinkAdaptation {
    int mcs = 1;
    double spectral_efficiency = 0.0;
    double predicted_bler = 0.0;
};

// Highest-efficiency row whose BLER at the CQI's nominal SINR meets the target;
// the lowest row when none does.
LinkAdaptation cqi_to_mcs(int cqi, double bler_target);

} // namespace dqld
