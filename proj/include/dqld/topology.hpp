#pragma once

#include "dqld/config.hpp"
#include "dqld/rng.hpp"

#include <vector>

namespace dqld {

struct Position {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Position &, const Position &) = default;
};

double distance(const Position &a, const Position &b);

enum class ServiceClass : int { Urllc = 1, Embb = 2 };

struct UserState {
    int id = 0;
    int gnb_id = 0;
    ServiceClass qci = ServiceClass::Urllc;
    Position position;
    Position waypoint;
    double speed_mps = 0.0;
};

struct GnbState {
    int id = 0;
    Position position;
    int n_elements = 8;
    double spacing_m = 0.005;
    double wavelength_m = 0.01;
};

// gNBs on the x axis, inter_site_m apart, ULAs along the y axis (broadside +x).
std::vector<GnbState> make_gnbs(const SimConfig &cfg);

// Uniform point in the disc of the given radius.
Position uniform_in_disc(const Position &center, double radius, Rng &rng);

// Fixed-count cluster process: per gNB, clusters_per_gnb heads uniform in the cell,
// each with urllc_per_cluster + embb_per_cluster members uniform within
// cluster_radius_m of the head, clipped to the cell disc. Ids are global and
// dense, gNB-major.
std::vector<UserState> sample_pcp(const SimConfig &cfg, const std::vector<GnbState> &gnbs, Rng &rng);

// Random waypoint with zero pause. cell_center is the serving gNB position.
UserState step_waypoint(UserState u, double dt, const SimConfig &cfg, const Position &cell_center, Rng &rng);

// Angle of the gNB->p vector from the +x broadside axis, in (-pi, pi].
// Throws std::domain_error when p coincides with the gNB.
double aod(const GnbState &gnb, const Position &p);

} // namespace dqld
