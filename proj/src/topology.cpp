#include "dqld/topology.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dqld {

double distance(const Position &a, const Position &b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::vector<GnbState> make_gnbs(const SimConfig &cfg) {
    std::vector<GnbState> gnbs;
    const double lambda = cfg.wavelength_m();
    for (int g = 0; g < cfg.n_gnbs; ++g) {
        gnbs.push_back(GnbState{g, Position{g * cfg.inter_site_m, 0.0}, cfg.antenna_elements,
                                cfg.element_spacing_wavelengths * lambda, lambda});
    }
    return gnbs;
}

Position uniform_in_disc(const Position &center, double radius, Rng &rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double r = radius * std::sqrt(unit(rng));
    const double phi = 2.0 * std::numbers::pi * unit(rng);
    return {center.x + r * std::cos(phi), center.y + r * std::sin(phi)};
}

namespace {

Position clip_to_disc(const Position &p, const Position &center, double radius) {
    const double d = distance(p, center);
    if (d <= radius) return p;
    const double s = radius / d;
    return {center.x + (p.x - center.x) * s, center.y + (p.y - center.y) * s};
}

double draw_speed(const SimConfig &cfg, Rng &rng) {
    if (cfg.speed_max_mps <= cfg.speed_min_mps) return cfg.speed_min_mps;
    return std::uniform_real_distribution<double>(cfg.speed_min_mps, cfg.speed_max_mps)(rng);
}

} // namespace

std::vector<UserState> sample_pcp(const SimConfig &cfg, const std::vector<GnbState> &gnbs, Rng &rng) {
    std::vector<UserState> users;
    int next_id = 0;
    for (const auto &gnb : gnbs) {
        for (int c = 0; c < cfg.clusters_per_gnb; ++c) {
            const Position head = uniform_in_disc(gnb.position, cfg.cell_radius_m, rng);
            const int members = cfg.urllc_per_cluster + cfg.embb_per_cluster;
            for (int m = 0; m < members; ++m) {
                UserState u;
                u.id = next_id++;
                u.gnb_id = gnb.id;
                u.qci = m < cfg.urllc_per_cluster ? ServiceClass::Urllc : ServiceClass::Embb;
                u.position = clip_to_disc(uniform_in_disc(head, cfg.cluster_radius_m, rng), gnb.position,
                                          cfg.cell_radius_m);
                u.waypoint = uniform_in_disc(gnb.position, cfg.cell_radius_m, rng);
                u.speed_mps = draw_speed(cfg, rng);
                users.push_back(u);
            }
        }
    }
    return users;
}

UserState step_waypoint(UserState u, double dt, const SimConfig &cfg, const Position &cell_center, Rng &rng) {
    if (!(dt > 0.0)) throw std::invalid_argument("step_waypoint: dt must be positive");
    const double travel = u.speed_mps * dt * cfg.mobility_scale;
    if (travel <= 0.0) return u;
    const double remaining = distance(u.position, u.waypoint);
    if (remaining <= travel) {
        u.position = u.waypoint;
        u.waypoint = uniform_in_disc(cell_center, cfg.cell_radius_m, rng);
        u.speed_mps = draw_speed(cfg, rng);
    } else {
        const double f = travel / remaining;
        u.position.x += (u.waypoint.x - u.position.x) * f;
        u.position.y += (u.waypoint.y - u.position.y) * f;
    }
    u.position = clip_to_disc(u.position, cell_center, cfg.cell_radius_m);
    return u;
}

double aod(const GnbState &gnb, const Position &p) {
    const double dx = p.x - gnb.position.x;
    const double dy = p.y - gnb.position.y;
    if (dx == 0.0 && dy == 0.0) throw std::domain_error("aod: position coincides with the gNB");
    const double theta = std::atan2(dy, dx);
    return theta == -std::numbers::pi ? std::numbers::pi : theta;
}

} // namespace dqld
