#include "mann/topology.hpp"

#include <algorithm>
#include <cstdlib>

#include "mann/linklevel.hpp"
#include "mann/rng.hpp"

namespace mann {

namespace {

struct Axial {
    int q;
    int r;
    friend bool operator==(Axial, Axial) = default;
};

int hex_distance(Axial a, Axial b) {
    const int dq = a.q - b.q;
    const int dr = a.r - b.r;
    return (std::abs(dq) + std::abs(dr) + std::abs(dq + dr)) / 2;
}

Vec2 to_plane(Axial a, double isd) {
    return {isd * (a.q + 0.5 * a.r), isd * (std::sqrt(3.0) / 2.0) * a.r};
}

template <class T, std::size_t N>
bool one_of(T v, const std::array<T, N>& set) {
    return std::find(set.begin(), set.end(), v) != set.end();
}

}  // namespace

bool GridLayout::is_inner(int cell_id) const {
    return std::find(inner_cell_ids.begin(), inner_cell_ids.end(), cell_id) != inner_cell_ids.end();
}

GridLayout build_grid(double inter_site_distance) {
    if (!(inter_site_distance > 0.0)) throw Error("inter_site_distance must be positive");

    const std::array<Axial, kInnerSites> inner{{{0, 0}, {1, 0}, {0, 1}}};
    std::vector<Axial> ring;
    for (int q = -3; q <= 3; ++q) {
        for (int r = -3; r <= 3; ++r) {
            const Axial a{q, r};
            if (std::find(inner.begin(), inner.end(), a) != inner.end()) continue;
            const bool adjacent = std::any_of(inner.begin(), inner.end(),
                                              [&](Axial s) { return hex_distance(a, s) == 1; });
            if (adjacent) ring.push_back(a);
        }
    }

    GridLayout grid;
    grid.inter_site_distance = inter_site_distance;
    for (Axial a : inner) grid.sites.push_back(to_plane(a, inter_site_distance));
    for (Axial a : ring) grid.sites.push_back(to_plane(a, inter_site_distance));

    for (int s = 0; s < static_cast<int>(grid.sites.size()); ++s) {
        for (int k = 0; k < 3; ++k) {
            grid.sectors.push_back({s * 3 + k, s, kSectorBoresightsDeg[static_cast<std::size_t>(k)], k});
        }
    }
    for (int c = 0; c < kInnerSites * 3; ++c) grid.inner_cell_ids.push_back(c);

    // The inner sites form a triangle; the sector of each site whose boresight
    // points at the triangle centroid is evaluated.
    Vec2 centroid{};
    for (int s = 0; s < kInnerSites; ++s) centroid = centroid + (1.0 / kInnerSites) * grid.sites[static_cast<std::size_t>(s)];
    for (int s = 0; s < kInnerSites; ++s) {
        const Vec2 d = centroid - grid.sites[static_cast<std::size_t>(s)];
        const double bearing = std::atan2(d.y, d.x) * 180.0 / kPi;
        int best = 0;
        double best_off = 1e9;
        for (int k = 0; k < 3; ++k) {
            const double off = std::abs(wrap_angle_deg(bearing - kSectorBoresightsDeg[static_cast<std::size_t>(k)]));
            if (off < best_off) {
                best_off = off;
                best = k;
            }
        }
        grid.eval_cell_ids.push_back(s * 3 + best);
    }

    Box box{grid.sites[0], grid.sites[0]};
    for (int s = 0; s < kInnerSites; ++s) {
        const Vec2 p = grid.sites[static_cast<std::size_t>(s)];
        box.min = {std::min(box.min.x, p.x), std::min(box.min.y, p.y)};
        box.max = {std::max(box.max.x, p.x), std::max(box.max.y, p.y)};
    }
    box.min = box.min - Vec2{inter_site_distance, inter_site_distance};
    box.max = box.max + Vec2{inter_site_distance, inter_site_distance};
    grid.frame = box;
    return grid;
}

void DropConfig::validate() const {
    if (n_uniform != 40) throw Error("n_uniform must be 40");
    if (n_macro_clusters != 3) throw Error("n_macro_clusters must be 3");
    if (n_micro_per_macro != 3) throw Error("n_micro_per_macro must be 3");
    if (!one_of(micro_radius_m, kMicroRadiiM)) throw Error("micro_radius_m must be one of {75, 100, 125}");
    if (users_per_micro != 0 && (users_per_micro < kMinUsersPerMicro || users_per_micro > kMaxUsersPerMicro))
        throw Error("users_per_micro must be in 11..20");
    if (!one_of(displacement_m, kDisplacementsM))
        throw Error("displacement_m must be one of {50, 100, 150, 175, 200, 250}");
}

std::vector<DropConfig> enumerate_configs() {
    std::vector<DropConfig> out;
    out.reserve(kMicroRadiiM.size() * 10 * kDisplacementsM.size());
    for (double radius : kMicroRadiiM) {
        for (int users = kMinUsersPerMicro; users <= kMaxUsersPerMicro; ++users) {
            for (double disp : kDisplacementsM) {
                DropConfig c;
                c.micro_radius_m = radius;
                c.users_per_micro = users;
                c.displacement_m = disp;
                out.push_back(c);
            }
        }
    }
    return out;
}

std::vector<int> UeDrop::ues_of_cell(int cell_id) const {
    std::vector<int> out;
    for (int u = 0; u < num_ues(); ++u)
        if (serving_cell[static_cast<std::size_t>(u)] == cell_id) out.push_back(u);
    return out;
}

UeDrop generate_drop(const DropConfig& config, const GridLayout& grid, std::uint64_t seed,
                     const ChannelParams& params, std::string drop_id) {
    config.validate();
    if (config.n_macro_clusters > kInnerSites || grid.sites.size() < kInnerSites)
        throw Error("grid has fewer inner sites than macro clusters");

    Rng rng(seed);
    UeDrop drop;
    drop.drop_id = std::move(drop_id);
    drop.config = config;
    drop.seed = seed;
    drop.positions.reserve(static_cast<std::size_t>(config.total_ues()));

    const Box& frame = grid.frame;
    for (int i = 0; i < config.n_uniform; ++i) {
        drop.positions.push_back({rng.uniform(frame.min.x, frame.max.x), rng.uniform(frame.min.y, frame.max.y)});
        drop.cluster_index.push_back(-1);
    }

    for (int macro = 0; macro < config.n_macro_clusters; ++macro) {
        const Vec2 site = grid.sites[static_cast<std::size_t>(macro)];
        for (int micro = 0; micro < config.n_micro_per_macro; ++micro) {
            Vec2 center;
            do {
                const double a = rng.uniform(0.0, 2.0 * kPi);
                center = site + config.displacement_m * Vec2{std::cos(a), std::sin(a)};
            } while (!frame.contains(center));
            drop.micro_centers.push_back(center);
        }
    }

    const double sigma = config.scatter_sigma_m();
    for (int k = 0; k < static_cast<int>(drop.micro_centers.size()); ++k) {
        const Vec2 center = drop.micro_centers[static_cast<std::size_t>(k)];
        for (int i = 0; i < config.users_per_micro; ++i) {
            Vec2 p;
            do {
                const double dx = rng.normal();
                const double dy = rng.normal();
                p = center + sigma * Vec2{dx, dy};
            } while (!frame.contains(p));
            drop.positions.push_back(p);
            drop.cluster_index.push_back(k);
        }
    }

    const LinkBudget link(grid, params, drop.positions, seed);
    drop.serving_cell.resize(drop.positions.size());
    for (int u = 0; u < drop.num_ues(); ++u) drop.serving_cell[static_cast<std::size_t>(u)] = link.strongest_cell(u);
    return drop;
}

UeDrop generate_drop(const DropConfig& config, const GridLayout& grid, std::uint64_t seed, std::string drop_id) {
    return generate_drop(config, grid, seed, ChannelParams{}, std::move(drop_id));
}

}  // namespace mann
