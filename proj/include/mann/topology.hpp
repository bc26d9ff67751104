#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mann/common.hpp"

namespace mann {

struct ChannelParams;

struct CellSector {
    int cell_id = 0;
    int site_index = 0;
    double boresight_deg = 0.0;
    /// Orthogonal edge-band group; the three sectors of a site use 0, 1, 2.
    int sector_index_mod3 = 0;
};

struct Box {
    Vec2 min;
    Vec2 max;

    bool contains(Vec2 p) const {
        return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y;
    }
};

/// Twelve three-sector sites: three mutually adjacent inner sites (the nine
/// coordinated cells) surrounded by a ring of nine interferer sites.
struct GridLayout {
    std::vector<Vec2> sites;
    std::vector<CellSector> sectors;
    std::vector<int> inner_cell_ids;
    std::vector<int> eval_cell_ids;
    double inter_site_distance = 500.0;
    /// UE placement area: bounding box of the inner sites padded by one ISD.
    Box frame;

    int num_cells() const { return static_cast<int>(sectors.size()); }
    const CellSector& sector(int cell_id) const { return sectors.at(static_cast<std::size_t>(cell_id)); }
    Vec2 site_of(int cell_id) const { return sites.at(static_cast<std::size_t>(sector(cell_id).site_index)); }
    bool is_inner(int cell_id) const;
};

inline constexpr std::array<double, 3> kSectorBoresightsDeg{30.0, 150.0, 270.0};
inline constexpr int kInnerSites = 3;

GridLayout build_grid(double inter_site_distance = 500.0);

/// Thomas cluster drop parameters.
struct DropConfig {
    int n_uniform = 40;
    int n_macro_clusters = 3;
    int n_micro_per_macro = 3;
    double micro_radius_m = 75.0;
    int users_per_micro = 11;
    double displacement_m = 50.0;

    int total_ues() const { return n_uniform + n_macro_clusters * n_micro_per_macro * users_per_micro; }
    int clustered_ues() const { return n_macro_clusters * n_micro_per_macro * users_per_micro; }
    /// Gaussian scatter standard deviation around a micro-cluster center.
    double scatter_sigma_m() const { return micro_radius_m / 2.0; }

    /// Throws Error when a field is outside the enumerated parameter sets.
    /// users_per_micro == 0 is accepted as a degenerate uniform-only drop.
    void validate() const;

    friend bool operator==(const DropConfig&, const DropConfig&) = default;
};

inline constexpr std::array<double, 3> kMicroRadiiM{75.0, 100.0, 125.0};
inline constexpr int kMinUsersPerMicro = 11;
inline constexpr int kMaxUsersPerMicro = 20;
inline constexpr std::array<double, 6> kDisplacementsM{50.0, 100.0, 150.0, 175.0, 200.0, 250.0};

/// All 180 parameter combinations, radius-major then users then displacement.
std::vector<DropConfig> enumerate_configs();

struct UeDrop {
    std::string drop_id;
    DropConfig config;
    std::uint64_t seed = 0;
    std::vector<Vec2> positions;
    std::vector<int> serving_cell;
    /// Micro-cluster index per UE, -1 for the uniform layer. Not persisted.
    std::vector<int> cluster_index;
    std::vector<Vec2> micro_centers;

    int num_ues() const { return static_cast<int>(positions.size()); }
    std::vector<int> ues_of_cell(int cell_id) const;
};

UeDrop generate_drop(const DropConfig& config, const GridLayout& grid, std::uint64_t seed,
                     const ChannelParams& params, std::string drop_id = {});
UeDrop generate_drop(const DropConfig& config, const GridLayout& grid, std::uint64_t seed,
                     std::string drop_id = {});

}  // namespace mann
