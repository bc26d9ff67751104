#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mann/common.hpp"
#include "mann/topology.hpp"

namespace mann {

struct ChannelParams {
    double tx_power_dbm_total = 46.0;
    double edge_power_boost_db = 3.0;
    double noise_psd_dbm_hz = -174.0;
    double rb_bandwidth_hz = 180000.0;
    double antenna_theta3db_deg = 70.0;
    double antenna_max_atten_db = 25.0;
    double antenna_boresight_gain_dbi = 14.0;
    double min_distance_m = 35.0;
    double shadowing_sigma_db = 0.0;
    // truncated-Shannon link abstraction
    double rate_attenuation = 0.6;
    double max_spectral_efficiency = 4.4;
    double min_sinr_db = -10.0;

    double center_power_per_rb_dbm() const { return tx_power_dbm_total - 10.0 * std::log10(kNumRbs); }
    double edge_power_per_rb_dbm() const { return center_power_per_rb_dbm() + edge_power_boost_db; }
    double noise_per_rb_mw() const { return db_to_linear(noise_psd_dbm_hz + linear_to_db(rb_bandwidth_hz)); }

    void validate() const;
};

/// 128.1 + 37.6 log10(d_km), with d clamped below at min_distance_m.
double pathloss_db(double distance_m, const ChannelParams& params = {});

/// Wraps an angle in degrees to [-180, 180].
double wrap_angle_deg(double deg);

/// Three-sector horizontal pattern including boresight gain.
double antenna_gain_db(double angle_off_boresight_deg, const ChannelParams& params = {});

double rx_power_dbm(double tx_per_rb_dbm, const GridLayout& grid, const CellSector& sector,
                    Vec2 ue_pos, const ChannelParams& params = {}, double shadowing_db = 0.0);

struct RsrqReport {
    int ue_id = 0;
    int report_value = 0;
    double rsrq_db = 0.0;
};

inline constexpr int kMaxRsrqReport = 34;

/// RSRQ_00..RSRQ_34 measurement mapping: 0.5 dB steps from -19.5 dB to -3 dB.
int rsrq_report_value(double rsrq_db);

/// The [lo, hi) dB interval mapped to a report value; infinite at the ends.
std::pair<double, double> rsrq_report_interval(int report_value);

/// Achievable rate on one RB in bit/s.
double rate_per_rb(double sinr_linear, const ChannelParams& params = {});

/// Linear transmit power (mW) of every cell on every RB for one epoch.
class TxPowerGrid {
public:
    explicit TxPowerGrid(int num_cells = 0) : cells_(num_cells), mw_(static_cast<std::size_t>(num_cells) * kNumRbs, 0.0) {}

    int num_cells() const { return cells_; }
    double at(int cell, int rb) const { return mw_[index(cell, rb)]; }
    void set(int cell, int rb_begin, int rb_end, double mw);
    std::span<const double> cell(int cell_id) const {
        return {mw_.data() + index(cell_id, 0), static_cast<std::size_t>(kNumRbs)};
    }
    void silence(int cell_id) { set(cell_id, 0, kNumRbs, 0.0); }

    friend bool operator==(const TxPowerGrid&, const TxPowerGrid&) = default;

private:
    std::size_t index(int cell, int rb) const {
        return static_cast<std::size_t>(cell) * kNumRbs + static_cast<std::size_t>(rb);
    }
    int cells_;
    std::vector<double> mw_;
};

/// Per-drop large-scale coupling (antenna gain - pathloss + shadowing) between
/// every UE and every cell.
class LinkBudget {
public:
    LinkBudget(const GridLayout& grid, const ChannelParams& params, std::span<const Vec2> ue_positions,
               std::uint64_t shadowing_seed = 0);

    int num_ues() const { return num_ues_; }
    int num_cells() const { return num_cells_; }
    const ChannelParams& params() const { return params_; }

    double coupling_db(int ue, int cell) const { return coupling_db_[index(ue, cell)]; }
    double coupling_linear(int ue, int cell) const { return coupling_lin_[index(ue, cell)]; }
    double rx_power_dbm(double tx_dbm, int ue, int cell) const { return tx_dbm + coupling_db(ue, cell); }

    /// Cell with the maximum received reference power; lowest id on ties.
    int strongest_cell(int ue) const;

    /// Received power (mW) on one RB summed over every cell except `exclude`.
    double interference_mw(const TxPowerGrid& tx, int ue, int rb, int exclude) const;

    /// SINR of `ue` on `rb` when served by `serving` under the given transmit grid.
    double sinr_per_rb(const TxPowerGrid& tx, int ue, int serving, int rb) const;

    /// RSRQ over [rb_begin, rb_end): N * S / sum(S + I + N), S being the serving
    /// reference power per RB (sent on every RB regardless of data load).
    double rsrq_db(const TxPowerGrid& tx, int ue, int serving, int rb_begin, int rb_end,
                   double reference_tx_mw) const;

private:
    std::size_t index(int ue, int cell) const {
        if (ue < 0 || ue >= num_ues_ || cell < 0 || cell >= num_cells_)
            throw Error("link budget index out of range (ue " + std::to_string(ue) + ", cell " +
                        std::to_string(cell) + ")");
        return static_cast<std::size_t>(ue) * static_cast<std::size_t>(num_cells_) + static_cast<std::size_t>(cell);
    }

    ChannelParams params_;
    int num_ues_;
    int num_cells_;
    double noise_mw_;
    std::vector<double> coupling_db_;
    std::vector<double> coupling_lin_;
};

}  // namespace mann
