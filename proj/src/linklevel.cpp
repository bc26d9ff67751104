#include "mann/linklevel.hpp"

#include <algorithm>
#include <limits>

#include "mann/rng.hpp"

namespace mann {

void ChannelParams::validate() const {
    if (!std::isfinite(tx_power_dbm_total)) throw Error("tx_power_dbm_total must be finite");
    if (!(rb_bandwidth_hz > 0.0)) throw Error("rb_bandwidth_hz must be positive");
    if (!(edge_power_boost_db >= 0.0)) throw Error("edge_power_boost_db must be >= 0");
    if (!(antenna_theta3db_deg > 0.0)) throw Error("antenna_theta3db_deg must be positive");
    if (!(min_distance_m > 0.0)) throw Error("min_distance_m must be positive");
    if (!(shadowing_sigma_db >= 0.0)) throw Error("shadowing_sigma_db must be >= 0");
    if (!(max_spectral_efficiency > 0.0) || !(rate_attenuation > 0.0))
        throw Error("rate curve constants must be positive");
}

double pathloss_db(double distance_m, const ChannelParams& params) {
    const double d = std::max(distance_m, params.min_distance_m);
    return 128.1 + 37.6 * std::log10(d / 1000.0);
}

double wrap_angle_deg(double deg) {
    double a = std::fmod(deg + 180.0, 360.0);
    if (a < 0.0) a += 360.0;
    return a - 180.0;
}

double antenna_gain_db(double angle_off_boresight_deg, const ChannelParams& params) {
    const double ratio = angle_off_boresight_deg / params.antenna_theta3db_deg;
    return params.antenna_boresight_gain_dbi - std::min(12.0 * ratio * ratio, params.antenna_max_atten_db);
}

namespace {

double coupling_db_of(const GridLayout& grid, const CellSector& sector, Vec2 ue_pos, const ChannelParams& params) {
    const Vec2 site = grid.sites.at(static_cast<std::size_t>(sector.site_index));
    const Vec2 d = ue_pos - site;
    const double bearing = std::atan2(d.y, d.x) * 180.0 / kPi;
    const double off = wrap_angle_deg(bearing - sector.boresight_deg);
    return antenna_gain_db(off, params) - pathloss_db(norm(d), params);
}

}  // namespace

double rx_power_dbm(double tx_per_rb_dbm, const GridLayout& grid, const CellSector& sector, Vec2 ue_pos,
                    const ChannelParams& params, double shadowing_db) {
    return tx_per_rb_dbm + coupling_db_of(grid, sector, ue_pos, params) + shadowing_db;
}

int rsrq_report_value(double rsrq_db) {
    if (!std::isfinite(rsrq_db)) {
        if (std::isnan(rsrq_db)) throw Error("rsrq_db must not be NaN");
        return rsrq_db < 0 ? 0 : kMaxRsrqReport;
    }
    if (rsrq_db < -19.5) return 0;
    if (rsrq_db >= -3.0) return kMaxRsrqReport;
    const int v = 1 + static_cast<int>(std::floor((rsrq_db + 19.5) / 0.5));
    return std::clamp(v, 1, kMaxRsrqReport - 1);
}

std::pair<double, double> rsrq_report_interval(int report_value) {
    if (report_value < 0 || report_value > kMaxRsrqReport) throw Error("report value out of range");
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (report_value == 0) return {-inf, -19.5};
    if (report_value == kMaxRsrqReport) return {-3.0, inf};
    const double lo = -19.5 + 0.5 * (report_value - 1);
    return {lo, lo + 0.5};
}

double rate_per_rb(double sinr_linear, const ChannelParams& params) {
    if (!(sinr_linear > 0.0)) return 0.0;
    if (linear_to_db(sinr_linear) < params.min_sinr_db) return 0.0;
    const double se = std::min(params.rate_attenuation * std::log2(1.0 + sinr_linear), params.max_spectral_efficiency);
    return se * params.rb_bandwidth_hz;
}

void TxPowerGrid::set(int cell, int rb_begin, int rb_end, double mw) {
    if (cell < 0 || cell >= cells_ || rb_begin < 0 || rb_end > kNumRbs || rb_begin > rb_end)
        throw Error("tx power grid range out of bounds");
    std::fill(mw_.begin() + static_cast<std::ptrdiff_t>(index(cell, rb_begin)),
              mw_.begin() + static_cast<std::ptrdiff_t>(index(cell, 0) + static_cast<std::size_t>(rb_end)), mw);
}

LinkBudget::LinkBudget(const GridLayout& grid, const ChannelParams& params, std::span<const Vec2> ue_positions,
                       std::uint64_t shadowing_seed)
    : params_(params),
      num_ues_(static_cast<int>(ue_positions.size())),
      num_cells_(grid.num_cells()),
      noise_mw_(params.noise_per_rb_mw()) {
    params_.validate();
    coupling_db_.resize(static_cast<std::size_t>(num_ues_) * static_cast<std::size_t>(num_cells_));
    coupling_lin_.resize(coupling_db_.size());
    for (int u = 0; u < num_ues_; ++u) {
        for (const CellSector& s : grid.sectors) {
            double c = coupling_db_of(grid, s, ue_positions[static_cast<std::size_t>(u)], params_);
            if (params_.shadowing_sigma_db > 0.0)
                c += params_.shadowing_sigma_db * keyed_normal(shadowing_seed, static_cast<std::uint64_t>(u),
                                                               static_cast<std::uint64_t>(s.cell_id));
            const std::size_t i = index(u, s.cell_id);
            coupling_db_[i] = c;
            coupling_lin_[i] = db_to_linear(c);
        }
    }
}

int LinkBudget::strongest_cell(int ue) const {
    int best = 0;
    double best_db = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < num_cells_; ++c) {
        const double v = coupling_db(ue, c);
        if (v > best_db) {
            best_db = v;
            best = c;
        }
    }
    return best;
}

double LinkBudget::interference_mw(const TxPowerGrid& tx, int ue, int rb, int exclude) const {
    const double* row = coupling_lin_.data() + index(ue, 0);
    double sum = 0.0;
    for (int c = 0; c < num_cells_; ++c) {
        if (c == exclude) continue;
        sum += row[c] * tx.at(c, rb);
    }
    return sum;
}

double LinkBudget::sinr_per_rb(const TxPowerGrid& tx, int ue, int serving, int rb) const {
    if (rb < 0 || rb >= kNumRbs) throw Error("rb index out of range");
    const double s = coupling_linear(ue, serving) * tx.at(serving, rb);
    return s / (noise_mw_ + interference_mw(tx, ue, rb, serving));
}

double LinkBudget::rsrq_db(const TxPowerGrid& tx, int ue, int serving, int rb_begin, int rb_end,
                           double reference_tx_mw) const {
    if (rb_begin < 0 || rb_end > kNumRbs || rb_begin >= rb_end) throw Error("rsrq measurement band is empty");
    const double s = coupling_linear(ue, serving) * reference_tx_mw;
    double rssi = 0.0;
    for (int rb = rb_begin; rb < rb_end; ++rb) rssi += s + interference_mw(tx, ue, rb, serving) + noise_mw_;
    return linear_to_db((rb_end - rb_begin) * s / rssi);
}

}  // namespace mann
