#include "mann/pfr_sim.hpp"

#include <algorithm>
#include <limits>

namespace mann {

void PfrConfig::validate() const {
    if (std::find(kCenterBandwidths.begin(), kCenterBandwidths.end(), center_rbs) == kCenterBandwidths.end())
        throw Error("center_rbs must be one of {40, 64, 88}, got " + std::to_string(center_rbs));
    if (rsrq_threshold < kMinThreshold || rsrq_threshold > kMaxThreshold)
        throw Error("rsrq_threshold must be in 25..33, got " + std::to_string(rsrq_threshold));
}

int bandwidth_index(int center_rbs) {
    const auto it = std::find(kCenterBandwidths.begin(), kCenterBandwidths.end(), center_rbs);
    if (it == kCenterBandwidths.end()) throw Error("unknown center bandwidth " + std::to_string(center_rbs));
    return static_cast<int>(it - kCenterBandwidths.begin());
}

int PfrConfig::action_index() const {
    validate();
    return bandwidth_index(center_rbs) * kNumThresholds + (rsrq_threshold - kMinThreshold);
}

PfrConfig PfrConfig::from_action_index(int index) {
    if (index < 0 || index >= kNumActions) throw Error("action index out of range");
    return {kCenterBandwidths[static_cast<std::size_t>(index / kNumThresholds)],
            kMinThreshold + index % kNumThresholds};
}

std::vector<PfrConfig> all_pfr_configs() {
    std::vector<PfrConfig> out;
    for (int i = 0; i < kNumActions; ++i) out.push_back(PfrConfig::from_action_index(i));
    return out;
}

RbRange edge_block(int center_rbs, int mod3) {
    if (center_rbs < 0 || center_rbs > kNumRbs || mod3 < 0 || mod3 > 2) throw Error("invalid edge block request");
    const int width = (kNumRbs - center_rbs) / 3;
    const int begin = center_rbs + mod3 * width;
    return {begin, begin + width};
}

BandPlan band_plan_for(const PfrConfig& config, const CellSector& sector, const ChannelParams& params) {
    config.validate();
    BandPlan plan;
    plan.cell_id = sector.cell_id;
    plan.center = {0, config.center_rbs};
    plan.edge = edge_block(config.center_rbs, sector.sector_index_mod3);
    plan.center_power_dbm = params.center_power_per_rb_dbm();
    plan.edge_power_dbm = params.edge_power_per_rb_dbm();
    plan.rsrq_threshold = config.rsrq_threshold;
    return plan;
}

BandPlan full_reuse_plan(const CellSector& sector, const ChannelParams& params) {
    BandPlan plan;
    plan.cell_id = sector.cell_id;
    plan.center = {0, kNumRbs};
    plan.edge = {kNumRbs, kNumRbs};
    plan.center_power_dbm = params.center_power_per_rb_dbm();
    plan.edge_power_dbm = params.center_power_per_rb_dbm();
    plan.always_on = true;
    return plan;
}

BandPlan hard_reuse_plan(const CellSector& sector, const ChannelParams& params) {
    static constexpr std::array<RbRange, 3> blocks{{{0, 33}, {33, 66}, {66, kNumRbs}}};
    BandPlan plan;
    plan.cell_id = sector.cell_id;
    plan.center = {0, 0};
    plan.edge = blocks.at(static_cast<std::size_t>(sector.sector_index_mod3));
    plan.center_power_dbm = params.center_power_per_rb_dbm();
    plan.edge_power_dbm = params.edge_power_per_rb_dbm();
    return plan;
}

UePartition classify_ues(std::span<const RsrqReport> reports, int threshold) {
    UePartition p;
    for (const RsrqReport& r : reports) {
        if (r.report_value > threshold)
            p.center_ues.push_back(r.ue_id);
        else
            p.edge_ues.push_back(r.ue_id);
    }
    return p;
}

double ThroughputReport::total_bps() const {
    double sum = 0.0;
    for (const auto& [ue, bps] : per_ue_bps) sum += bps;
    return sum;
}

double cell_metric(const ThroughputReport& report, MetricKind kind) {
    if (report.per_ue_bps.empty()) return 0.0;
    if (kind == MetricKind::mean) return report.total_bps() / report.n_ues();
    double lowest = std::numeric_limits<double>::infinity();
    for (const auto& [ue, bps] : report.per_ue_bps) lowest = std::min(lowest, bps);
    return report.n_ues() * lowest;
}

std::vector<RsrqReport> reports_of_cell(const UeDrop& drop, std::span<const RsrqReport> reports, int cell_id) {
    std::vector<RsrqReport> out;
    for (const RsrqReport& r : reports)
        if (drop.serving_cell.at(static_cast<std::size_t>(r.ue_id)) == cell_id) out.push_back(r);
    return out;
}

DropSimulator::DropSimulator(const GridLayout& grid, const UeDrop& drop, const ChannelParams& params)
    : grid_(&grid), drop_(&drop), params_(params), link_(grid, params, drop.positions, drop.seed) {
    if (drop.serving_cell.size() != drop.positions.size()) throw Error("drop has no serving cell for every UE");
    for (int c : drop.serving_cell)
        if (c < 0 || c >= grid.num_cells()) throw Error("drop references unknown cell " + std::to_string(c));
}

std::vector<BandPlan> DropSimulator::full_reuse_plans() const {
    std::vector<BandPlan> plans;
    for (const CellSector& s : grid_->sectors) plans.push_back(full_reuse_plan(s, params_));
    return plans;
}

std::vector<BandPlan> DropSimulator::plans_for(const std::map<int, PfrConfig>& inner_configs) const {
    std::vector<BandPlan> plans = full_reuse_plans();
    for (int c : grid_->inner_cell_ids) {
        const auto it = inner_configs.find(c);
        if (it == inner_configs.end()) throw Error("no PFR config for active cell " + std::to_string(c));
        plans[static_cast<std::size_t>(c)] = band_plan_for(it->second, grid_->sector(c), params_);
    }
    return plans;
}

std::vector<BandPlan> DropSimulator::hard_reuse_plans() const {
    std::vector<BandPlan> plans = full_reuse_plans();
    for (int c : grid_->inner_cell_ids) plans[static_cast<std::size_t>(c)] = hard_reuse_plan(grid_->sector(c), params_);
    return plans;
}

TxPowerGrid DropSimulator::bootstrap_tx() const { return full_reuse_epoch(-1).tx; }

std::vector<RsrqReport> DropSimulator::measure_rsrq(const TxPowerGrid& tx, std::span<const BandPlan> plans) const {
    std::vector<RsrqReport> out;
    out.reserve(static_cast<std::size_t>(drop_->num_ues()));
    for (int u = 0; u < drop_->num_ues(); ++u) {
        const int c = drop_->serving_cell[static_cast<std::size_t>(u)];
        const BandPlan& plan = plans[static_cast<std::size_t>(c)];
        const RbRange band = plan.center.empty() ? RbRange{0, kNumRbs} : plan.center;
        const double db = link_.rsrq_db(tx, u, c, band.begin, band.end, db_to_linear(plan.center_power_dbm));
        out.push_back({u, rsrq_report_value(db), db});
    }
    return out;
}

EpochOutcome DropSimulator::run(std::vector<BandPlan> plans, std::span<const RsrqReport> reports, int epoch_id) const {
    const int n_cells = grid_->num_cells();
    if (static_cast<int>(plans.size()) != n_cells) throw Error("need one band plan per cell");

    EpochOutcome out;
    out.epoch_id = epoch_id;
    out.ue_class.assign(static_cast<std::size_t>(drop_->num_ues()), RbClass::center);

    std::vector<std::array<int, 2>> class_counts(static_cast<std::size_t>(n_cells), {0, 0});
    for (int u = 0; u < drop_->num_ues(); ++u) {
        const int c = drop_->serving_cell[static_cast<std::size_t>(u)];
        const BandPlan& plan = plans[static_cast<std::size_t>(c)];
        RbClass cls;
        if (plan.edge.empty()) {
            cls = RbClass::center;
        } else if (plan.center.empty()) {
            cls = RbClass::edge;
        } else {
            if (static_cast<std::size_t>(u) >= reports.size() || reports[static_cast<std::size_t>(u)].ue_id != u)
                throw Error("missing RSRQ report for UE " + std::to_string(u));
            cls = reports[static_cast<std::size_t>(u)].report_value > plan.rsrq_threshold ? RbClass::center
                                                                                          : RbClass::edge;
        }
        out.ue_class[static_cast<std::size_t>(u)] = cls;
        ++class_counts[static_cast<std::size_t>(c)][cls == RbClass::center ? 0 : 1];
    }

    out.tx = TxPowerGrid(n_cells);
    for (int c = 0; c < n_cells; ++c) {
        const BandPlan& plan = plans[static_cast<std::size_t>(c)];
        const auto& counts = class_counts[static_cast<std::size_t>(c)];
        if (plan.always_on || counts[0] > 0)
            out.tx.set(c, plan.center.begin, plan.center.end, db_to_linear(plan.center_power_dbm));
        if (!plan.edge.empty() && (plan.always_on || counts[1] > 0))
            out.tx.set(c, plan.edge.begin, plan.edge.end, db_to_linear(plan.edge_power_dbm));
    }

    out.reports.resize(static_cast<std::size_t>(n_cells));
    for (int c = 0; c < n_cells; ++c) {
        out.reports[static_cast<std::size_t>(c)].cell_id = c;
        out.reports[static_cast<std::size_t>(c)].epoch_id = epoch_id;
    }
    for (int u = 0; u < drop_->num_ues(); ++u) {
        const int c = drop_->serving_cell[static_cast<std::size_t>(u)];
        const RbClass cls = out.ue_class[static_cast<std::size_t>(u)];
        const RbRange band = plans[static_cast<std::size_t>(c)].range(cls);
        const int sharers = class_counts[static_cast<std::size_t>(c)][cls == RbClass::center ? 0 : 1];
        double rate_sum = 0.0;
        for (int rb = band.begin; rb < band.end; ++rb) rate_sum += rate_per_rb(link_.sinr_per_rb(out.tx, u, c, rb), params_);
        // band.size()/sharers RBs each, at the band-average per-RB rate
        out.reports[static_cast<std::size_t>(c)].per_ue_bps[u] = rate_sum / sharers;
    }
    out.plans = std::move(plans);
    return out;
}

EpochOutcome DropSimulator::schedule_epoch(const std::map<int, PfrConfig>& inner_configs,
                                           std::span<const RsrqReport> reports, int epoch_id) const {
    return run(plans_for(inner_configs), reports, epoch_id);
}

EpochOutcome DropSimulator::full_reuse_epoch(int epoch_id) const { return run(full_reuse_plans(), {}, epoch_id); }

}  // namespace mann
