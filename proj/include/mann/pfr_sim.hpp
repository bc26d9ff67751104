#pragma once

#include <compare>
#include <map>
#include <span>
#include <vector>

#include "mann/common.hpp"
#include "mann/linklevel.hpp"
#include "mann/topology.hpp"

namespace mann {

/// Half-open RB index interval [begin, end).
struct RbRange {
    int begin = 0;
    int end = 0;

    int size() const { return end - begin; }
    bool empty() const { return end <= begin; }
    bool contains(int rb) const { return rb >= begin && rb < end; }
    bool overlaps(const RbRange& o) const { return !empty() && !o.empty() && begin < o.end && o.begin < end; }
    friend bool operator==(const RbRange&, const RbRange&) = default;
};

/// One combined cell action: center bandwidth and RSRQ threshold.
struct PfrConfig {
    int center_rbs = 40;
    int rsrq_threshold = kMinThreshold;

    void validate() const;
    /// Bandwidth-major index in [0, 27).
    int action_index() const;
    static PfrConfig from_action_index(int index);

    friend auto operator<=>(const PfrConfig&, const PfrConfig&) = default;
};

std::vector<PfrConfig> all_pfr_configs();
int bandwidth_index(int center_rbs);

enum class RbClass { center, edge };

struct BandPlan {
    int cell_id = 0;
    RbRange center;
    RbRange edge;
    double center_power_dbm = 0.0;
    double edge_power_dbm = 0.0;
    /// Report values strictly above this are center UEs.
    int rsrq_threshold = kMinThreshold;
    /// Full-reuse plans transmit on every RB whether or not the cell has UEs.
    bool always_on = false;

    const RbRange& range(RbClass cls) const { return cls == RbClass::center ? center : edge; }
    double power_dbm(RbClass cls) const { return cls == RbClass::center ? center_power_dbm : edge_power_dbm; }
};

/// The `mod3`-th of three equal contiguous slices of [center_rbs, 100).
RbRange edge_block(int center_rbs, int mod3);

BandPlan band_plan_for(const PfrConfig& config, const CellSector& sector, const ChannelParams& params = {});
BandPlan full_reuse_plan(const CellSector& sector, const ChannelParams& params = {});
/// Reuse-3: the whole band split 33/33/34 by mod3 group, no center band.
BandPlan hard_reuse_plan(const CellSector& sector, const ChannelParams& params = {});

struct UePartition {
    std::vector<int> center_ues;
    std::vector<int> edge_ues;
};

UePartition classify_ues(std::span<const RsrqReport> reports, int threshold);

struct ThroughputReport {
    int cell_id = 0;
    int epoch_id = 0;
    std::map<int, double> per_ue_bps;

    int n_ues() const { return static_cast<int>(per_ue_bps.size()); }
    double total_bps() const;
};

/// Local cell metric: n * min throughput (maxmin) or mean throughput.
double cell_metric(const ThroughputReport& report, MetricKind kind);

struct EpochOutcome {
    int epoch_id = 0;
    std::vector<BandPlan> plans;
    std::vector<ThroughputReport> reports;  // indexed by cell id
    TxPowerGrid tx;
    std::vector<RbClass> ue_class;  // indexed by UE id

    const ThroughputReport& report(int cell_id) const { return reports.at(static_cast<std::size_t>(cell_id)); }
};

/// Epoch-level downlink model for one drop. Full-buffer proportional fair with
/// frequency-flat channels reduces to an equal RB share per band.
class DropSimulator {
public:
    DropSimulator(const GridLayout& grid, const UeDrop& drop, const ChannelParams& params = {});

    const GridLayout& grid() const { return *grid_; }
    const UeDrop& drop() const { return *drop_; }
    const LinkBudget& link() const { return link_; }
    const ChannelParams& params() const { return params_; }

    std::vector<BandPlan> full_reuse_plans() const;
    /// Inner cells take their PFR plan from `inner_configs`; ring cells stay on full reuse.
    std::vector<BandPlan> plans_for(const std::map<int, PfrConfig>& inner_configs) const;
    std::vector<BandPlan> hard_reuse_plans() const;

    /// Transmit grid of the bootstrap state (all cells full reuse).
    TxPowerGrid bootstrap_tx() const;

    /// One RSRQ report per UE (indexed by UE id), measured over the serving
    /// cell's center band of `plans` under transmit grid `tx`.
    std::vector<RsrqReport> measure_rsrq(const TxPowerGrid& tx, std::span<const BandPlan> plans) const;

    EpochOutcome run(std::vector<BandPlan> plans, std::span<const RsrqReport> reports, int epoch_id) const;
    EpochOutcome schedule_epoch(const std::map<int, PfrConfig>& inner_configs, std::span<const RsrqReport> reports,
                                int epoch_id) const;
    EpochOutcome full_reuse_epoch(int epoch_id) const;

private:
    const GridLayout* grid_;
    const UeDrop* drop_;
    ChannelParams params_;
    LinkBudget link_;
};

/// Reports of the UEs served by `cell_id`, in UE-id order.
std::vector<RsrqReport> reports_of_cell(const UeDrop& drop, std::span<const RsrqReport> reports, int cell_id);

}  // namespace mann
