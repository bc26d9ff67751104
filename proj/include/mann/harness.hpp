#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "mann/agents.hpp"
#include "mann/linklevel.hpp"
#include "mann/neuralnet.hpp"
#include "mann/pfr_sim.hpp"
#include "mann/topology.hpp"

namespace mann {

/// Worker count: MANN_THREADS if set, else the hardware concurrency.
int default_thread_count();

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Callers write into
/// per-index slots so results merge in index order.
template <class F>
void parallel_for(std::size_t n, int threads, F&& fn) {
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

inline constexpr int kCollectionEpochs = 30;

/// Random-action exploration: every agent cell draws a uniform PFR config each
/// epoch and one sample per (cell, epoch) is recorded.
std::vector<SampleRecord> collect_samples(std::span<const UeDrop> drops, const GridLayout& grid,
                                          const ChannelParams& params, std::uint64_t seed,
                                          int epochs = kCollectionEpochs, MetricKind metric = MetricKind::maxmin,
                                          int threads = 0);

struct RegressionMetrics {
    std::size_t n = 0;
    double correlation = 0.0;
    bool correlation_defined = true;
    double mae = 0.0;
    double mape = 0.0;
    std::size_t mape_excluded = 0;
    double rmse = 0.0;
};

RegressionMetrics regression_metrics(std::span<const double> predictions, std::span<const double> targets);

/// Normalized predictions against normalized targets using the model's scaling.
RegressionMetrics evaluate_regressor(const RegressorModel& model, std::span<const SampleRecord> samples);

enum class CampaignMode { mann, full_reuse, static_config, hard_reuse };

struct Campaign {
    CampaignMode mode = CampaignMode::full_reuse;
    PfrConfig static_config;
    int epochs_per_drop = 3;
    MetricKind metric = MetricKind::maxmin;

    /// "mann", "full", "hard" or "static:BW:THR".
    std::string name() const;
    static Campaign parse(std::string_view mode);
    void validate() const;
};

struct UeThroughput {
    std::string drop_id;
    int cell_id = 0;
    int ue_id = 0;
    double bps = 0.0;
};

struct CellTotal {
    std::string drop_id;
    int cell_id = 0;
    int n_ues = 0;
    double total_bps = 0.0;
};

struct AdoptedConfig {
    std::string drop_id;
    int epoch_id = 0;
    int cell_id = 0;
    PfrConfig config;
};

/// Final-epoch results pooled over the evaluated cells of every drop.
struct EvalSummary {
    std::string campaign;
    std::vector<UeThroughput> ues;
    std::vector<CellTotal> cells;
    std::vector<AdoptedConfig> adopted;

    std::vector<double> pool() const;
    double total_bps() const;
};

EvalSummary run_campaign(const Campaign& campaign, std::span<const UeDrop> drops, const GridLayout& grid,
                         const ChannelParams& params, const RegressorModel* model = nullptr, int threads = 0,
                         std::vector<ProtocolMessage>* trace = nullptr);

/// Mean of the lowest p% of `pool` (at least one value); p == 0 is the minimum.
double bottom_mean(std::vector<double> pool, double percent);

struct PercentileGains {
    std::vector<std::pair<double, double>> gains;  // (percentile, relative gain)
    double totals_ratio = 1.0;

    double at(double percentile) const;
};

inline constexpr std::array<double, 4> kReportPercentiles{10.0, 5.0, 1.0, 0.0};

PercentileGains percentile_improvements(const EvalSummary& test, const EvalSummary& baseline,
                                        std::span<const double> percentiles = kReportPercentiles);

/// Sorted throughputs with empirical CDF ordinates i/n.
std::vector<std::pair<double, double>> empirical_cdf(std::vector<double> pool);

void write_per_ue_csv(const EvalSummary& summary, const std::filesystem::path& path);
void write_per_cell_csv(const EvalSummary& summary, const std::filesystem::path& path);
void cdf_export(const EvalSummary& summary, const std::filesystem::path& path);
/// Per-UE, per-cell, CDF and adopted-config CSVs into `dir`.
void write_summary(const EvalSummary& summary, const std::filesystem::path& dir);
/// Reads per_ue.csv and per_cell.csv written by write_summary.
EvalSummary read_summary(const std::filesystem::path& dir);

/// One row, columns p10,p5,p1,worst,totals_ratio.
void write_gain_table(const PercentileGains& gains, const std::filesystem::path& path);

}  // namespace mann
