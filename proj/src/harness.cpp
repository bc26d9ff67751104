#include "mann/harness.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>
#include <set>
#include <tuple>

#include "mann/io.hpp"
#include "mann/rng.hpp"

namespace mann {

namespace fs = std::filesystem;

int default_thread_count() {
    if (const char* env = std::getenv("MANN_THREADS"); env && *env) {
        try {
            const long long n = parse_int(env);
            if (n >= 1) return static_cast<int>(n);
        } catch (const Error&) {
        }
        throw Error("MANN_THREADS must be a positive integer");
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

int resolve_threads(int threads) { return threads > 0 ? threads : default_thread_count(); }

std::uint64_t string_key(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

std::vector<SampleRecord> collect_samples(std::span<const UeDrop> drops, const GridLayout& grid,
                                          const ChannelParams& params, std::uint64_t seed, int epochs,
                                          MetricKind metric, int threads) {
    if (epochs < 1) throw Error("epochs must be >= 1");
    std::vector<std::vector<SampleRecord>> per_drop(drops.size());
    parallel_for(drops.size(), resolve_threads(threads), [&](std::size_t d) {
        const UeDrop& drop = drops[d];
        const DropSimulator sim(grid, drop, params);
        Rng rng(derive_seed(seed, "collect", string_key(drop.drop_id)));
        TxPowerGrid tx = sim.bootstrap_tx();
        std::vector<BandPlan> plans = sim.full_reuse_plans();
        auto& out = per_drop[d];
        for (int e = 0; e < epochs; ++e) {
            const std::vector<RsrqReport> reports = sim.measure_rsrq(tx, plans);
            std::map<int, PfrConfig> configs;
            for (int c : grid.inner_cell_ids)
                configs[c] = PfrConfig::from_action_index(static_cast<int>(rng.below(kNumActions)));
            EpochOutcome outcome = sim.schedule_epoch(configs, reports, e);
            for (int c : grid.inner_cell_ids) {
                SampleRecord s;
                s.drop_id = drop.drop_id;
                s.cell_id = c;
                s.epoch_id = e;
                s.bins = extract_features(reports_of_cell(drop, reports, c)).counts;
                s.center_rbs = configs[c].center_rbs;
                s.rsrq_threshold = configs[c].rsrq_threshold;
                s.raw_metric = cell_metric(outcome.report(c), metric);
                out.push_back(std::move(s));
            }
            tx = std::move(outcome.tx);
            plans = std::move(outcome.plans);
        }
    });
    std::vector<SampleRecord> all;
    for (auto& v : per_drop) std::move(v.begin(), v.end(), std::back_inserter(all));
    return all;
}

RegressionMetrics regression_metrics(std::span<const double> predictions, std::span<const double> targets) {
    if (predictions.size() != targets.size()) throw Error("predictions and targets differ in length");
    if (predictions.size() < 2) throw Error("need at least two prediction/target pairs");
    const auto n = static_cast<double>(predictions.size());
    RegressionMetrics m;
    m.n = predictions.size();
    double mean_p = 0.0;
    double mean_t = 0.0;
    for (std::size_t i = 0; i < m.n; ++i) {
        mean_p += predictions[i];
        mean_t += targets[i];
    }
    mean_p /= n;
    mean_t /= n;
    double cov = 0.0;
    double var_p = 0.0;
    double var_t = 0.0;
    double abs_sum = 0.0;
    double sq_sum = 0.0;
    double ape_sum = 0.0;
    std::size_t ape_n = 0;
    for (std::size_t i = 0; i < m.n; ++i) {
        const double dp = predictions[i] - mean_p;
        const double dt = targets[i] - mean_t;
        cov += dp * dt;
        var_p += dp * dp;
        var_t += dt * dt;
        const double err = predictions[i] - targets[i];
        abs_sum += std::abs(err);
        sq_sum += err * err;
        if (targets[i] != 0.0) {
            ape_sum += std::abs(err / targets[i]);
            ++ape_n;
        }
    }
    m.mae = abs_sum / n;
    m.rmse = std::sqrt(sq_sum / n);
    m.mape_excluded = m.n - ape_n;
    m.mape = ape_n ? ape_sum / static_cast<double>(ape_n) : 0.0;
    if (var_t == 0.0 || var_p == 0.0) {
        m.correlation_defined = false;
        m.correlation = 0.0;
    } else {
        m.correlation = cov / std::sqrt(var_p * var_t);
    }
    return m;
}

RegressionMetrics evaluate_regressor(const RegressorModel& model, std::span<const SampleRecord> samples) {
    std::vector<double> pred;
    std::vector<double> target;
    pred.reserve(samples.size());
    target.reserve(samples.size());
    for (const SampleRecord& s : samples) {
        const NormalizedSample ns = normalize(s, model.normalization);
        pred.push_back(model.predict(ns.input));
        target.push_back(ns.target);
    }
    return regression_metrics(pred, target);
}

std::string Campaign::name() const {
    switch (mode) {
        case CampaignMode::mann: return "mann";
        case CampaignMode::full_reuse: return "full";
        case CampaignMode::hard_reuse: return "hard";
        case CampaignMode::static_config:
            return "static:" + std::to_string(static_config.center_rbs) + ":" + std::to_string(static_config.rsrq_threshold);
    }
    return "unknown";
}

Campaign Campaign::parse(std::string_view mode) {
    Campaign c;
    if (mode == "mann") {
        c.mode = CampaignMode::mann;
    } else if (mode == "full") {
        c.mode = CampaignMode::full_reuse;
    } else if (mode == "hard") {
        c.mode = CampaignMode::hard_reuse;
    } else if (mode.starts_with("static:")) {
        const std::string_view rest = mode.substr(7);
        const std::size_t colon = rest.find(':');
        if (colon == std::string_view::npos) throw Error("static mode must be static:BW:THR");
        c.mode = CampaignMode::static_config;
        c.static_config = {static_cast<int>(parse_int(rest.substr(0, colon))),
                           static_cast<int>(parse_int(rest.substr(colon + 1)))};
        c.static_config.validate();
    } else {
        throw Error("unknown campaign mode '" + std::string(mode) + "'");
    }
    return c;
}

void Campaign::validate() const {
    if (epochs_per_drop < 1) throw Error("epochs_per_drop must be >= 1");
    if (mode == CampaignMode::static_config) static_config.validate();
}

std::vector<double> EvalSummary::pool() const {
    std::vector<double> out;
    out.reserve(ues.size());
    for (const UeThroughput& u : ues) out.push_back(u.bps);
    return out;
}

double EvalSummary::total_bps() const {
    double s = 0.0;
    for (const UeThroughput& u : ues) s += u.bps;
    return s;
}

EvalSummary run_campaign(const Campaign& campaign, std::span<const UeDrop> drops, const GridLayout& grid,
                         const ChannelParams& params, const RegressorModel* model, int threads,
                         std::vector<ProtocolMessage>* trace) {
    campaign.validate();
    if (campaign.mode == CampaignMode::mann && model == nullptr) throw Error("mann campaign requires a trained model");
    if (campaign.mode == CampaignMode::mann && model->metric_kind != campaign.metric)
        throw Error("model metric does not match the campaign metric");

    struct DropResult {
        EvalSummary part;
        std::vector<ProtocolMessage> messages;
    };
    std::vector<DropResult> results(drops.size());

    parallel_for(drops.size(), resolve_threads(threads), [&](std::size_t d) {
        const UeDrop& drop = drops[d];
        const DropSimulator sim(grid, drop, params);
        DropResult& res = results[d];
        TxPowerGrid tx = sim.bootstrap_tx();
        std::vector<BandPlan> plans = sim.full_reuse_plans();
        EpochOutcome outcome;
        for (int e = 0; e < campaign.epochs_per_drop; ++e) {
            const std::vector<RsrqReport> reports = sim.measure_rsrq(tx, plans);
            std::map<int, PfrConfig> configs;
            switch (campaign.mode) {
                case CampaignMode::mann: {
                    RoundOutcome round = decision_round(drop, grid.inner_cell_ids, reports, *model, e);
                    configs = std::move(round.configs);
                    std::move(round.messages.begin(), round.messages.end(), std::back_inserter(res.messages));
                    outcome = sim.schedule_epoch(configs, reports, e);
                    break;
                }
                case CampaignMode::static_config:
                    for (int c : grid.inner_cell_ids) configs[c] = campaign.static_config;
                    outcome = sim.schedule_epoch(configs, reports, e);
                    break;
                case CampaignMode::hard_reuse:
                    outcome = sim.run(sim.hard_reuse_plans(), reports, e);
                    break;
                case CampaignMode::full_reuse:
                    outcome = sim.full_reuse_epoch(e);
                    break;
            }
            for (const auto& [cell, cfg] : configs) res.part.adopted.push_back({drop.drop_id, e, cell, cfg});
            tx = outcome.tx;
            plans = outcome.plans;
        }
        for (int c : grid.eval_cell_ids) {
            const ThroughputReport& r = outcome.report(c);
            for (const auto& [ue, bps] : r.per_ue_bps) res.part.ues.push_back({drop.drop_id, c, ue, bps});
            res.part.cells.push_back({drop.drop_id, c, r.n_ues(), r.total_bps()});
        }
    });

    EvalSummary summary;
    summary.campaign = campaign.name();
    for (DropResult& r : results) {
        std::move(r.part.ues.begin(), r.part.ues.end(), std::back_inserter(summary.ues));
        std::move(r.part.cells.begin(), r.part.cells.end(), std::back_inserter(summary.cells));
        std::move(r.part.adopted.begin(), r.part.adopted.end(), std::back_inserter(summary.adopted));
        if (trace) std::move(r.messages.begin(), r.messages.end(), std::back_inserter(*trace));
    }
    return summary;
}

double bottom_mean(std::vector<double> pool, double percent) {
    if (pool.empty()) throw Error("empty throughput pool");
    if (!(percent >= 0.0 && percent <= 100.0)) throw Error("percentile must be in [0, 100]");
    std::sort(pool.begin(), pool.end());
    std::size_t k = static_cast<std::size_t>(std::floor(percent / 100.0 * static_cast<double>(pool.size())));
    k = std::clamp<std::size_t>(k, 1, pool.size());
    return std::accumulate(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k), 0.0) / static_cast<double>(k);
}

double PercentileGains::at(double percentile) const {
    for (const auto& [p, g] : gains)
        if (p == percentile) return g;
    throw Error("percentile " + format_double(percentile) + " not in table");
}

PercentileGains percentile_improvements(const EvalSummary& test, const EvalSummary& baseline,
                                        std::span<const double> percentiles) {
    if (test.ues.empty() || baseline.ues.empty()) throw Error("empty throughput pool");
    auto keys = [](const EvalSummary& s) {
        std::set<std::tuple<std::string, int, int>> k;
        for (const UeThroughput& u : s.ues) k.emplace(u.drop_id, u.cell_id, u.ue_id);
        return k;
    };
    if (keys(test) != keys(baseline)) throw Error("test and baseline pools cover different UEs");

    const std::vector<double> tp = test.pool();
    const std::vector<double> bp = baseline.pool();
    PercentileGains out;
    for (double p : percentiles) out.gains.emplace_back(p, bottom_mean(tp, p) / bottom_mean(bp, p) - 1.0);
    out.totals_ratio = test.total_bps() / baseline.total_bps();
    return out;
}

std::vector<std::pair<double, double>> empirical_cdf(std::vector<double> pool) {
    std::sort(pool.begin(), pool.end());
    std::vector<std::pair<double, double>> out;
    out.reserve(pool.size());
    const auto n = static_cast<double>(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) out.emplace_back(pool[i], static_cast<double>(i + 1) / n);
    return out;
}

void write_per_ue_csv(const EvalSummary& summary, const fs::path& path) {
    std::string s = "drop_id,cell_id,ue_id,throughput_bps\n";
    for (const UeThroughput& u : summary.ues)
        s += u.drop_id + "," + std::to_string(u.cell_id) + "," + std::to_string(u.ue_id) + "," + format_double(u.bps) + "\n";
    write_text_file(path, s);
}

void write_per_cell_csv(const EvalSummary& summary, const fs::path& path) {
    std::string s = "drop_id,cell_id,n_ues,total_bps\n";
    for (const CellTotal& c : summary.cells)
        s += c.drop_id + "," + std::to_string(c.cell_id) + "," + std::to_string(c.n_ues) + "," +
             format_double(c.total_bps) + "\n";
    write_text_file(path, s);
}

void cdf_export(const EvalSummary& summary, const fs::path& path) {
    if (summary.ues.empty()) throw Error("cannot export the CDF of an empty pool");
    std::string s = "throughput_bps,cdf\n";
    for (const auto& [x, f] : empirical_cdf(summary.pool())) s += format_double(x) + "," + format_double(f) + "\n";
    write_text_file(path, s);
}

void write_summary(const EvalSummary& summary, const fs::path& dir) {
    fs::create_directories(dir);
    write_per_ue_csv(summary, dir / "per_ue.csv");
    write_per_cell_csv(summary, dir / "per_cell.csv");
    cdf_export(summary, dir / "cdf.csv");
    std::string s = "drop_id,epoch_id,cell_id,center_rbs,threshold\n";
    for (const AdoptedConfig& a : summary.adopted)
        s += a.drop_id + "," + std::to_string(a.epoch_id) + "," + std::to_string(a.cell_id) + "," +
             std::to_string(a.config.center_rbs) + "," + std::to_string(a.config.rsrq_threshold) + "\n";
    write_text_file(dir / "adopted.csv", s);
}

EvalSummary read_summary(const fs::path& dir) {
    EvalSummary summary;
    summary.campaign = dir.filename().string();
    {
        constexpr std::string_view header[] = {"drop_id", "cell_id", "ue_id", "throughput_bps"};
        CsvReader r(dir / "per_ue.csv", header);
        std::vector<std::string_view> f;
        while (r.next(f))
            summary.ues.push_back({std::string(f[0]), static_cast<int>(parse_int(f[1])), static_cast<int>(parse_int(f[2])),
                                   parse_double(f[3])});
    }
    {
        constexpr std::string_view header[] = {"drop_id", "cell_id", "n_ues", "total_bps"};
        CsvReader r(dir / "per_cell.csv", header);
        std::vector<std::string_view> f;
        while (r.next(f))
            summary.cells.push_back({std::string(f[0]), static_cast<int>(parse_int(f[1])),
                                     static_cast<int>(parse_int(f[2])), parse_double(f[3])});
    }
    return summary;
}

void write_gain_table(const PercentileGains& gains, const fs::path& path) {
    std::string s = "p10,p5,p1,worst,totals_ratio\n";
    s += format_double(gains.at(10.0)) + "," + format_double(gains.at(5.0)) + "," + format_double(gains.at(1.0)) + "," +
         format_double(gains.at(0.0)) + "," + format_double(gains.totals_ratio) + "\n";
    write_text_file(path, s);
}

}  // namespace mann
