#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "mann/harness.hpp"
#include "mann/io.hpp"
#include "mann/rng.hpp"

using namespace mann;
namespace fs = std::filesystem;

namespace {

std::vector<UeDrop> small_drops(int n, std::uint64_t seed) {
    const GridLayout g = build_grid();
    const auto configs = enumerate_configs();
    std::vector<UeDrop> out;
    for (int i = 0; i < n; ++i)
        out.push_back(generate_drop(configs[static_cast<std::size_t>(i * 41 % 180)], g, derive_seed(seed, "drops", i),
                                    "h" + std::to_string(i)));
    return out;
}

EvalSummary summary_of(std::vector<double> bps) {
    EvalSummary s;
    for (std::size_t i = 0; i < bps.size(); ++i) s.ues.push_back({"d", 0, static_cast<int>(i), bps[i]});
    return s;
}

}  // namespace

TEST_CASE("sample count law and determinism") {
    const GridLayout g = build_grid();
    const auto drops = small_drops(2, 1);
    const auto a = collect_samples(drops, g, {}, 9, 3, MetricKind::maxmin, 1);
    const auto b = collect_samples(drops, g, {}, 9, 3, MetricKind::maxmin, 2);
    CHECK(a.size() == 2 * 3 * 9);
    CHECK(a == b);
    const auto c = collect_samples(drops, g, {}, 10, 3, MetricKind::maxmin, 1);
    CHECK_FALSE(a == c);
    CHECK_THROWS_AS(collect_samples(drops, g, {}, 9, 0), Error);
}

TEST_CASE("samples describe the cell they were taken from") {
    const GridLayout g = build_grid();
    const auto drops = small_drops(3, 2);
    const auto samples = collect_samples(drops, g, {}, 4, 4, MetricKind::maxmin, 1);
    std::set<PfrConfig> actions;
    for (const SampleRecord& s : samples) {
        const UeDrop& d = *std::find_if(drops.begin(), drops.end(), [&](const UeDrop& x) { return x.drop_id == s.drop_id; });
        int total = 0;
        for (int b : s.bins) total += b;
        CHECK(total == static_cast<int>(d.ues_of_cell(s.cell_id).size()));
        CHECK(s.raw_metric >= 0.0);
        CHECK(g.is_inner(s.cell_id));
        CHECK_NOTHROW(PfrConfig{s.center_rbs, s.rsrq_threshold}.validate());
        if (total == 0) CHECK(s.raw_metric == 0.0);
        actions.insert({s.center_rbs, s.rsrq_threshold});
    }
    CHECK(actions.size() > 20);
}

TEST_CASE("collected raw metric equals a replay of the same epoch") {
    const GridLayout g = build_grid();
    const auto drops = small_drops(1, 3);
    const auto samples = collect_samples(drops, g, {}, 5, 2, MetricKind::maxmin, 1);
    const DropSimulator sim(g, drops[0]);
    const auto boot = sim.measure_rsrq(sim.bootstrap_tx(), sim.full_reuse_plans());
    std::map<int, PfrConfig> cfg;
    for (const SampleRecord& s : samples)
        if (s.epoch_id == 0) cfg[s.cell_id] = {s.center_rbs, s.rsrq_threshold};
    const EpochOutcome out = sim.schedule_epoch(cfg, boot, 0);
    for (const SampleRecord& s : samples)
        if (s.epoch_id == 0) CHECK(s.raw_metric == cell_metric(out.report(s.cell_id), MetricKind::maxmin));
}

TEST_CASE("regression metrics") {
    const std::vector<double> t{0.1, 0.4, 0.2, 0.8};
    RegressionMetrics m = regression_metrics(t, t);
    CHECK(m.correlation == doctest::Approx(1.0));
    CHECK(m.mae == 0.0);
    CHECK(m.rmse == 0.0);
    CHECK(m.n == 4);

    std::vector<double> shifted = t;
    for (double& x : shifted) x += 0.1;
    m = regression_metrics(shifted, t);
    CHECK(m.mae == doctest::Approx(0.1));
    CHECK(m.rmse == doctest::Approx(0.1));
    CHECK(m.correlation == doctest::Approx(1.0));

    const std::vector<double> flat{0.3, 0.3, 0.3};
    CHECK_FALSE(regression_metrics(std::vector<double>{0.1, 0.2, 0.3}, flat).correlation_defined);

    const std::vector<double> with_zero{0.0, 0.5, 1.0};
    m = regression_metrics(std::vector<double>{0.1, 0.6, 0.9}, with_zero);
    CHECK(m.mape_excluded == 1);
    CHECK(m.mape == doctest::Approx((0.1 / 0.5 + 0.1 / 1.0) / 2));

    CHECK_THROWS_AS(regression_metrics(std::vector<double>{0.1}, std::vector<double>{0.1}), Error);
    CHECK_THROWS_AS(regression_metrics(std::vector<double>{0.1, 0.2}, std::vector<double>{0.1}), Error);
}

TEST_CASE("campaign modes") {
    CHECK(Campaign::parse("mann").mode == CampaignMode::mann);
    CHECK(Campaign::parse("full").mode == CampaignMode::full_reuse);
    CHECK(Campaign::parse("hard").mode == CampaignMode::hard_reuse);
    const Campaign s = Campaign::parse("static:64:29");
    CHECK(s.mode == CampaignMode::static_config);
    CHECK(s.static_config == PfrConfig{64, 29});
    CHECK(s.name() == "static:64:29");
    CHECK_THROWS_AS(Campaign::parse("static:50:29"), Error);
    CHECK_THROWS_AS(Campaign::parse("static:64"), Error);
    CHECK_THROWS_AS(Campaign::parse("greedy"), Error);
}

TEST_CASE("mann campaigns need a model with the right metric") {
    const GridLayout g = build_grid();
    const auto drops = small_drops(1, 4);
    Campaign c;
    c.mode = CampaignMode::mann;
    CHECK_THROWS_AS(run_campaign(c, drops, g, {}, nullptr, 1), Error);
    RegressorModel m;
    m.weights = MlpWeights::standard(1);
    m.metric_kind = MetricKind::mean;
    CHECK_THROWS_AS(run_campaign(c, drops, g, {}, &m, 1), Error);
}

TEST_CASE("campaign results cover eval cells only and are deterministic") {
    const GridLayout g = build_grid();
    const auto drops = small_drops(3, 5);
    RegressorModel m;
    m.weights = MlpWeights::standard(2);
    m.normalization = {20, 1e7};
    Campaign c;
    c.mode = CampaignMode::mann;
    std::vector<ProtocolMessage> trace;
    const EvalSummary a = run_campaign(c, drops, g, {}, &m, 1, &trace);
    const EvalSummary b = run_campaign(c, drops, g, {}, &m, 3);
    CHECK(a.pool() == b.pool());
    CHECK(trace.size() == 3 * 3 * 10);
    std::size_t expected_ues = 0;
    for (const UeDrop& d : drops)
        for (int e : g.eval_cell_ids) expected_ues += d.ues_of_cell(e).size();
    CHECK(a.ues.size() == expected_ues);
    for (const UeThroughput& u : a.ues)
        CHECK(std::find(g.eval_cell_ids.begin(), g.eval_cell_ids.end(), u.cell_id) != g.eval_cell_ids.end());
    CHECK(a.cells.size() == 3 * g.eval_cell_ids.size());
    CHECK(a.adopted.size() == 3 * 3 * 9);
    for (const AdoptedConfig& ad : a.adopted) CHECK_NOTHROW(ad.config.validate());
    for (std::size_t i = 0; i + 1 < a.ues.size(); ++i) CHECK(a.ues[i].drop_id <= a.ues[i + 1].drop_id);
}

TEST_CASE("static campaigns give every inner cell the same plan") {
    const GridLayout g = build_grid();
    const auto drops = small_drops(1, 6);
    Campaign c = Campaign::parse("static:40:25");
    const EvalSummary s = run_campaign(c, drops, g, {}, nullptr, 1);
    CHECK(s.adopted.size() == 3 * 9);
    for (const AdoptedConfig& a : s.adopted) CHECK(a.config == PfrConfig{40, 25});
    const Campaign full = Campaign::parse("full");
    const EvalSummary f = run_campaign(full, drops, g, {}, nullptr, 1);
    CHECK(f.total_bps() > 0.0);
    CHECK(f.adopted.empty());
    const EvalSummary h = run_campaign(Campaign::parse("hard"), drops, g, {}, nullptr, 1);
    CHECK(h.ues.size() == f.ues.size());
}

TEST_CASE("bottom-percentile means") {
    std::vector<double> pool;
    for (int i = 1; i <= 200; ++i) pool.push_back(i);
    CHECK(bottom_mean(pool, 10) == doctest::Approx(10.5));
    CHECK(bottom_mean(pool, 5) == doctest::Approx(5.5));
    CHECK(bottom_mean(pool, 1) == doctest::Approx(1.5));
    CHECK(bottom_mean(pool, 0) == 1.0);
    CHECK(bottom_mean({7.0, 3.0}, 1) == 3.0);
    CHECK_THROWS_AS(bottom_mean({}, 5), Error);
}

TEST_CASE("percentile improvements") {
    const EvalSummary base = summary_of({1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
    const PercentileGains same = percentile_improvements(base, base);
    for (const auto& [p, gain] : same.gains) CHECK(gain == 0.0);
    CHECK(same.totals_ratio == 1.0);
    CHECK(same.gains.size() == 4);

    EvalSummary doubled = base;
    for (UeThroughput& u : doubled.ues) u.bps *= 2;
    const PercentileGains g = percentile_improvements(doubled, base);
    for (double p : kReportPercentiles) CHECK(g.at(p) == doctest::Approx(1.0));
    CHECK(g.totals_ratio == doctest::Approx(2.0));
    CHECK_THROWS_AS(g.at(50), Error);

    CHECK_THROWS_AS(percentile_improvements(EvalSummary{}, base), Error);
    EvalSummary other = base;
    other.ues.back().ue_id = 99;
    CHECK_THROWS_AS(percentile_improvements(other, base), Error);
}

TEST_CASE("empirical CDF") {
    const auto cdf = empirical_cdf({3, 1, 2});
    REQUIRE(cdf.size() == 3);
    CHECK(cdf[0] == std::pair<double, double>{1, 1.0 / 3});
    CHECK(cdf[1] == std::pair<double, double>{2, 2.0 / 3});
    CHECK(cdf[2] == std::pair<double, double>{3, 1.0});
}

TEST_CASE("summary files round-trip") {
    const GridLayout g = build_grid();
    const auto drops = small_drops(2, 7);
    const EvalSummary s = run_campaign(Campaign::parse("static:64:30"), drops, g, {}, nullptr, 1);
    const fs::path dir = fs::temp_directory_path() / "mann_summary_test";
    fs::remove_all(dir);
    write_summary(s, dir);
    for (const char* f : {"per_ue.csv", "per_cell.csv", "cdf.csv", "adopted.csv"}) CHECK(fs::exists(dir / f));
    const EvalSummary back = read_summary(dir);
    CHECK(back.pool() == s.pool());
    CHECK(back.cells.size() == s.cells.size());

    const std::string cdf = read_text_file(dir / "cdf.csv");
    CHECK(static_cast<std::size_t>(std::count(cdf.begin(), cdf.end(), '\n')) == s.ues.size() + 1);
    {
        constexpr std::string_view header[] = {"throughput_bps", "cdf"};
        CsvReader r(dir / "cdf.csv", header);
        std::vector<std::string_view> f;
        double px = -1, pf = 0;
        while (r.next(f)) {
            CHECK(parse_double(f[0]) >= px);
            CHECK(parse_double(f[1]) > pf);
            px = parse_double(f[0]);
            pf = parse_double(f[1]);
        }
        CHECK(pf == 1.0);
    }

    write_gain_table(percentile_improvements(s, s), dir / "gains.csv");
    CHECK(read_text_file(dir / "gains.csv") == "p10,p5,p1,worst,totals_ratio\n0,0,0,0,1\n");
    CHECK_THROWS_AS(cdf_export(EvalSummary{}, dir / "empty.csv"), Error);
    fs::remove_all(dir);
}

TEST_CASE("thread count from the environment") {
    setenv("MANN_THREADS", "3", 1);
    CHECK(default_thread_count() == 3);
    setenv("MANN_THREADS", "zero", 1);
    CHECK_THROWS_AS(default_thread_count(), Error);
    unsetenv("MANN_THREADS");
    CHECK(default_thread_count() >= 1);
}

TEST_CASE("parallel_for visits every index once and forwards errors") {
    std::vector<int> hits(100, 0);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
    for (int h : hits) CHECK(h == 1);
    CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) { if (i == 7) throw Error("boom"); }), Error);
}
