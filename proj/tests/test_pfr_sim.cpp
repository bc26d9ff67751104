#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <set>

#include "mann/io.hpp"
#include "mann/pfr_sim.hpp"
#include "mann/rng.hpp"
#include "test_support.hpp"

using namespace mann;
using namespace mann::testing;

TEST_CASE("action index round-trip covers 27 distinct configs") {
    const auto all = all_pfr_configs();
    CHECK(all.size() == 27);
    std::set<PfrConfig> distinct(all.begin(), all.end());
    CHECK(distinct.size() == 27);
    for (int i = 0; i < kNumActions; ++i) CHECK(PfrConfig::from_action_index(i).action_index() == i);
    CHECK(PfrConfig{64, 30}.action_index() == 9 + 5);
    CHECK_THROWS_AS(PfrConfig::from_action_index(27), Error);
    CHECK_THROWS_AS((PfrConfig{50, 30}.validate()), Error);
    CHECK_THROWS_AS((PfrConfig{40, 34}.validate()), Error);
    CHECK_THROWS_AS((PfrConfig{40, 24}.validate()), Error);
}

TEST_CASE("edge blocks") {
    const GridLayout g = single_site();
    const BandPlan a = band_plan_for({40, 25}, g.sector(0));
    CHECK(a.center == RbRange{0, 40});
    CHECK(a.edge == RbRange{40, 60});
    CHECK(a.edge.size() == 20);
    const BandPlan b = band_plan_for({88, 25}, g.sector(2));
    CHECK(b.edge == RbRange{96, 100});
    CHECK(b.edge.size() == 4);

    std::set<int> covered;
    for (int m = 0; m < 3; ++m) {
        const RbRange e = edge_block(64, m);
        for (int rb = e.begin; rb < e.end; ++rb) CHECK(covered.insert(rb).second);
    }
    CHECK(covered.size() == 36);
    CHECK(*covered.begin() == 64);
    CHECK(*covered.rbegin() == 99);
}

TEST_CASE("band plans conserve RBs and keep edge blocks disjoint across groups") {
    const GridLayout g = build_grid();
    const ChannelParams p;
    for (const PfrConfig& cfg : all_pfr_configs()) {
        std::vector<BandPlan> plans;
        for (const CellSector& s : g.sectors) plans.push_back(band_plan_for(cfg, s, p));
        for (const BandPlan& pl : plans) {
            CHECK_FALSE(pl.center.overlaps(pl.edge));
            CHECK(pl.edge.size() == (100 - cfg.center_rbs) / 3);
            CHECK(pl.center.begin >= 0);
            CHECK(pl.edge.end <= kNumRbs);
            CHECK(pl.edge_power_dbm == doctest::Approx(pl.center_power_dbm + p.edge_power_boost_db));
            CHECK(pl.rsrq_threshold == cfg.rsrq_threshold);
        }
        CHECK(plans[0].center.size() + 3 * plans[0].edge.size() == kNumRbs);
        for (std::size_t i = 0; i < plans.size(); ++i)
            for (std::size_t j = 0; j < plans.size(); ++j) {
                const bool same_group = g.sectors[i].sector_index_mod3 == g.sectors[j].sector_index_mod3;
                CHECK(plans[i].edge.overlaps(plans[j].edge) == same_group);
            }
    }
}

TEST_CASE("hard reuse splits the band 33/33/34") {
    const GridLayout g = single_site();
    int total = 0;
    std::set<int> covered;
    for (int c = 0; c < 3; ++c) {
        const BandPlan p = hard_reuse_plan(g.sector(c));
        CHECK(p.center.empty());
        CHECK(p.edge.size() == (c == 2 ? 34 : 33));
        total += p.edge.size();
        for (int rb = p.edge.begin; rb < p.edge.end; ++rb) CHECK(covered.insert(rb).second);
    }
    CHECK(total == kNumRbs);
}

TEST_CASE("UE classification uses strictly-greater") {
    const std::vector<RsrqReport> r{{0, 26, 0}, {1, 25, 0}, {2, 30, 0}};
    const UePartition p = classify_ues(r, 25);
    CHECK(p.center_ues == std::vector<int>{0, 2});
    CHECK(p.edge_ues == std::vector<int>{1});
    const std::vector<RsrqReport> low{{0, 33, 0}, {1, 10, 0}};
    CHECK(classify_ues(low, 33).edge_ues.size() == 2);
    const UePartition empty = classify_ues({}, 30);
    CHECK(empty.center_ues.empty());
    CHECK(empty.edge_ues.empty());
}

TEST_CASE("cell metric") {
    ThroughputReport r;
    r.per_ue_bps = {{0, 2.0e6}, {1, 3.0e6}, {2, 5.0e6}};
    CHECK(cell_metric(r, MetricKind::maxmin) == doctest::Approx(6.0e6));
    CHECK(cell_metric(r, MetricKind::mean) == doctest::Approx(10.0e6 / 3));
    ThroughputReport empty;
    CHECK(cell_metric(empty, MetricKind::maxmin) == 0.0);
    CHECK(cell_metric(empty, MetricKind::mean) == 0.0);
    ThroughputReport one;
    one.per_ue_bps = {{4, 1.5e6}};
    CHECK(cell_metric(one, MetricKind::maxmin) == 1.5e6);

    ThroughputReport scaled = r;
    for (auto& [ue, bps] : scaled.per_ue_bps) bps *= 2.5;
    CHECK(cell_metric(scaled, MetricKind::maxmin) == doctest::Approx(2.5 * cell_metric(r, MetricKind::maxmin)));
}

namespace {

std::vector<RsrqReport> reports_with(std::initializer_list<int> values) {
    std::vector<RsrqReport> out;
    int u = 0;
    for (int v : values) out.push_back({u++, v, 0.0});
    return out;
}

}  // namespace

TEST_CASE("a sole center UE gets the whole center band") {
    const GridLayout g = single_site();
    const UeDrop d = toy_drop(g, {polar({0, 0}, 200, 30)});
    REQUIRE(d.serving_cell[0] == 0);
    const DropSimulator sim(g, d);
    const auto reports = reports_with({34});
    const EpochOutcome out = sim.schedule_epoch({{0, {40, 25}}, {1, {40, 25}}, {2, {40, 25}}}, reports, 0);
    const double r = rate_per_rb(sim.link().sinr_per_rb(out.tx, 0, 0, 0));
    CHECK(r > 0.0);
    CHECK(out.report(0).per_ue_bps.at(0) == doctest::Approx(40 * r).epsilon(1e-12));
    for (int rb = 40; rb < kNumRbs; ++rb) CHECK(out.tx.at(0, rb) == 0.0);
    for (int c = 1; c < 3; ++c)
        for (int rb = 0; rb < kNumRbs; ++rb) CHECK(out.tx.at(c, rb) == 0.0);
}

TEST_CASE("two center UEs and one edge UE share their bands equally") {
    const GridLayout g = single_site();
    const UeDrop d = toy_drop(g, {polar({0, 0}, 100, 30), polar({0, 0}, 150, 20), polar({0, 0}, 400, 40)});
    for (int s : d.serving_cell) REQUIRE(s == 0);
    const DropSimulator sim(g, d);
    const auto reports = reports_with({34, 34, 28});
    const EpochOutcome out = sim.schedule_epoch({{0, {64, 30}}, {1, {64, 30}}, {2, {64, 30}}}, reports, 3);
    CHECK(out.epoch_id == 3);
    CHECK(out.ue_class == std::vector<RbClass>{RbClass::center, RbClass::center, RbClass::edge});
    const RbRange edge = out.plans[0].edge;
    CHECK(edge.size() == 12);
    for (int u = 0; u < 2; ++u) {
        const double r = rate_per_rb(sim.link().sinr_per_rb(out.tx, u, 0, 5));
        CHECK(out.report(0).per_ue_bps.at(u) == doctest::Approx(32 * r).epsilon(1e-12));
    }
    const double re = rate_per_rb(sim.link().sinr_per_rb(out.tx, 2, 0, edge.begin));
    CHECK(out.report(0).per_ue_bps.at(2) == doctest::Approx(12 * re).epsilon(1e-12));
    CHECK(out.tx.at(0, edge.begin) == doctest::Approx(db_to_linear(sim.params().edge_power_per_rb_dbm())));
}

TEST_CASE("full reuse: equal shares and empty cells") {
    const GridLayout g = single_site();
    std::vector<Vec2> pos;
    for (int i = 0; i < 4; ++i) pos.push_back(polar({0, 0}, 100.0 + 60 * i, 30 + 5 * i));
    const UeDrop d = toy_drop(g, pos);
    const DropSimulator sim(g, d);
    const EpochOutcome out = sim.full_reuse_epoch(0);
    CHECK(out.report(0).n_ues() == 4);
    CHECK(out.report(1).n_ues() == 0);
    CHECK(out.report(1).total_bps() == 0.0);
    double total = 0.0;
    for (int u = 0; u < 4; ++u) {
        const double r = rate_per_rb(sim.link().sinr_per_rb(out.tx, u, 0, 0));
        CHECK(out.report(0).per_ue_bps.at(u) == doctest::Approx(25 * r).epsilon(1e-12));
        total += out.report(0).per_ue_bps.at(u);
    }
    CHECK(out.report(0).total_bps() == doctest::Approx(total));
    for (int c = 0; c < 3; ++c)
        for (int rb = 0; rb < kNumRbs; ++rb) CHECK(out.tx.at(c, rb) > 0.0);
}

TEST_CASE("edge RBs under PFR are never worse than full reuse") {
    const GridLayout g = toy_grid({{0, 0}, {700, 0}}, {{0, 0, 0}, {1, 180, 1}});
    std::vector<Vec2> pos{{320, 10}, {380, -10}, {100, 0}, {600, 0}};
    const UeDrop d = toy_drop(g, pos);
    const DropSimulator sim(g, d);
    const EpochOutcome full = sim.full_reuse_epoch(0);
    const auto reports = reports_with({25, 25, 34, 34});
    const EpochOutcome pfr = sim.schedule_epoch({{0, {40, 30}}, {1, {40, 30}}}, reports, 1);
    for (int u = 0; u < 2; ++u) {
        const int s = d.serving_cell[static_cast<std::size_t>(u)];
        const RbRange e = pfr.plans[static_cast<std::size_t>(s)].edge;
        CHECK(pfr.ue_class[static_cast<std::size_t>(u)] == RbClass::edge);
        CHECK(sim.link().sinr_per_rb(full.tx, u, s, 0) <= sim.link().sinr_per_rb(pfr.tx, u, s, e.begin));
    }
}

TEST_CASE("strict isolation on the standard grid") {
    const GridLayout g = build_grid();
    const UeDrop d = generate_drop(DropConfig{}, g, 12);
    const DropSimulator sim(g, d);
    std::map<int, PfrConfig> cfg;
    for (int c : g.inner_cell_ids) cfg[c] = {64, 29};
    const auto reports = sim.measure_rsrq(sim.bootstrap_tx(), sim.full_reuse_plans());
    const EpochOutcome out = sim.schedule_epoch(cfg, reports, 0);
    for (int c : g.inner_cell_ids) {
        const RbRange e = out.plans[static_cast<std::size_t>(c)].edge;
        for (int o : g.inner_cell_ids) {
            if (g.sector(o).sector_index_mod3 == g.sector(c).sector_index_mod3) continue;
            for (int rb = e.begin; rb < e.end; ++rb) CHECK(out.tx.at(o, rb) == 0.0);
        }
    }
    for (int c = 0; c < g.num_cells(); ++c) {
        double sum = 0.0;
        for (const auto& [ue, bps] : out.report(c).per_ue_bps) {
            CHECK(bps >= 0.0);
            sum += bps;
        }
        CHECK(out.report(c).total_bps() == doctest::Approx(sum));
    }
}

TEST_CASE("hard reuse removes interference between groups") {
    const GridLayout g = toy_grid({{0, 0}, {600, 0}}, {{0, 0, 0}, {1, 180, 1}});
    const UeDrop d = toy_drop(g, {{250, 0}, {350, 0}});
    const DropSimulator sim(g, d);
    const EpochOutcome out = sim.run(sim.hard_reuse_plans(), {}, 0);
    for (int u = 0; u < 2; ++u) {
        const int s = d.serving_cell[static_cast<std::size_t>(u)];
        const RbRange e = out.plans[static_cast<std::size_t>(s)].edge;
        for (int rb = e.begin; rb < e.end; ++rb) CHECK(sim.link().interference_mw(out.tx, u, rb, s) == 0.0);
        CHECK(out.report(s).per_ue_bps.at(u) ==
              doctest::Approx(e.size() * rate_per_rb(sim.link().sinr_per_rb(out.tx, u, s, e.begin))));
    }
}

TEST_CASE("missing configs and reports are errors") {
    const GridLayout g = single_site();
    const UeDrop d = toy_drop(g, {polar({0, 0}, 200, 30)});
    const DropSimulator sim(g, d);
    CHECK_THROWS_AS(sim.schedule_epoch({{0, {40, 25}}, {1, {40, 25}}}, reports_with({30}), 0), Error);
    CHECK_THROWS_AS(sim.schedule_epoch({{0, {40, 25}}, {1, {40, 25}}, {2, {40, 25}}}, {}, 0), Error);
    UeDrop broken = d;
    broken.serving_cell[0] = 7;
    CHECK_THROWS_AS(DropSimulator(g, broken), Error);
}

TEST_CASE("RSRQ is measured over the previous center band") {
    const GridLayout g = build_grid();
    const UeDrop d = generate_drop(DropConfig{}, g, 3);
    const DropSimulator sim(g, d);
    const auto boot = sim.measure_rsrq(sim.bootstrap_tx(), sim.full_reuse_plans());
    REQUIRE(static_cast<int>(boot.size()) == d.num_ues());
    for (int u = 0; u < d.num_ues(); ++u) {
        CHECK(boot[static_cast<std::size_t>(u)].ue_id == u);
        CHECK(boot[static_cast<std::size_t>(u)].report_value == rsrq_report_value(boot[static_cast<std::size_t>(u)].rsrq_db));
        CHECK(boot[static_cast<std::size_t>(u)].rsrq_db <= 1e-9);
    }
    std::map<int, PfrConfig> cfg;
    for (int c : g.inner_cell_ids) cfg[c] = {40, 33};
    const EpochOutcome out = sim.schedule_epoch(cfg, boot, 0);
    const auto next = sim.measure_rsrq(out.tx, out.plans);
    const auto again = sim.measure_rsrq(out.tx, out.plans);
    for (std::size_t u = 0; u < next.size(); ++u) CHECK(next[u].rsrq_db == again[u].rsrq_db);
}

TEST_CASE("throughput CSV") {
    const GridLayout g = single_site();
    const UeDrop d = toy_drop(g, {polar({0, 0}, 200, 30), polar({0, 0}, 200, 150)});
    const DropSimulator sim(g, d);
    const auto path = std::filesystem::temp_directory_path() / "mann_tp_test.csv";
    write_throughput_csv(sim.full_reuse_epoch(4), path);
    const std::string text = read_text_file(path);
    CHECK(text.rfind("epoch_id,cell_id,ue_id,throughput_bps\n4,0,0,", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
    std::filesystem::remove(path);
}
