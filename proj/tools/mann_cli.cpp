// mann: command-line front end for the drop / collect / train / eval / report pipeline.

#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mann/harness.hpp"
#include "mann/io.hpp"
#include "mann/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Options of one subcommand, bound to variables so they can be overlaid from a
// JSON config and dumped into the run manifest.
class OptionSet {
public:
    explicit OptionSet(CLI::App* app) : app_(app) {}

    template <class T>
    CLI::Option* add(const std::string& name, T& var, const std::string& help) {
        CLI::Option* opt = app_->add_option("--" + name, var, help)->capture_default_str();
        entries_.push_back({name, opt, [&var] { return json(var); }, [&var](const json& j) { var = j.get<T>(); }});
        return opt;
    }

    CLI::Option* flag(const std::string& name, bool& var, const std::string& help) {
        CLI::Option* opt = app_->add_flag("--" + name, var, help);
        entries_.push_back({name, opt, [&var] { return json(var); }, [&var](const json& j) { var = j.get<bool>(); }});
        return opt;
    }

    // Values from `cfg` fill every option not given on the command line.
    void overlay(const json& cfg) {
        for (const auto& [key, value] : cfg.items()) {
            std::string name = key;
            std::replace(name.begin(), name.end(), '_', '-');
            const auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.name == name; });
            if (it == entries_.end()) throw UsageError("unknown config key '" + key + "'");
            if (it->opt->count() > 0) continue;
            try {
                it->set(value);
            } catch (const json::exception&) {
                throw UsageError("config key '" + key + "' has the wrong type");
            }
        }
    }

    json resolved() const {
        json out = json::object();
        for (const Entry& e : entries_) out[e.name] = e.get();
        return out;
    }

    bool given(const std::string& name) const {
        for (const Entry& e : entries_)
            if (e.name == name) return e.opt->count() > 0;
        return false;
    }

private:
    struct Entry {
        std::string name;
        CLI::Option* opt;
        std::function<json()> get;
        std::function<void(const json&)> set;
    };
    CLI::App* app_;
    std::vector<Entry> entries_;
};

json read_json(const fs::path& path) {
    try {
        return json::parse(mann::read_text_file(path));
    } catch (const json::exception& e) {
        throw mann::Error(path.string() + ": " + e.what());
    }
}

void write_manifest(const fs::path& path, const std::string& command, const json& config,
                    const std::vector<std::string>& inputs, const std::vector<std::string>& outputs) {
    json m = {{"tool", "mann"},
              {"version", kToolVersion},
              {"command", command},
              {"seed", config.contains("seed") ? config["seed"] : json(nullptr)},
              {"config", config},
              {"inputs", inputs},
              {"outputs", outputs}};
    mann::write_text_file(path, m.dump(2) + "\n");
}

fs::path sibling_manifest(const fs::path& file) {
    fs::path p = file;
    p += ".manifest.json";
    return p;
}

mann::MetricKind metric_arg(const std::string& s) {
    try {
        return mann::metric_kind_from_string(s);
    } catch (const mann::Error& e) {
        throw UsageError(e.what());
    }
}

// "all", or comma-separated indices and ranges "a-b" with an optional ":step".
std::vector<int> parse_config_list(const std::string& text, int count) {
    std::vector<int> out;
    if (text == "all") {
        for (int i = 0; i < count; ++i) out.push_back(i);
        return out;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            int step = 1;
            std::string range = item;
            if (const auto colon = item.find(':'); colon != std::string::npos) {
                step = static_cast<int>(mann::parse_int(item.substr(colon + 1)));
                range = item.substr(0, colon);
            }
            int lo = 0, hi = 0;
            if (const auto dash = range.find('-'); dash != std::string::npos && dash > 0) {
                lo = static_cast<int>(mann::parse_int(range.substr(0, dash)));
                hi = static_cast<int>(mann::parse_int(range.substr(dash + 1)));
            } else {
                lo = hi = static_cast<int>(mann::parse_int(range));
            }
            if (step < 1 || lo > hi) throw mann::Error("bad range");
            for (int i = lo; i <= hi; i += step) {
                if (i < 0 || i >= count) throw mann::Error("index out of range");
                out.push_back(i);
            }
        } catch (const mann::Error& e) {
            throw UsageError("invalid --configs entry '" + item + "': " + e.what() + " (valid indices 0-" +
                             std::to_string(count - 1) + ")");
        }
    }
    if (out.empty()) throw UsageError("--configs selects no configuration");
    return out;
}

std::string drop_name(const std::string& prefix, int config_index, int instance) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "_c%03d_i%02d", config_index, instance);
    return prefix + buf;
}

struct GenDropsArgs {
    std::string configs = "all";
    int instances = 1;
    std::uint64_t seed = 1;
    std::string prefix = "drop";
    std::string out;
};

void cmd_gen_drops(const GenDropsArgs& a, const json& resolved) {
    if (a.instances < 1) throw UsageError("--instances must be >= 1");
    if (a.prefix.empty() || a.prefix.find_first_of("/\\,") != std::string::npos)
        throw UsageError("--prefix must be a plain file-name stem");
    const auto configs = mann::enumerate_configs();
    const std::vector<int> indices = parse_config_list(a.configs, static_cast<int>(configs.size()));
    const mann::GridLayout grid = mann::build_grid();
    std::vector<std::string> outputs;
    for (int inst = 0; inst < a.instances; ++inst) {
        for (int ci : indices) {
            const std::uint64_t seed =
                mann::derive_seed(a.seed, "drops", static_cast<std::uint64_t>(inst) * configs.size() + ci);
            const mann::UeDrop drop =
                mann::generate_drop(configs[static_cast<std::size_t>(ci)], grid, seed, drop_name(a.prefix, ci, inst));
            mann::save_drop(drop, a.out);
            outputs.push_back(drop.drop_id + ".csv");
        }
    }
    write_manifest(fs::path(a.out) / "manifest.json", "gen-drops", resolved, {}, outputs);
    std::cout << "wrote " << outputs.size() << " drops to " << a.out << "\n";
}

struct CollectArgs {
    std::string drops;
    int epochs = mann::kCollectionEpochs;
    std::uint64_t seed = 1;
    std::string metric = "maxmin";
    std::string out;
};

void cmd_collect(const CollectArgs& a, const json& resolved) {
    if (a.epochs < 1) throw UsageError("--epochs must be >= 1");
    const mann::MetricKind metric = metric_arg(a.metric);
    const auto drops = mann::load_drops(a.drops);
    const auto samples = mann::collect_samples(drops, mann::build_grid(), {}, a.seed, a.epochs, metric,
                                               mann::default_thread_count());
    mann::write_samples_csv(samples, a.out);
    write_manifest(sibling_manifest(a.out), "collect", resolved, {a.drops}, {a.out});
    std::cout << "wrote " << samples.size() << " samples from " << drops.size() << " drops to " << a.out << "\n";
}

struct TrainArgs {
    std::string samples;
    int epochs = 30;
    int batch = 50;
    double val = 0.2;
    std::string metric = "maxmin";
    std::uint64_t seed = 1;
    std::string out;
    std::string history;
};

void cmd_train(const TrainArgs& a, const json& resolved) {
    mann::TrainingConfig tc;
    tc.epochs = a.epochs;
    tc.batch_size = a.batch;
    tc.validation_fraction = a.val;
    tc.seed = a.seed;
    tc.metric_kind = metric_arg(a.metric);
    try {
        tc.validate();
    } catch (const mann::Error& e) {
        throw UsageError(e.what());
    }
    const auto samples = mann::read_samples_csv(a.samples);
    const mann::TrainResult result = mann::train(samples, tc);
    mann::save_weights(result.model, a.out);
    const std::string history = a.history.empty() ? fs::path(a.out).replace_extension(".history.csv").string() : a.history;
    mann::write_history_csv(result.history, history);
    write_manifest(sibling_manifest(a.out), "train", resolved, {a.samples}, {a.out, history});
    const mann::EpochLoss& best = result.history.at(static_cast<std::size_t>(result.best_epoch));
    std::cout << "trained on " << samples.size() << " samples; best epoch " << best.epoch
              << " validation loss " << mann::format_double(best.validation_loss) << "\n";
}

struct EvalArgs {
    std::string drops;
    std::string mode = "full";
    std::string model;
    std::string metric = "maxmin";
    int epochs_per_drop = 3;
    bool trace = false;
    std::string out;
};

std::string sweep_dir_name(const mann::PfrConfig& c) {
    return "static_" + std::to_string(c.center_rbs) + "_" + std::to_string(c.rsrq_threshold);
}

void cmd_eval(const EvalArgs& a, const json& resolved) {
    const mann::MetricKind metric = metric_arg(a.metric);
    std::vector<mann::Campaign> campaigns;
    std::vector<fs::path> dirs;
    if (a.mode == "static-sweep") {
        for (const mann::PfrConfig& c : mann::all_pfr_configs()) {
            mann::Campaign camp;
            camp.mode = mann::CampaignMode::static_config;
            camp.static_config = c;
            campaigns.push_back(camp);
            dirs.push_back(fs::path(a.out) / sweep_dir_name(c));
        }
    } else {
        try {
            campaigns.push_back(mann::Campaign::parse(a.mode));
        } catch (const mann::Error& e) {
            throw UsageError(std::string(e.what()) + " (expected mann, full, hard, static:BW:THR or static-sweep)");
        }
        dirs.push_back(a.out);
    }
    if (a.epochs_per_drop < 1) throw UsageError("--epochs-per-drop must be >= 1");

    std::optional<mann::RegressorModel> model;
    if (campaigns.front().mode == mann::CampaignMode::mann) {
        if (a.model.empty()) throw UsageError("--mode mann requires --model");
        model = mann::load_weights(a.model, metric);
    }

    const auto drops = mann::load_drops(a.drops);
    const mann::GridLayout grid = mann::build_grid();
    std::vector<std::string> outputs;
    for (std::size_t i = 0; i < campaigns.size(); ++i) {
        mann::Campaign camp = campaigns[i];
        camp.metric = metric;
        camp.epochs_per_drop = a.epochs_per_drop;
        std::vector<mann::ProtocolMessage> trace;
        const mann::EvalSummary summary = mann::run_campaign(camp, drops, grid, {}, model ? &*model : nullptr,
                                                             mann::default_thread_count(), a.trace ? &trace : nullptr);
        mann::write_summary(summary, dirs[i]);
        outputs.push_back(dirs[i].string());
        if (a.trace && camp.mode == mann::CampaignMode::mann) mann::write_trace_jsonl(trace, dirs[i] / "trace.jsonl");
    }
    std::vector<std::string> inputs{a.drops};
    if (!a.model.empty()) inputs.push_back(a.model);
    write_manifest(fs::path(a.out) / "manifest.json", "eval", resolved, inputs, outputs);
    std::cout << "evaluated " << campaigns.size() << " campaign(s) over " << drops.size() << " drops into " << a.out
              << "\n";
}

struct ReportArgs {
    std::string test;
    std::string baseline;
    std::string out;
};

void cmd_report(const ReportArgs& a, const json& resolved) {
    const mann::EvalSummary test = mann::read_summary(a.test);
    const mann::EvalSummary base = mann::read_summary(a.baseline);
    const mann::PercentileGains gains = mann::percentile_improvements(test, base);
    mann::write_gain_table(gains, a.out);
    write_manifest(sibling_manifest(a.out), "report", resolved, {a.test, a.baseline}, {a.out});
    std::cout << "p10 " << mann::format_double(gains.at(10)) << "  p5 " << mann::format_double(gains.at(5))
              << "  p1 " << mann::format_double(gains.at(1)) << "  worst " << mann::format_double(gains.at(0))
              << "  totals_ratio " << mann::format_double(gains.totals_ratio) << "\n";
}

struct ScoreArgs {
    std::string model;
    std::string samples;
    std::string out;
};

void cmd_score(const ScoreArgs& a, const json& resolved) {
    const mann::RegressorModel model = mann::load_weights(a.model);
    const auto samples = mann::read_samples_csv(a.samples);
    const mann::RegressionMetrics m = mann::evaluate_regressor(model, samples);
    const std::string corr = m.correlation_defined ? mann::format_double(m.correlation) : "nan";
    mann::write_text_file(a.out, "n,correlation,mae,mape,mape_excluded,rmse\n" + std::to_string(m.n) + "," + corr +
                                     "," + mann::format_double(m.mae) + "," + mann::format_double(m.mape) + "," +
                                     std::to_string(m.mape_excluded) + "," + mann::format_double(m.rmse) + "\n");
    write_manifest(sibling_manifest(a.out), "score", resolved, {a.model, a.samples}, {a.out});
    std::cout << "n " << m.n << "  corr " << corr << "  mae " << mann::format_double(m.mae) << "  rmse "
              << mann::format_double(m.rmse) << "\n";
}

int run_cli(std::vector<std::string> args);

int dispatch(std::vector<std::string> args) {
    CLI::App app{"Multi-agent neural-network PFR pipeline"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    std::map<CLI::App*, std::pair<std::unique_ptr<OptionSet>, std::function<void(const json&)>>> commands;
    std::map<CLI::App*, std::string> config_paths;

    auto add_command = [&](const std::string& name, const std::string& help) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_paths[sub], "JSON file with option defaults (or a run manifest)");
        return sub;
    };

    GenDropsArgs gd;
    {
        CLI::App* sub = add_command("gen-drops", "Generate Thomas-cluster UE drops");
        auto opts = std::make_unique<OptionSet>(sub);
        opts->add("configs", gd.configs, "all, or indices/ranges like 0-2,7,0-179:3");
        opts->add("instances", gd.instances, "Instances per configuration");
        opts->add("seed", gd.seed, "Master seed");
        opts->add("prefix", gd.prefix, "Drop id prefix");
        opts->add("out", gd.out, "Output directory");
        commands[sub] = {std::move(opts), [&](const json& r) { cmd_gen_drops(gd, r); }};
    }
    CollectArgs co;
    {
        CLI::App* sub = add_command("collect", "Collect random-action training samples");
        auto opts = std::make_unique<OptionSet>(sub);
        opts->add("drops", co.drops, "Drop directory");
        opts->add("epochs", co.epochs, "Random-action epochs per drop");
        opts->add("seed", co.seed, "Master seed");
        opts->add("metric", co.metric, "maxmin or mean");
        opts->add("out", co.out, "Samples CSV");
        commands[sub] = {std::move(opts), [&](const json& r) { cmd_collect(co, r); }};
    }
    TrainArgs tr;
    {
        CLI::App* sub = add_command("train", "Train the gain regressor");
        auto opts = std::make_unique<OptionSet>(sub);
        opts->add("samples", tr.samples, "Samples CSV");
        opts->add("epochs", tr.epochs, "Training epochs");
        opts->add("batch", tr.batch, "Mini-batch size");
        opts->add("val", tr.val, "Validation fraction");
        opts->add("metric", tr.metric, "maxmin or mean");
        opts->add("seed", tr.seed, "Master seed");
        opts->add("out", tr.out, "Model JSON");
        opts->add("history", tr.history, "Loss history CSV (default: <out>.history.csv)");
        commands[sub] = {std::move(opts), [&](const json& r) { cmd_train(tr, r); }};
    }
    EvalArgs ev;
    {
        CLI::App* sub = add_command("eval", "Run an evaluation campaign");
        auto opts = std::make_unique<OptionSet>(sub);
        opts->add("drops", ev.drops, "Drop directory");
        opts->add("mode", ev.mode, "mann, full, hard, static:BW:THR or static-sweep");
        opts->add("model", ev.model, "Model JSON (mann mode)");
        opts->add("metric", ev.metric, "maxmin or mean");
        opts->add("epochs-per-drop", ev.epochs_per_drop, "Epochs per drop; statistics from the last");
        opts->flag("trace", ev.trace, "Write the agent message trace (mann mode)");
        opts->add("out", ev.out, "Output directory");
        commands[sub] = {std::move(opts), [&](const json& r) { cmd_eval(ev, r); }};
    }
    ReportArgs rp;
    {
        CLI::App* sub = add_command("report", "Percentile gain table of a campaign over a baseline");
        auto opts = std::make_unique<OptionSet>(sub);
        opts->add("test", rp.test, "Campaign result directory");
        opts->add("baseline", rp.baseline, "Baseline result directory");
        opts->add("out", rp.out, "Gain table CSV");
        commands[sub] = {std::move(opts), [&](const json& r) { cmd_report(rp, r); }};
    }
    ScoreArgs sc;
    {
        CLI::App* sub = add_command("score", "Regression metrics of a model on a sample file");
        auto opts = std::make_unique<OptionSet>(sub);
        opts->add("model", sc.model, "Model JSON");
        opts->add("samples", sc.samples, "Samples CSV");
        opts->add("out", sc.out, "Metrics CSV");
        commands[sub] = {std::move(opts), [&](const json& r) { cmd_score(sc, r); }};
    }
    std::string replay_path;
    CLI::App* replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
    replay->add_option("manifest", replay_path, "manifest.json")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (replay->parsed()) {
        const json m = read_json(replay_path);
        if (!m.contains("command") || !m["command"].is_string()) throw UsageError(replay_path + ": no command recorded");
        return run_cli({args[0], m["command"].get<std::string>(), "--config", replay_path});
    }

    for (auto& [sub, entry] : commands) {
        if (!sub->parsed()) continue;
        OptionSet& opts = *entry.first;
        const std::string& cfg_path = config_paths[sub];
        if (!cfg_path.empty()) {
            json cfg = read_json(cfg_path);
            if (cfg.contains("command") && cfg.contains("config")) {
                if (cfg["command"] != sub->get_name())
                    throw UsageError(cfg_path + " is a manifest for '" + cfg["command"].get<std::string>() + "'");
                cfg = cfg["config"];
            }
            if (!cfg.is_object()) throw UsageError(cfg_path + ": config must be a JSON object");
            opts.overlay(cfg);
        }
        const json resolved = opts.resolved();
        for (const auto& [key, value] : resolved.items()) {
            const bool required = key == "out" || key == "drops" || key == "samples" || key == "test" ||
                                  key == "baseline" || (key == "model" && sub->get_name() == "score");
            if (required && value.get<std::string>().empty()) throw UsageError("--" + key + " is required");
        }
        entry.second(resolved);
        return 0;
    }
    return 2;
}

int run_cli(std::vector<std::string> args) {
    try {
        return dispatch(std::move(args));
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) { return run_cli(std::vector<std::string>(argv, argv + argc)); }
