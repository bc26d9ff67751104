#include "mann/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mann {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

double parse_double(std::string_view text) {
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw Error("not a number: '" + std::string(text) + "'");
    return v;
}

long long parse_int(std::string_view text) {
    long long v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw Error("not an integer: '" + std::string(text) + "'");
    return v;
}

void write_text_file(const fs::path& path, std::string_view contents) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write " + path.string());
    os << contents;
    if (!os) throw Error("write failed for " + path.string());
}

std::string read_text_file(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

std::string join_header(std::span<const std::string_view> header) {
    std::string s;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) s += ',';
        s += header[i];
    }
    return s;
}

}  // namespace

CsvReader::CsvReader(const fs::path& path, std::span<const std::string_view> expected_header)
    : path_(path), width_(expected_header.size()) {
    std::istringstream in(read_text_file(path));
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines_.push_back(std::move(line));
    }
    if (lines_.empty()) throw Error(path.string() + ": empty file, expected header '" + join_header(expected_header) + "'");
    if (lines_[0] != join_header(expected_header))
        throw Error(path.string() + ":1: bad header '" + lines_[0] + "', expected '" + join_header(expected_header) + "'");
    line_ = 1;
}

bool CsvReader::next(std::vector<std::string_view>& fields) {
    while (line_ < lines_.size() && lines_[line_].empty()) ++line_;
    if (line_ >= lines_.size()) return false;
    fields = split(lines_[line_]);
    ++line_;
    if (fields.size() != width_)
        throw Error(where() + ": expected " + std::to_string(width_) + " fields, got " + std::to_string(fields.size()));
    return true;
}

std::string CsvReader::where() const { return path_.string() + ":" + std::to_string(line_); }

namespace {

constexpr std::string_view kDropHeader[] = {"drop_id", "ue_id", "x_m", "y_m", "serving_cell"};

std::vector<std::string_view> samples_header() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n{"drop_id", "cell_id", "epoch_id"};
        for (int b = 0; b < kRsrqBins; ++b) n.push_back("bin" + std::to_string(b));
        n.insert(n.end(), {"center_rbs", "threshold", "raw_metric"});
        return n;
    }();
    return {names.begin(), names.end()};
}

// Rethrows with the reader position prepended.
template <class F>
auto at_line(const CsvReader& r, F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        throw Error(r.where() + ": " + e.what());
    }
}

}  // namespace

void write_drop_csv(const UeDrop& drop, const fs::path& path) {
    std::string s = join_header(kDropHeader) + "\n";
    for (int u = 0; u < drop.num_ues(); ++u) {
        const Vec2 p = drop.positions[static_cast<std::size_t>(u)];
        s += drop.drop_id + "," + std::to_string(u) + "," + format_double(p.x) + "," + format_double(p.y) + "," +
             std::to_string(drop.serving_cell[static_cast<std::size_t>(u)]) + "\n";
    }
    write_text_file(path, s);
}

void write_drop_config(const UeDrop& drop, const fs::path& path) {
    const DropConfig& c = drop.config;
    json j = {{"drop_id", drop.drop_id},
              {"n_uniform", c.n_uniform},
              {"n_macro_clusters", c.n_macro_clusters},
              {"n_micro_per_macro", c.n_micro_per_macro},
              {"micro_radius_m", c.micro_radius_m},
              {"users_per_micro", c.users_per_micro},
              {"displacement_m", c.displacement_m},
              {"seed", drop.seed}};
    write_text_file(path, j.dump(1) + "\n");
}

void save_drop(const UeDrop& drop, const fs::path& dir) {
    write_drop_csv(drop, dir / (drop.drop_id + ".csv"));
    write_drop_config(drop, dir / (drop.drop_id + ".json"));
}

UeDrop load_drop(const fs::path& csv_path) {
    UeDrop drop;
    CsvReader reader(csv_path, kDropHeader);
    std::vector<std::string_view> f;
    while (reader.next(f)) {
        at_line(reader, [&] {
            if (drop.drop_id.empty()) drop.drop_id = std::string(f[0]);
            if (f[0] != drop.drop_id) throw Error("mixed drop ids in one file");
            if (parse_int(f[1]) != drop.num_ues()) throw Error("ue_id values must be 0, 1, 2, ... in order");
            drop.positions.push_back({parse_double(f[2]), parse_double(f[3])});
            drop.serving_cell.push_back(static_cast<int>(parse_int(f[4])));
            drop.cluster_index.push_back(-1);
            return 0;
        });
    }
    if (drop.drop_id.empty()) drop.drop_id = csv_path.stem().string();

    fs::path cfg_path = csv_path;
    cfg_path.replace_extension(".json");
    if (fs::exists(cfg_path)) {
        json j;
        try {
            j = json::parse(read_text_file(cfg_path));
            drop.config.n_uniform = j.at("n_uniform").get<int>();
            drop.config.n_macro_clusters = j.at("n_macro_clusters").get<int>();
            drop.config.n_micro_per_macro = j.at("n_micro_per_macro").get<int>();
            drop.config.micro_radius_m = j.at("micro_radius_m").get<double>();
            drop.config.users_per_micro = j.at("users_per_micro").get<int>();
            drop.config.displacement_m = j.at("displacement_m").get<double>();
            drop.seed = j.at("seed").get<std::uint64_t>();
        } catch (const json::exception& e) {
            throw Error(cfg_path.string() + ": " + e.what());
        }
    }
    return drop;
}

std::vector<UeDrop> load_drops(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw Error("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::vector<UeDrop> drops;
    for (const fs::path& p : files) drops.push_back(load_drop(p));
    if (drops.empty()) throw Error("no drop files in " + dir.string());
    return drops;
}

void write_samples_csv(std::span<const SampleRecord> samples, const fs::path& path) {
    const auto header = samples_header();
    std::string s = join_header(header) + "\n";
    for (const SampleRecord& r : samples) {
        s += r.drop_id + "," + std::to_string(r.cell_id) + "," + std::to_string(r.epoch_id);
        for (int b : r.bins) s += "," + std::to_string(b);
        s += "," + std::to_string(r.center_rbs) + "," + std::to_string(r.rsrq_threshold) + "," +
             format_double(r.raw_metric) + "\n";
    }
    write_text_file(path, s);
}

std::vector<SampleRecord> read_samples_csv(const fs::path& path) {
    const auto header = samples_header();
    CsvReader reader(path, header);
    std::vector<SampleRecord> out;
    std::vector<std::string_view> f;
    while (reader.next(f)) {
        out.push_back(at_line(reader, [&] {
            SampleRecord r;
            r.drop_id = std::string(f[0]);
            r.cell_id = static_cast<int>(parse_int(f[1]));
            r.epoch_id = static_cast<int>(parse_int(f[2]));
            for (int b = 0; b < kRsrqBins; ++b) {
                r.bins[static_cast<std::size_t>(b)] = static_cast<int>(parse_int(f[static_cast<std::size_t>(3 + b)]));
                if (r.bins[static_cast<std::size_t>(b)] < 0) throw Error("negative bin count");
            }
            r.center_rbs = static_cast<int>(parse_int(f[13]));
            r.rsrq_threshold = static_cast<int>(parse_int(f[14]));
            PfrConfig{r.center_rbs, r.rsrq_threshold}.validate();
            r.raw_metric = parse_double(f[15]);
            if (!(r.raw_metric >= 0.0)) throw Error("raw_metric must be >= 0");
            return r;
        }));
    }
    return out;
}

void write_throughput_csv(const EpochOutcome& outcome, const fs::path& path) {
    std::string s = "epoch_id,cell_id,ue_id,throughput_bps\n";
    for (const ThroughputReport& r : outcome.reports)
        for (const auto& [ue, bps] : r.per_ue_bps)
            s += std::to_string(outcome.epoch_id) + "," + std::to_string(r.cell_id) + "," + std::to_string(ue) + "," +
                 format_double(bps) + "\n";
    write_text_file(path, s);
}

void write_history_csv(std::span<const EpochLoss> history, const fs::path& path) {
    std::string s = "epoch,train_loss,validation_loss\n";
    for (const EpochLoss& e : history)
        s += std::to_string(e.epoch) + "," + format_double(e.train_loss) + "," + format_double(e.validation_loss) + "\n";
    write_text_file(path, s);
}

void write_trace_jsonl(std::span<const ProtocolMessage> messages, const fs::path& path) {
    std::string s;
    for (const ProtocolMessage& m : messages) s += to_json_line(m) + "\n";
    write_text_file(path, s);
}

}  // namespace mann
