#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mann/agents.hpp"
#include "mann/neuralnet.hpp"
#include "mann/pfr_sim.hpp"
#include "mann/topology.hpp"

namespace mann {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

/// Minimal comma-separated table with an exact header check.
class CsvReader {
public:
    CsvReader(const std::filesystem::path& path, std::span<const std::string_view> expected_header);

    /// False at end of file; fields stay valid until the next call.
    bool next(std::vector<std::string_view>& fields);
    std::string where() const;

private:
    std::filesystem::path path_;
    std::vector<std::string> lines_;
    std::size_t line_ = 0;
    std::size_t width_ = 0;
};

void write_text_file(const std::filesystem::path& path, std::string_view contents);
std::string read_text_file(const std::filesystem::path& path);

// Drops: <id>.csv with drop_id,ue_id,x_m,y_m,serving_cell and <id>.json with
// the DropConfig fields plus seed.
void write_drop_csv(const UeDrop& drop, const std::filesystem::path& path);
void write_drop_config(const UeDrop& drop, const std::filesystem::path& path);
void save_drop(const UeDrop& drop, const std::filesystem::path& dir);
/// Reads the CSV and, when present, the sibling JSON config.
UeDrop load_drop(const std::filesystem::path& csv_path);
/// Every drop CSV in `dir`, ordered by file name.
std::vector<UeDrop> load_drops(const std::filesystem::path& dir);

void write_samples_csv(std::span<const SampleRecord> samples, const std::filesystem::path& path);
std::vector<SampleRecord> read_samples_csv(const std::filesystem::path& path);

void write_throughput_csv(const EpochOutcome& outcome, const std::filesystem::path& path);

void write_history_csv(std::span<const EpochLoss> history, const std::filesystem::path& path);

void write_trace_jsonl(std::span<const ProtocolMessage> messages, const std::filesystem::path& path);

}  // namespace mann
