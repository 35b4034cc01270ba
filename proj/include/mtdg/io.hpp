#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mtdg/model.hpp"
#include "mtdg/sequence.hpp"

namespace mtdg {

inline constexpr int kModelSchemaVersion = 1;

/// One parsed trade row.
struct TradeRecord {
    std::string day;
    long seq_no = 0;
    int side = 0;  // +1 / -1
    PriceFlag flag = PriceFlag::Change;
};

/// Read a comma-separated trade file with header columns day,side,price_flag
/// (an optional seq_no column is honored when present). Rows map onto states
/// via the signed-event table; day transitions build the day offsets. Files
/// with header day,state are accepted as the already-mapped internal form.
EventSequence ingest_trades(const std::filesystem::path& path);

/// Inverse of ingest_trades for event-mapped sequences: writes
/// day,seq_no,side,price_flag rows. Sequences without the event mapping are
/// written as day,state.
void export_trades(const EventSequence& seq, const std::filesystem::path& path);

/// Serialize a model as a versioned JSON document. Doubles are written in
/// shortest round-trip form, so save/load reproduces every parameter
/// exactly.
void save_model(const MtdgModel& model, const std::filesystem::path& path);
MtdgModel load_model(const std::filesystem::path& path);

/// Flat key=value configuration file; '#' starts a comment.
class Config {
public:
    static Config load(const std::filesystem::path& path);
    static Config from_string(const std::string& text);

    bool has(const std::string& key) const;
    std::string get_str(const std::string& key) const;
    std::string get_str(const std::string& key, const std::string& fallback) const;
    long get_int(const std::string& key) const;
    long get_int(const std::string& key, long fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

/// Write-temp-then-rename so readers never observe a partial file.
void atomic_write(const std::filesystem::path& path, const std::string& content);

/// Delimited table with '#'-prefixed metadata lines, a header row, and %.17g
/// numeric formatting (deterministic and round-trip safe).
struct Table {
    std::vector<std::string> meta;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> cells) { rows.push_back(std::move(cells)); }
    std::string to_csv() const;
    void write(const std::filesystem::path& path) const;
};

std::string format_double(double x);

}  // namespace mtdg
