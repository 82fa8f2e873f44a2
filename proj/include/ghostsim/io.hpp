#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace ghostsim::io {

/// Numeric table with a header row. Serialized as comma-separated values,
/// '.' decimal point, %.17g so reruns are byte-identical.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    void add_row(std::initializer_list<double> r) { rows.emplace_back(r); }
    /// Column index by name; throws ConfigError when absent.
    std::size_t col(const std::string& name) const;
    std::vector<double> column(const std::string& name) const;
};

void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

/// Binary 8-bit portable graymap. Values are normalized linearly from
/// [lo, hi] (min/max when lo >= hi); the bounds used are returned so the
/// manifest can record them.
std::pair<double, double> write_pgm(const std::filesystem::path& path,
                                    const std::vector<double>& values, int nx, int ny,
                                    double lo = 0.0, double hi = -1.0);

/// Reads an 8-bit binary or ASCII graymap as gray levels in [0, 1].
std::vector<double> read_pgm(const std::filesystem::path& path, int& nx, int& ny);

/// Ordered key = value text file ('#' comments); used for manifests, reports
/// and configuration.
struct KeyValueFile {
    std::vector<std::pair<std::string, std::string>> entries;

    void set(const std::string& key, const std::string& value);
    void set(const std::string& key, double value);
    void set(const std::string& key, std::int64_t value);
    bool has(const std::string& key) const;
    const std::string& get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;

    void write(const std::filesystem::path& path) const;
    static KeyValueFile read(const std::filesystem::path& path);
    static KeyValueFile parse(const std::string& text);
};

/// FNV-1a 64-bit digest of a file's bytes, as 16 hex digits.
std::string file_checksum(const std::filesystem::path& path);

std::string format_double(double v);

} // namespace ghostsim::io
