#include "ghostsim/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ghostsim/errors.hpp"

namespace ghostsim::io {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::size_t CsvTable::col(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw ConfigError("CSV: missing column '" + name + "'");
}

std::vector<double> CsvTable::column(const std::string& name) const {
    const std::size_t c = col(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.at(c));
    return out;
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot open for writing: " + path.string());
    for (std::size_t i = 0; i < table.header.size(); ++i)
        f << (i ? "," : "") << table.header[i];
    f << "\n";
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) f << (i ? "," : "") << format_double(row[i]);
        f << "\n";
    }
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open: " + path.string());
    CsvTable t;
    std::string line;
    bool first = true;
    while (std::getline(f, line)) {
        line = trim(line);
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        if (first) {
            while (std::getline(ss, cell, ',')) t.header.push_back(trim(cell));
            first = false;
            continue;
        }
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ConfigError("CSV: non-numeric cell '" + cell + "' in " + path.string());
            }
        }
        t.rows.push_back(std::move(row));
    }
    if (first) throw ConfigError("CSV: empty file " + path.string());
    return t;
}

std::pair<double, double> write_pgm(const std::filesystem::path& path,
                                    const std::vector<double>& values, int nx, int ny, double lo,
                                    double hi) {
    if (static_cast<std::size_t>(nx) * ny != values.size())
        throw ConfigError("write_pgm: size mismatch");
    if (lo >= hi) {
        lo = *std::min_element(values.begin(), values.end());
        hi = *std::max_element(values.begin(), values.end());
        if (hi <= lo) hi = lo + 1.0;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open for writing: " + path.string());
    f << "P5\n" << nx << " " << ny << "\n255\n";
    const double scale = 255.0 / (hi - lo);
    for (double v : values) {
        const int g = std::clamp(static_cast<int>(std::lround((v - lo) * scale)), 0, 255);
        f.put(static_cast<char>(g));
    }
    return {lo, hi};
}

std::vector<double> read_pgm(const std::filesystem::path& path, int& nx, int& ny) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open: " + path.string());
    std::string magic;
    f >> magic;
    if (magic != "P5" && magic != "P2")
        throw ConfigError("read_pgm: not an 8-bit graymap: " + path.string());
    auto next_token = [&]() {
        std::string tok;
        for (;;) {
            if (!(f >> tok)) throw ConfigError("read_pgm: truncated header");
            if (tok[0] == '#') {
                std::string rest;
                std::getline(f, rest);
                continue;
            }
            return tok;
        }
    };
    nx = std::stoi(next_token());
    ny = std::stoi(next_token());
    const int maxval = std::stoi(next_token());
    if (maxval <= 0 || maxval > 255) throw ConfigError("read_pgm: only 8-bit graymaps supported");

    std::vector<double> out(static_cast<std::size_t>(nx) * ny);
    if (magic == "P5") {
        f.get(); // single whitespace after maxval
        for (double& v : out) {
            const int c = f.get();
            if (c == EOF) throw ConfigError("read_pgm: truncated data");
            v = static_cast<double>(c) / maxval;
        }
    } else {
        for (double& v : out) {
            int g;
            if (!(f >> g)) throw ConfigError("read_pgm: truncated data");
            v = static_cast<double>(g) / maxval;
        }
    }
    return out;
}

void KeyValueFile::set(const std::string& key, const std::string& value) {
    for (auto& e : entries)
        if (e.first == key) {
            e.second = value;
            return;
        }
    entries.emplace_back(key, value);
}

void KeyValueFile::set(const std::string& key, double value) { set(key, format_double(value)); }
void KeyValueFile::set(const std::string& key, std::int64_t value) {
    set(key, std::to_string(value));
}

bool KeyValueFile::has(const std::string& key) const {
    for (const auto& e : entries)
        if (e.first == key) return true;
    return false;
}

const std::string& KeyValueFile::get(const std::string& key) const {
    for (const auto& e : entries)
        if (e.first == key) return e.second;
    throw ConfigError("missing key '" + key + "'");
}

std::string KeyValueFile::get_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? get(key) : fallback;
}

void KeyValueFile::write(const std::filesystem::path& path) const {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot open for writing: " + path.string());
    for (const auto& e : entries) f << e.first << " = " << e.second << "\n";
}

KeyValueFile KeyValueFile::parse(const std::string& text) {
    KeyValueFile kv;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        kv.set(key, value);
    }
    return kv;
}

KeyValueFile KeyValueFile::read(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open: " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
}

std::string file_checksum(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open: " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[65536];
    while (f) {
        f.read(buf, sizeof(buf));
        const std::streamsize got = f.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

} // namespace ghostsim::io
