#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ghostsim/errors.hpp"
#include "ghostsim/io.hpp"

using namespace ghostsim;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("ghostsim_io_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("csv: write/read round trip with full precision") {
    TempDir tmp;
    io::CsvTable t;
    t.header = {"x_um", "value", "baseline", "stderr"};
    t.add_row({-3.5, 0.1234567890123456789, 1e-300, 0.0});
    t.add_row({12.0, -7.25, 3.0, 1e17});
    const fs::path p = tmp.path / "t.csv";
    io::write_csv(p, t);
    const io::CsvTable back = io::read_csv(p);
    CHECK(back.header == t.header);
    REQUIRE(back.rows.size() == t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r)
        for (std::size_t c = 0; c < t.rows[r].size(); ++c)
            CHECK(back.rows[r][c] == t.rows[r][c]);
    CHECK(back.column("value")[1] == -7.25);
    CHECK_THROWS_AS(back.col("missing"), ConfigError);
    CHECK_THROWS_AS(io::read_csv(tmp.path / "absent.csv"), ConfigError);
}

TEST_CASE("pgm: normalization bounds and round trip") {
    TempDir tmp;
    std::vector<double> img = {0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
    const fs::path p = tmp.path / "t.pgm";
    const auto [lo, hi] = io::write_pgm(p, img, 3, 2);
    CHECK(lo == 0.0);
    CHECK(hi == 5.0);
    int nx = 0, ny = 0;
    const std::vector<double> back = io::read_pgm(p, nx, ny);
    CHECK(nx == 3);
    CHECK(ny == 2);
    for (std::size_t i = 0; i < img.size(); ++i)
        CHECK(back[i] == doctest::Approx(img[i] / 5.0).epsilon(0.01));
}

TEST_CASE("key-value files: parse, defaults, errors") {
    const io::KeyValueFile kv = io::KeyValueFile::parse(
        "# comment\n"
        "a = 1\n"
        "b.c = hello world   # trailing comment\n"
        "\n"
        "a = 2\n");
    CHECK(kv.get("a") == "2"); // later assignment wins
    CHECK(kv.get("b.c") == "hello world");
    CHECK(kv.get_or("missing", "dflt") == "dflt");
    CHECK_THROWS_AS(kv.get("missing"), ConfigError);
    CHECK_THROWS_AS(io::KeyValueFile::parse("novalue\n"), ConfigError);
    CHECK_THROWS_AS(io::KeyValueFile::parse("= x\n"), ConfigError);

    TempDir tmp;
    kv.write(tmp.path / "kv.txt");
    const io::KeyValueFile back = io::KeyValueFile::read(tmp.path / "kv.txt");
    CHECK(back.get("a") == "2");
}

TEST_CASE("file checksum: stable FNV-1a") {
    TempDir tmp;
    const fs::path p = tmp.path / "c.bin";
    std::ofstream(p, std::ios::binary) << "abc";
    // FNV-1a 64 of "abc"
    CHECK(io::file_checksum(p) == "e71fa2190541574b");
    std::ofstream(p, std::ios::binary) << "abd";
    CHECK(io::file_checksum(p) != "e71fa2190541574b");
}
