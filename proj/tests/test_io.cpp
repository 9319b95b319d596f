#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "doctest.h"
#include "emu/core/error.hpp"
#include "emu/core/text.hpp"
#include "emu/io/atomic_file.hpp"
#include "emu/io/gtil.hpp"

using namespace emu;
namespace fs = std::filesystem;

namespace {
fs::path temp_dir(const std::string& leaf) {
    fs::path p = fs::temp_directory_path() / "emu_io_tests" / leaf;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

io::Tile sample_tile() {
    io::Tile t;
    t.height = 3;
    t.width = 4;
    t.add_channel("alpha");
    t.add_channel("beta_long_channel_name");
    for (std::size_t i = 0; i < 12; ++i) {
        t.channels[0][i] = 0.125 * static_cast<double>(i) - 0.5;
        t.channels[1][i] = 1e-4 * static_cast<double>(i * i);
    }
    return t;
}
}  // namespace

TEST_CASE("crc32 matches the standard check value") {
    CHECK(io::crc32_of(std::string("123456789")) == 0xCBF43926u);
}

TEST_CASE("tiles round-trip through disk at f32 precision") {
    const fs::path path = temp_dir("roundtrip") / "t.gtil";
    io::Tile t = sample_tile();
    io::save_tile(path, t);
    io::Tile r = io::load_tile(path);
    CHECK(r.height == t.height);
    CHECK(r.width == t.width);
    REQUIRE(r.names == t.names);
    for (std::size_t c = 0; c < t.channels.size(); ++c) {
        REQUIRE(r.channels[c].size() == t.channels[c].size());
        for (std::size_t i = 0; i < t.channels[c].size(); ++i) {
            CHECK(r.channels[c][i] ==
                  static_cast<double>(static_cast<float>(t.channels[c][i])));
        }
    }
}

TEST_CASE("tile files validate their structure") {
    const fs::path dir = temp_dir("corrupt");
    const fs::path path = dir / "t.gtil";
    io::save_tile(path, sample_tile());
    const std::string good = io::read_file(path);

    SUBCASE("single flipped payload byte fails the checksum") {
        std::string bad = good;
        bad[bad.size() / 2] = static_cast<char>(bad[bad.size() / 2] ^ 0x40);
        io::atomic_write_file(path, bad);
        CHECK_THROWS_AS(io::load_tile(path), FormatError);
    }
    SUBCASE("truncation is reported") {
        for (std::size_t keep : {std::size_t{0}, std::size_t{3}, std::size_t{10},
                                 good.size() - 1}) {
            io::atomic_write_file(path, good.substr(0, keep));
            CHECK_THROWS_AS(io::load_tile(path), FormatError);
        }
    }
    SUBCASE("wrong magic is rejected") {
        std::string bad = good;
        bad[0] = 'X';
        io::atomic_write_file(path, bad);
        CHECK_THROWS_AS(io::load_tile(path), FormatError);
    }
    SUBCASE("trailing garbage is rejected") {
        io::atomic_write_file(path, good + std::string(1, '\0'));
        CHECK_THROWS_AS(io::load_tile(path), FormatError);
    }
    SUBCASE("missing file is reported") {
        CHECK_THROWS_AS(io::load_tile(dir / "absent.gtil"), DataError);
    }
}

TEST_CASE("tile channel bookkeeping rejects misuse") {
    io::Tile t = sample_tile();
    CHECK(t.find("alpha") == 0);
    CHECK(t.find("missing") == -1);
    CHECK_THROWS_AS(t.channel("missing"), DataError);
    CHECK_THROWS_AS(t.add_channel("alpha"), DataError);
}

TEST_CASE("atomic writes replace files whole") {
    const fs::path dir = temp_dir("atomic");
    const fs::path path = dir / "blob.bin";
    const std::string first = "first contents";
    const std::string second = "2";
    io::atomic_write_file(path, first);
    CHECK(io::read_file(path) == first);
    io::atomic_write_file(path, second);
    CHECK(io::read_file(path) == second);
    CHECK(!fs::exists(path.string() + ".tmp"));
    CHECK_THROWS_AS(io::read_file(dir / "absent.bin"), DataError);
}

TEST_CASE("byte reader reports where truncation happened") {
    const std::string bytes{"\x01\x02\x03\x04\x05", 5};
    io::ByteReader br(bytes, "blob");
    CHECK(br.u32() == 0x04030201u);
    CHECK(br.remaining() == 1);
    try {
        (void)br.u32();
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("blob") != std::string::npos);
        CHECK(std::string(e.what()).find("truncated") != std::string::npos);
    }
}

TEST_CASE("key-value blocks round-trip with sorted keys") {
    std::map<std::string, std::string> kv{{"zeta", "1"}, {"alpha", "hello world"},
                                          {"mid", format_double(0.1)}};
    const std::string text = write_kv_block(kv);
    CHECK(text.find("alpha") < text.find("mid"));
    CHECK(text.find("mid") < text.find("zeta"));
    auto back = parse_kv_block(text, "test");
    CHECK(back == kv);
    CHECK_THROWS_AS(parse_kv_block("no equals sign here\n", "test"), FormatError);
}

TEST_CASE("doubles serialize without precision loss") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -2.5,
                     0.2668901725835979}) {
        CHECK(parse_double(format_double(v), "v") == v);
    }
    CHECK_THROWS_AS(parse_double("not-a-number", "v"), ConfigError);
}
