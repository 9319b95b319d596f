#include "emu/io/gtil.hpp"

#include <string>

#include "emu/core/error.hpp"
#include "emu/io/atomic_file.hpp"

namespace emu::io {

namespace {
constexpr char kMagic[4] = {'G', 'T', 'I', 'L'};
constexpr std::uint16_t kVersion = 1;
constexpr std::uint32_t kMaxDim = 65536;
constexpr std::uint32_t kMaxChannels = 4096;
}  // namespace

int Tile::find(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return static_cast<int>(i);
    }
    return -1;
}

const std::vector<double>& Tile::channel(const std::string& name) const {
    const int i = find(name);
    if (i < 0) throw DataError("tile has no channel named '" + name + "'");
    return channels[static_cast<std::size_t>(i)];
}

std::vector<double>& Tile::add_channel(const std::string& name) {
    if (find(name) >= 0) throw DataError("duplicate tile channel '" + name + "'");
    names.push_back(name);
    channels.emplace_back(pixels(), 0.0);
    return channels.back();
}

void save_tile(const std::filesystem::path& path, const Tile& tile) {
    if (tile.height == 0 || tile.width == 0) throw DataError("tile is empty");
    if (tile.names.size() != tile.channels.size()) {
        throw DataError("tile channel names and data disagree");
    }
    std::string out;
    out.append(kMagic, 4);
    put_u16(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(tile.height));
    put_u32(out, static_cast<std::uint32_t>(tile.width));
    put_u32(out, static_cast<std::uint32_t>(tile.channels.size()));
    for (const std::string& n : tile.names) {
        put_u32(out, static_cast<std::uint32_t>(n.size()));
        out += n;
    }
    const std::size_t n = tile.pixels();
    for (const auto& ch : tile.channels) {
        if (ch.size() != n) throw DataError("tile channel length mismatch");
        for (double v : ch) put_f32(out, static_cast<float>(v));
    }
    put_u32(out, crc32_of(out));
    atomic_write_file(path, out);
}

Tile load_tile(const std::filesystem::path& path) {
    const std::string bytes = read_file(path);
    const std::string ctx = "tile " + path.string();
    if (bytes.size() < 22) throw FormatError(ctx + ": file too small");
    if (bytes.compare(0, 4, kMagic, 4) != 0) throw FormatError(ctx + ": bad magic");

    ByteReader tail(bytes, ctx);
    tail.raw(bytes.size() - 4);
    if (tail.u32() != crc32_of(bytes.data(), bytes.size() - 4)) {
        throw FormatError(ctx + ": checksum mismatch");
    }

    ByteReader r(bytes, ctx);
    r.raw(4);
    const std::uint16_t version = r.u16();
    if (version != kVersion) {
        throw FormatError(ctx + ": unsupported version " + std::to_string(version));
    }
    Tile t;
    const std::uint32_t h = r.u32();
    const std::uint32_t w = r.u32();
    const std::uint32_t c = r.u32();
    if (h == 0 || w == 0 || h > kMaxDim || w > kMaxDim) {
        throw FormatError(ctx + ": implausible dimensions");
    }
    if (c == 0 || c > kMaxChannels) throw FormatError(ctx + ": implausible channel count");
    t.height = h;
    t.width = w;
    for (std::uint32_t i = 0; i < c; ++i) {
        const std::uint32_t len = r.u32();
        if (len > 4096) throw FormatError(ctx + ": implausible channel name length");
        t.names.push_back(r.raw(len));
    }
    const std::size_t n = t.pixels();
    t.channels.resize(c);
    for (std::uint32_t i = 0; i < c; ++i) {
        t.channels[i].resize(n);
        for (std::size_t j = 0; j < n; ++j) t.channels[i][j] = static_cast<double>(r.f32());
    }
    if (r.remaining() != 4) throw FormatError(ctx + ": trailing bytes after channel data");
    return t;
}

}  // namespace emu::io
