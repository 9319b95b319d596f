#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace emu::io {

// In-memory raster stack: named channels over one H x W grid.
struct Tile {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::string> names;
    std::vector<std::vector<double>> channels;  // [channel][row * width + col]

    std::size_t pixels() const { return height * width; }
    // Index of a named channel, or -1.
    int find(const std::string& name) const;
    const std::vector<double>& channel(const std::string& name) const;  // throws DataError
    std::vector<double>& add_channel(const std::string& name);
};

// Tile container:
//   "GTIL" | u16 version | u32 height | u32 width | u32 channels |
//   per channel: u32 name length, name bytes |
//   per channel: f32 row-major values |
//   u32 crc of all prior bytes
// Values are stored at f32 precision.
void save_tile(const std::filesystem::path& path, const Tile& tile);
Tile load_tile(const std::filesystem::path& path);

}  // namespace emu::io
