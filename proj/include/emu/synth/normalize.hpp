#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "emu/io/gtil.hpp"

namespace emu::synth {

// Per-channel affine normalization fitted on training tiles and persisted
// beside the checkpoint so inference sees identical inputs.
struct ChannelStats {
    std::vector<std::string> names;
    std::vector<double> mean;
    std::vector<double> sd;  // floored at 1e-6 for (near-)constant channels

    static ChannelStats fit(const std::vector<const io::Tile*>& tiles,
                            const std::vector<std::string>& channel_names);

    std::size_t index_of(const std::string& name) const;  // throws DataError
    double normalize(std::size_t idx, double v) const { return (v - mean[idx]) / sd[idx]; }

    void save(const std::filesystem::path& path) const;
    static ChannelStats load(const std::filesystem::path& path);
};

}  // namespace emu::synth
