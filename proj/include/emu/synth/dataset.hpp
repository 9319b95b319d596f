#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "emu/io/gtil.hpp"
#include "emu/model/loss.hpp"
#include "emu/synth/normalize.hpp"
#include "emu/synth/scene.hpp"

namespace emu::synth {

struct DatasetConfig {
    SceneConfig scene;
    std::size_t train_tiles = 7;
    std::size_t val_tiles = 1;
    std::size_t test_tiles = 2;
    std::uint64_t seed = 0;
};

struct ManifestEntry {
    std::string id;
    std::string file;  // relative to the manifest directory
    std::string split; // train | val | test
    std::uint64_t seed = 0;
};

struct DatasetManifest {
    std::filesystem::path dir;
    std::vector<ManifestEntry> entries;

    std::vector<const ManifestEntry*> split(const std::string& name) const;
    std::filesystem::path path_of(const ManifestEntry& e) const { return dir / e.file; }
};

// Renders every tile, writes them plus a manifest into dir, and returns the
// manifest. Tile seeds are derived per index from cfg.seed and must be
// pairwise distinct.
DatasetManifest build_dataset(const DatasetConfig& cfg, const std::filesystem::path& dir);

void save_manifest(const std::filesystem::path& path, const DatasetManifest& m);
DatasetManifest load_manifest(const std::filesystem::path& path);

// Which tile channels feed the model and which are learning targets.
struct ChannelRoles {
    std::vector<std::string> inputs;
    std::vector<std::string> targets;
    std::string mask = "clear";

    static ChannelRoles defaults();  // toa_b0..5 + cos_sza + aod -> sr_b0..5
};

struct PatchSpec {
    std::size_t size = 50;
    std::size_t stride = 50;
};

// Non-overhanging patch grid: windows start at multiples of stride and must
// fit entirely inside the tile. stats, when given, normalizes input channels.
std::vector<model::Batch> extract_patches(const io::Tile& tile, const PatchSpec& spec,
                                          const ChannelRoles& roles,
                                          const ChannelStats* stats);

// Whole tile as a single [1, H, W, *] batch.
model::Batch tile_batch(const io::Tile& tile, const ChannelRoles& roles,
                        const ChannelStats* stats);

}  // namespace emu::synth
