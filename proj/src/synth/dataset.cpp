#include "emu/synth/dataset.hpp"

#include <charconv>
#include <iomanip>
#include <set>
#include <sstream>

#include "emu/core/error.hpp"
#include "emu/core/text.hpp"
#include "emu/io/atomic_file.hpp"

namespace emu::synth {

std::vector<const ManifestEntry*> DatasetManifest::split(const std::string& name) const {
    std::vector<const ManifestEntry*> out;
    for (const ManifestEntry& e : entries) {
        if (e.split == name) out.push_back(&e);
    }
    return out;
}

DatasetManifest build_dataset(const DatasetConfig& cfg, const std::filesystem::path& dir) {
    cfg.scene.validate();
    const std::size_t total = cfg.train_tiles + cfg.val_tiles + cfg.test_tiles;
    if (total == 0) throw ConfigError("dataset needs at least one tile");
    std::filesystem::create_directories(dir);

    DatasetManifest m;
    m.dir = dir;
    std::set<std::uint64_t> seen;
    for (std::size_t i = 0; i < total; ++i) {
        ManifestEntry e;
        e.seed = split_seed(cfg.seed, i);
        if (!seen.insert(e.seed).second) {
            throw DataError("tile seed collision at index " + std::to_string(i) +
                            "; choose a different dataset seed");
        }
        e.split = i < cfg.train_tiles ? "train"
                  : i < cfg.train_tiles + cfg.val_tiles ? "val"
                                                        : "test";
        std::ostringstream id;
        id << "tile_" << std::setw(4) << std::setfill('0') << i;
        e.id = id.str();
        e.file = e.id + ".gtil";
        io::Tile tile = generate_scene(cfg.scene, e.seed);
        io::save_tile(dir / e.file, tile);
        m.entries.push_back(std::move(e));
    }
    save_manifest(dir / "manifest.txt", m);
    return m;
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
    std::string out = "# id file split seed\n";
    for (const ManifestEntry& e : m.entries) {
        out += e.id + " " + e.file + " " + e.split + " " + std::to_string(e.seed) + "\n";
    }
    io::atomic_write_file(path, out);
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
    const std::string ctx = "manifest " + path.string();
    const std::string text = io::read_file(path);
    DatasetManifest m;
    m.dir = path.parent_path();
    std::size_t lineno = 0;
    for (const std::string& raw : split(text, '\n')) {
        ++lineno;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        const auto parts = split(line, ' ');
        if (parts.size() != 4) {
            throw FormatError(ctx + ": line " + std::to_string(lineno) +
                              " must be 'id file split seed'");
        }
        ManifestEntry e;
        e.id = parts[0];
        e.file = parts[1];
        e.split = parts[2];
        if (e.split != "train" && e.split != "val" && e.split != "test") {
            throw FormatError(ctx + ": line " + std::to_string(lineno) + " has unknown split '" +
                              e.split + "'");
        }
        const char* first = parts[3].data();
        const char* last = first + parts[3].size();
        auto [end, ec] = std::from_chars(first, last, e.seed);
        if (ec != std::errc{} || end != last) {
            throw FormatError(ctx + ": line " + std::to_string(lineno) + " has a bad seed '" +
                              parts[3] + "'");
        }
        m.entries.push_back(std::move(e));
    }
    if (m.entries.empty()) throw DataError(ctx + ": no tiles listed");
    return m;
}

ChannelRoles ChannelRoles::defaults() {
    ChannelRoles r;
    for (std::size_t b = 0; b < kBands; ++b) r.inputs.push_back("toa_b" + std::to_string(b));
    r.inputs.push_back("cos_sza");
    r.inputs.push_back("aod");
    for (std::size_t b = 0; b < kBands; ++b) r.targets.push_back("sr_b" + std::to_string(b));
    return r;
}

namespace {

model::Batch cut_batch(const io::Tile& tile, std::size_t y0, std::size_t x0, std::size_t h,
                       std::size_t w, const ChannelRoles& roles, const ChannelStats* stats) {
    const std::size_t ci = roles.inputs.size();
    const std::size_t ct = roles.targets.size();
    model::Batch b;
    b.x = ad::Tensor({1, h, w, ci});
    b.target = ad::Tensor({1, h, w, ct});
    b.clear = ad::Tensor({1, h, w});

    for (std::size_t k = 0; k < ci; ++k) {
        const auto& ch = tile.channel(roles.inputs[k]);
        const std::size_t si = stats ? stats->index_of(roles.inputs[k]) : 0;
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                double v = ch[(y0 + y) * tile.width + (x0 + x)];
                if (stats) v = stats->normalize(si, v);
                b.x[(y * w + x) * ci + k] = v;
            }
        }
    }
    for (std::size_t k = 0; k < ct; ++k) {
        const auto& ch = tile.channel(roles.targets[k]);
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                b.target[(y * w + x) * ct + k] = ch[(y0 + y) * tile.width + (x0 + x)];
            }
        }
    }
    const auto& mask = tile.channel(roles.mask);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            b.clear[y * w + x] = mask[(y0 + y) * tile.width + (x0 + x)];
        }
    }
    return b;
}

}  // namespace

std::vector<model::Batch> extract_patches(const io::Tile& tile, const PatchSpec& spec,
                                          const ChannelRoles& roles,
                                          const ChannelStats* stats) {
    if (spec.size == 0 || spec.stride == 0) throw ConfigError("patch size/stride must be positive");
    if (roles.inputs.empty() || roles.targets.empty()) {
        throw ConfigError("channel roles must name at least one input and one target");
    }
    std::vector<model::Batch> out;
    for (std::size_t y0 = 0; y0 + spec.size <= tile.height; y0 += spec.stride) {
        for (std::size_t x0 = 0; x0 + spec.size <= tile.width; x0 += spec.stride) {
            out.push_back(cut_batch(tile, y0, x0, spec.size, spec.size, roles, stats));
        }
    }
    if (out.empty()) {
        throw DataError("tile " + std::to_string(tile.height) + "x" + std::to_string(tile.width) +
                        " is smaller than the patch size " + std::to_string(spec.size));
    }
    return out;
}

model::Batch tile_batch(const io::Tile& tile, const ChannelRoles& roles,
                        const ChannelStats* stats) {
    return cut_batch(tile, 0, 0, tile.height, tile.width, roles, stats);
}

}  // namespace emu::synth
