#include "emu/synth/normalize.hpp"

#include <cmath>
#include <map>

#include "emu/core/error.hpp"
#include "emu/core/text.hpp"
#include "emu/io/atomic_file.hpp"

namespace emu::synth {

ChannelStats ChannelStats::fit(const std::vector<const io::Tile*>& tiles,
                               const std::vector<std::string>& channel_names) {
    if (tiles.empty()) throw DataError("normalization fit requires at least one tile");
    ChannelStats st;
    st.names = channel_names;
    for (const std::string& name : channel_names) {
        double sum = 0.0;
        std::size_t count = 0;
        for (const io::Tile* t : tiles) {
            for (double v : t->channel(name)) sum += v;
            count += t->pixels();
        }
        const double m = sum / static_cast<double>(count);
        double ss = 0.0;
        for (const io::Tile* t : tiles) {
            for (double v : t->channel(name)) ss += (v - m) * (v - m);
        }
        const double sd = std::sqrt(ss / static_cast<double>(count));
        st.mean.push_back(m);
        st.sd.push_back(std::max(sd, 1e-6));
    }
    return st;
}

std::size_t ChannelStats::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return i;
    }
    throw DataError("normalization stats missing channel '" + name + "'");
}

void ChannelStats::save(const std::filesystem::path& path) const {
    std::map<std::string, std::string> kv;
    std::string order;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) order += ",";
        order += names[i];
        kv["mean." + names[i]] = format_double(mean[i]);
        kv["sd." + names[i]] = format_double(sd[i]);
    }
    kv["channels"] = order;
    io::atomic_write_file(path, write_kv_block(kv));
}

ChannelStats ChannelStats::load(const std::filesystem::path& path) {
    const std::string ctx = "normalization stats " + path.string();
    auto kv = parse_kv_block(io::read_file(path), ctx);
    auto it = kv.find("channels");
    if (it == kv.end()) throw FormatError(ctx + ": missing 'channels' key");
    ChannelStats st;
    for (const std::string& name : split(it->second, ',')) {
        auto mit = kv.find("mean." + name);
        auto sit = kv.find("sd." + name);
        if (mit == kv.end() || sit == kv.end()) {
            throw FormatError(ctx + ": missing stats for channel '" + name + "'");
        }
        st.names.push_back(name);
        st.mean.push_back(parse_double(mit->second, ctx));
        st.sd.push_back(parse_double(sit->second, ctx));
    }
    return st;
}

}  // namespace emu::synth
