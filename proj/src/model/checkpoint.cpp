#include "emu/model/checkpoint.hpp"

#include <string>

#include "emu/core/error.hpp"
#include "emu/core/text.hpp"
#include "emu/io/atomic_file.hpp"

namespace emu::model {

namespace {
constexpr char kMagic[4] = {'D', 'C', 'E', 'M'};
constexpr std::uint16_t kVersion = 1;
}  // namespace

void save_checkpoint(const std::filesystem::path& path, const DcModel& model) {
    std::string out;
    out.append(kMagic, 4);
    io::put_u16(out, kVersion);
    const std::string cfg = write_kv_block(model.config().to_kv());
    io::put_u32(out, static_cast<std::uint32_t>(cfg.size()));
    out += cfg;
    for (const ad::Parameter* p : model.parameters()) {
        for (std::size_t i = 0; i < p->value.size(); ++i) io::put_f64(out, p->value[i]);
    }
    io::put_u32(out, io::crc32_of(out));
    io::atomic_write_file(path, out);
}

DcModel load_checkpoint(const std::filesystem::path& path) {
    const std::string bytes = io::read_file(path);
    const std::string ctx = "checkpoint " + path.string();
    if (bytes.size() < 14) throw FormatError(ctx + ": file too small");
    if (bytes.compare(0, 4, kMagic, 4) != 0) throw FormatError(ctx + ": bad magic");

    // CRC covers everything before the trailing checksum field.
    io::ByteReader tail(bytes, ctx);
    tail.raw(bytes.size() - 4);
    const std::uint32_t stored = tail.u32();
    const std::uint32_t actual = io::crc32_of(bytes.data(), bytes.size() - 4);
    if (stored != actual) throw FormatError(ctx + ": checksum mismatch");

    io::ByteReader r(bytes, ctx);
    r.raw(4);
    const std::uint16_t version = r.u16();
    if (version != kVersion) {
        throw FormatError(ctx + ": unsupported version " + std::to_string(version));
    }
    const std::uint32_t cfg_len = r.u32();
    const std::string cfg_text = r.raw(cfg_len);
    ModelConfig cfg = ModelConfig::from_kv(parse_kv_block(cfg_text, ctx), ctx);

    DcModel model(cfg);
    const std::size_t want = model.parameter_count();
    if (r.remaining() != want * 8 + 4) {
        const std::size_t have = r.remaining() >= 4 ? (r.remaining() - 4) / 8 : 0;
        throw FormatError(ctx + ": expected " + std::to_string(want) + " parameter values, found " +
                          std::to_string(have));
    }
    for (ad::Parameter* p : model.parameters()) {
        for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] = r.f64();
    }
    return model;
}

}  // namespace emu::model
