#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace emu::io {

// Writes via a sibling temp file and rename so readers never observe a
// partially written artifact.
void atomic_write_file(const std::filesystem::path& path, const std::string& bytes);

std::string read_file(const std::filesystem::path& path);

std::uint32_t crc32_of(const void* data, std::size_t len);
std::uint32_t crc32_of(const std::string& bytes);

// Little-endian scalar append/read helpers for the binary formats.
void put_u16(std::string& out, std::uint16_t v);
void put_u32(std::string& out, std::uint32_t v);
void put_u64(std::string& out, std::uint64_t v);
void put_f32(std::string& out, float v);
void put_f64(std::string& out, double v);

// Cursor-based reader; throws FormatError(context) on truncation.
class ByteReader {
public:
    ByteReader(const std::string& bytes, std::string context)
        : bytes_(bytes), context_(std::move(context)) {}

    std::uint16_t u16();
    std::uint32_t u32();
    std::uint64_t u64();
    float f32();
    double f64();
    std::string raw(std::size_t n);
    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t n);
    const std::string& bytes_;
    std::string context_;
    std::size_t pos_ = 0;
};

}  // namespace emu::io
