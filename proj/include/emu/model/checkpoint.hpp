#pragma once

#include <filesystem>

#include "emu/model/dc_model.hpp"

namespace emu::model {

// Binary model snapshot:
//   "DCEM" | u16 version | u32 config block length | config text |
//   f64 parameter values in declaration order | u32 crc of all prior bytes
// Config text is the canonical key-sorted "key = value" block, so equal
// models serialize to identical bytes.
void save_checkpoint(const std::filesystem::path& path, const DcModel& model);
DcModel load_checkpoint(const std::filesystem::path& path);

}  // namespace emu::model
