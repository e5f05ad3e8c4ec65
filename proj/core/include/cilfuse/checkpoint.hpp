#pragma once

#include <filesystem>

#include "cilfuse/fusion.hpp"

namespace cilfuse {

// Checkpoint file layout (little-endian):
//
//   offset  size  field
//   ------  ----  -----------------------------------------------
//   0       4     magic "CKPT"
//   4       4     u32 format version (1)
//   8       4     u32 metadata length N
//   12      N     JSON metadata (config + topology)
//   12+N    4     u32 section count
//   ...           sections, each:
//                   u32   name length M
//                   M     section name (e.g. "trunk.0.W", "head.2.b")
//                   u64   value count
//                   8*ea  float64 values
//
// Metadata records fusion mode, stream list, stream dims, projection and
// trunk widths, activation, the freeze flag, and the per-task class lists —
// enough to rebuild the model before loading sections. The distillation
// snapshot is transient training state and is not saved.
void save_checkpoint(const std::filesystem::path& path,
                     const FusionModel& model);

FusionModel load_checkpoint(const std::filesystem::path& path);

}  // namespace cilfuse
