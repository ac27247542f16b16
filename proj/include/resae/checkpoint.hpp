#pragma once

// Binary checkpoint: "RESAECKP", u32 version, u64 seed, u32 count, then per
// parameter u32 name length, name bytes, u32 rank, u64 extents, and the values
// as little-endian IEEE-754 doubles. Loading reproduces values bit for bit.

#include <filesystem>
#include <string>

#include "resae/param_store.hpp"

namespace resae {

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const ParamStore& store);
ParamStore parse_checkpoint(const std::string& bytes);

void save_checkpoint(const ParamStore& store, const std::filesystem::path& path);
ParamStore load_checkpoint(const std::filesystem::path& path);

// Copies checkpoint values into an existing store. Every parameter of the
// target must be present with the same shape; the error names the offending
// parameter path.
void restore_checkpoint(ParamStore& target, const ParamStore& loaded);

}  // namespace resae
