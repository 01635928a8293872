#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "adamf/params.hpp"

namespace adamf {

inline constexpr std::string_view kCheckpointMagic = "AMF1";
inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout (all integers little-endian):
//   magic "AMF1", version u32
//   value section:   count u32, then per parameter
//                    name_len u32, name bytes, rank u32, dims u32 x rank, f32 payload
//   moment sections: first moments, then second moments, same layout and order
//   step section:    count u32, then u64 step per parameter in the same order
// Payloads are float32 regardless of compute precision.

std::string serialize_checkpoint(const ParameterStore& params);

/// Overwrites values and Adam state of `params` from checkpoint bytes. Names
/// and shapes must match the store exactly (ContractViolation naming the
/// tensor otherwise); truncated or malformed bytes raise IoError.
void deserialize_checkpoint(std::string_view bytes, ParameterStore& params);

void save_checkpoint(const ParameterStore& params, const std::filesystem::path& path);
void load_checkpoint(const std::filesystem::path& path, ParameterStore& params);

/// Rounds every value and moment to float32, i.e. the state a checkpoint
/// round trip would produce.
void round_to_checkpoint_precision(ParameterStore& params);

}  // namespace adamf
