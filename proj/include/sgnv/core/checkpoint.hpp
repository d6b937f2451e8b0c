#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "sgnv/core/nn.hpp"

namespace sgnv {

// Checkpoint container: versioned binary header, JSON metadata (module
// identity, training step, config echo), then named double arrays stored as
// raw little-endian bytes so load(save(x)) is bit-exact.

struct CheckpointMeta {
  std::string module;
  int64_t step = 0;
  nlohmann::json config;
};

void save_checkpoint(const std::filesystem::path& path,
                     const CheckpointMeta& meta, const ParamStore& params);

/// Loads arrays into a fresh store (insertion order = file order).
CheckpointMeta load_checkpoint(const std::filesystem::path& path,
                               ParamStore& params);

/// Loads arrays into an existing store whose parameter names/shapes must
/// match the file exactly.
CheckpointMeta load_checkpoint_into(const std::filesystem::path& path,
                                    ParamStore& params);

}  // namespace sgnv
