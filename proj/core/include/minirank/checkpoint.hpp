#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>

#include "minirank/transformer.hpp"

namespace minirank {

/// Self-describing binary checkpoint: header with config values and an
/// endianness tag, followed by named tensors (row-major 64-bit floats).
struct Checkpoint {
    ModelConfig config;
    ParameterSet params;
    // tensors beyond the backbone (e.g. scoring head, projection), by name
    std::map<std::string, Eigen::MatrixXd> extra;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// Stable fingerprint of a checkpoint's config + parameter bytes.
uint64_t checkpoint_fingerprint(const Checkpoint& ckpt);

} // namespace minirank
