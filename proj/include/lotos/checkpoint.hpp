#pragma once

#include <span>
#include <string>

#include "lotos/nets.hpp"

namespace lotos {

struct CheckpointMeta {
    std::string method = "orig";  // training method tag
    std::uint64_t seed = 0;       // seed provenance
};

// Self-describing JSON document, format_version 1. Parameters round-trip
// bitwise. Errors: MalformedFile, UnsupportedVersion, ShapeError.
void save_checkpoint(const Model& model, const std::string& path, const CheckpointMeta& meta);
void save_checkpoint(std::span<const Model> ensemble, const std::string& path,
                     const CheckpointMeta& meta);

struct LoadedCheckpoint {
    std::vector<Model> models;  // one entry for single-model checkpoints
    CheckpointMeta meta;
    bool is_ensemble = false;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace lotos
