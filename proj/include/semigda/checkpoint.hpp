#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "semigda/nn.hpp"

namespace semigda {

// Single-file binary checkpoint:
//
//   magic "SGDACKPT" | u32 format version | u64 manifest length | manifest
//   JSON | raw little-endian float64 payload
//
// The manifest records caller metadata plus, per parameter group, the names,
// shapes, trainable flags and a content hash of every tensor; optimizer
// moment buffers follow the parameters in the payload. Nothing time- or
// path-dependent is stored, so saving, loading and saving again produces a
// byte-identical file.

struct CheckpointGroup {
    std::string name;
    std::vector<nn::Param*> params;
};

struct CheckpointOptimizer {
    std::string group;
    nn::Adam* adam = nullptr;
};

void save_checkpoint(const std::string& path, const nlohmann::json& meta,
                     const std::vector<CheckpointGroup>& groups,
                     const std::vector<CheckpointOptimizer>& optims = {});

// Loads parameter (and optimizer) payloads into the live objects, which must
// match the manifest's group/param names and shapes exactly. Verifies each
// group's content hash after reading. Returns the stored metadata.
nlohmann::json load_checkpoint(const std::string& path, const std::vector<CheckpointGroup>& groups,
                               const std::vector<CheckpointOptimizer>& optims = {});

// Reads only the manifest (cheap).
nlohmann::json read_checkpoint_manifest(const std::string& path);

}  // namespace semigda
