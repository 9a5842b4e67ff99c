#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "laekit/tensor.hpp"

namespace laekit {

inline constexpr int kCheckpointFormatVersion = 1;

// A checkpoint is a directory: manifest.json plus one raw f32-le binary
// file per array. The manifest records shape, byte offset/length, and a
// CRC32 per array, the step counter, and a config snapshot.
struct CheckpointData {
    std::vector<std::pair<std::string, Tensor>> arrays;  // insertion order preserved
    nlohmann::json config;
    std::uint64_t step = 0;

    const Tensor& array(const std::string& name) const;
    bool has(const std::string& name) const;
};

// Write-temp-then-rename; an existing checkpoint at `dir` is replaced
// atomically.
void save_checkpoint(const CheckpointData& data, const std::filesystem::path& dir);

// Verifies the format version and every per-array CRC; throws on version
// mismatch, missing arrays, or corruption.
CheckpointData load_checkpoint(const std::filesystem::path& dir);

// The parsed manifest, for inspection tooling.
nlohmann::json read_manifest(const std::filesystem::path& dir);

}  // namespace laekit
