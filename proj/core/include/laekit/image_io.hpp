#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "laekit/mpi.hpp"

namespace laekit {

// 8-bit-per-channel RGB PNG. Pixel values are clamped to [0, 1] and
// rounded to the nearest byte.
void write_png(const std::filesystem::path& path, const Tensor& pixels);

// "yaw{+NN|-NN}_pitch{+NN|-NN}.png", angles rounded to whole degrees.
std::string sweep_file_name(const CameraPose& pose);

// Writes one PNG per rendered image into out_dir plus an index.json
// mapping each pose to its file. Returns the written file names in input
// order.
std::vector<std::string> write_pose_sweep(const std::filesystem::path& out_dir,
                                          const std::vector<RenderedImage>& images);

}  // namespace laekit
