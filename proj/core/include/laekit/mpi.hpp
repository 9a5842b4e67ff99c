#pragma once

#include <vector>

#include "laekit/pose.hpp"
#include "laekit/tape.hpp"
#include "laekit/tensor.hpp"

namespace laekit {

// Shared color texture plus per-plane alpha maps at increasing depths.
struct MultiplaneImage {
    Tensor color;                // (H, H, 3) in [0, 1]
    std::vector<Tensor> alphas;  // L maps of shape (H, H, 1) in [0, 1]
    std::vector<float> depths;   // L values, strictly increasing, in [near, far]

    int height() const { return color.shape.empty() ? 0 : color.shape[0]; }
    int num_planes() const { return static_cast<int>(alphas.size()); }
    void validate() const;
};

struct RenderedImage {
    Tensor pixels;  // (H, H, 3) in [0, 1]
    CameraPose pose;
};

// L depths evenly spaced across [near, far] inclusive (the midpoint for L=1).
std::vector<float> plane_depths(int count, float near, float far);

// Pixel shift applied to a plane at depth d when viewed from `pose`:
// parallax_scale * (tan yaw, tan pitch) / d.
struct ParallaxModel {
    float scale = 4.0f;

    float dx(const CameraPose& pose, float depth) const;
    float dy(const CameraPose& pose, float depth) const;
};

// Back-to-front over-compositing of the parallax-shifted planes onto a
// black background. Every output pixel is a convex combination of plane
// colors and the background, so values stay in [0, 1].
RenderedImage composite_mpi(const MultiplaneImage& mpi, const CameraPose& pose,
                            const ParallaxModel& parallax = {});

// Tape variant: same arithmetic, differentiable in color and alphas.
// alpha_vars are ordered near-to-far and shaped (H, H, 1).
Tape::VarId composite_mpi_var(Tape& tape, Tape::VarId color_var,
                              std::span<const Tape::VarId> alpha_vars,
                              const std::vector<float>& depths, const CameraPose& pose,
                              const ParallaxModel& parallax = {});

// Expected depth per pixel under the same compositing weights, with the
// far-plane depth behind everything. Used as the pseudo-ground-truth
// depth signal by the evaluation metrics.
Tensor composite_depth(const MultiplaneImage& mpi, const CameraPose& pose,
                       const ParallaxModel& parallax = {});

}  // namespace laekit
