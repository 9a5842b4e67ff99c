#pragma once

#include <random>
#include <vector>

namespace laekit {

// A render viewpoint in degrees. Yaw and pitch both live in [-90, 90].
struct CameraPose {
    float yaw = 0.0f;
    float pitch = 0.0f;

    void validate() const;
    bool operator==(const CameraPose&) const = default;
};

struct AngleRange {
    float min = 0.0f;
    float max = 0.0f;

    void validate() const;  // min <= max, both in [-90, 90]
    float mid() const { return 0.5f * (min + max); }
};

enum class PoseLayout { Grid, Diagonal };

// Grid layout: n must be a perfect square k*k; poses form the Cartesian
// product of k evenly spaced yaws and pitches (range endpoints included),
// pitch-major so the first pose is (yaw_min, pitch_min) and the last is
// (yaw_max, pitch_max). Diagonal layout: n poses marching both angles
// together from (min, min) to (max, max).
std::vector<CameraPose> pose_grid(AngleRange yaw, AngleRange pitch, int n,
                                  PoseLayout layout = PoseLayout::Grid);

// Uniform draw inside the ranges; consumes exactly two values from rng.
CameraPose sample_pose(std::mt19937_64& rng, AngleRange yaw, AngleRange pitch);

}  // namespace laekit
