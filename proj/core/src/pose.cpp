#include "laekit/pose.hpp"

#include <cmath>
#include <stdexcept>

namespace laekit {

void CameraPose::validate() const {
    if (!(yaw >= -90.0f && yaw <= 90.0f && pitch >= -90.0f && pitch <= 90.0f))
        throw std::invalid_argument("camera pose out of the [-90, 90] degree range");
}

void AngleRange::validate() const {
    if (min > max) throw std::invalid_argument("inverted angle range");
    if (min < -90.0f || max > 90.0f) throw std::invalid_argument("angle range outside [-90, 90]");
}

static float lerp_step(const AngleRange& r, int i, int k) {
    if (k == 1) return r.mid();
    return r.min + (r.max - r.min) * static_cast<float>(i) / static_cast<float>(k - 1);
}

std::vector<CameraPose> pose_grid(AngleRange yaw, AngleRange pitch, int n, PoseLayout layout) {
    if (n < 1) throw std::invalid_argument("pose_grid: need at least one pose");
    yaw.validate();
    pitch.validate();
    std::vector<CameraPose> poses;
    poses.reserve(static_cast<size_t>(n));
    if (layout == PoseLayout::Diagonal) {
        for (int i = 0; i < n; ++i)
            poses.push_back({lerp_step(yaw, i, n), lerp_step(pitch, i, n)});
        return poses;
    }
    int k = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
    if (k * k != n) throw std::invalid_argument("pose_grid: grid layout needs a perfect-square count");
    for (int pi = 0; pi < k; ++pi)
        for (int yi = 0; yi < k; ++yi)
            poses.push_back({lerp_step(yaw, yi, k), lerp_step(pitch, pi, k)});
    return poses;
}

CameraPose sample_pose(std::mt19937_64& rng, AngleRange yaw, AngleRange pitch) {
    yaw.validate();
    pitch.validate();
    std::uniform_real_distribution<float> dy(yaw.min, yaw.max);
    std::uniform_real_distribution<float> dp(pitch.min, pitch.max);
    float y = dy(rng);
    float p = dp(rng);
    if (yaw.min == yaw.max) y = yaw.min;
    if (pitch.min == pitch.max) p = pitch.min;
    return {y, p};
}

}  // namespace laekit
