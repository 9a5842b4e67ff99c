#include "laekit/mpi.hpp"

#include <cmath>
#include <stdexcept>

namespace laekit {

void MultiplaneImage::validate() const {
    if (alphas.empty()) throw std::invalid_argument("multiplane image needs at least one plane");
    if (alphas.size() != depths.size())
        throw std::invalid_argument("alpha/depth plane count mismatch");
    if (color.shape.size() != 3 || color.shape[2] != 3)
        throw std::invalid_argument("color texture must be (H, H, 3)");
    int h = height();
    for (float v : color.data)
        if (!(v >= 0.0f && v <= 1.0f)) throw std::invalid_argument("color outside [0, 1]");
    for (const Tensor& a : alphas) {
        if (a.shape.size() != 3 || a.shape[0] != h || a.shape[1] != h || a.shape[2] != 1)
            throw std::invalid_argument("alpha map must be (H, H, 1)");
        for (float v : a.data)
            if (!(v >= 0.0f && v <= 1.0f)) throw std::invalid_argument("alpha outside [0, 1]");
    }
    for (size_t i = 1; i < depths.size(); ++i)
        if (!(depths[i] > depths[i - 1]))
            throw std::invalid_argument("plane depths must be strictly increasing");
}

std::vector<float> plane_depths(int count, float near, float far) {
    if (count < 1) throw std::invalid_argument("plane_depths: count must be positive");
    std::vector<float> d(static_cast<size_t>(count));
    if (count == 1) {
        d[0] = 0.5f * (near + far);
        return d;
    }
    for (int i = 0; i < count; ++i)
        d[static_cast<size_t>(i)] =
            near + (far - near) * static_cast<float>(i) / static_cast<float>(count - 1);
    return d;
}

static float deg2rad(float deg) { return deg * 3.14159265358979323846f / 180.0f; }

float ParallaxModel::dx(const CameraPose& pose, float depth) const {
    return scale * std::tan(deg2rad(pose.yaw)) / depth;
}

float ParallaxModel::dy(const CameraPose& pose, float depth) const {
    return scale * std::tan(deg2rad(pose.pitch)) / depth;
}

Tape::VarId composite_mpi_var(Tape& tape, Tape::VarId color_var,
                              std::span<const Tape::VarId> alpha_vars,
                              const std::vector<float>& depths, const CameraPose& pose,
                              const ParallaxModel& parallax) {
    if (alpha_vars.empty()) throw std::invalid_argument("composite: empty plane list");
    if (alpha_vars.size() != depths.size())
        throw std::invalid_argument("composite: alpha/depth count mismatch");
    pose.validate();
    std::vector<Tape::VarId> colors, alphas;
    for (size_t i = 0; i < alpha_vars.size(); ++i) {
        float ddx = parallax.dx(pose, depths[i]);
        float ddy = parallax.dy(pose, depths[i]);
        colors.push_back(tape.shift_sample(color_var, ddx, ddy));
        alphas.push_back(tape.shift_sample(alpha_vars[i], ddx, ddy));
    }
    return tape.over_composite(colors, alphas);
}

RenderedImage composite_mpi(const MultiplaneImage& mpi, const CameraPose& pose,
                            const ParallaxModel& parallax) {
    mpi.validate();
    Tape tape;
    Tape::VarId color = tape.leaf(mpi.color);
    std::vector<Tape::VarId> alphas;
    for (const Tensor& a : mpi.alphas) alphas.push_back(tape.leaf(a));
    Tape::VarId out = composite_mpi_var(tape, color, alphas, mpi.depths, pose, parallax);
    return {tape.value(out), pose};
}

Tensor composite_depth(const MultiplaneImage& mpi, const CameraPose& pose,
                       const ParallaxModel& parallax) {
    mpi.validate();
    pose.validate();
    int h = mpi.height();
    float far = mpi.depths.back();
    Tensor depth = Tensor::full({h, h, 1}, far);
    // far-to-near over, scalar "color" = plane depth, background = far plane
    for (int p = mpi.num_planes() - 1; p >= 0; --p) {
        float d = mpi.depths[static_cast<size_t>(p)];
        Tape tape;
        Tape::VarId a = tape.leaf(mpi.alphas[static_cast<size_t>(p)]);
        Tape::VarId shifted =
            tape.shift_sample(a, parallax.dx(pose, d), parallax.dy(pose, d));
        const Tensor& al = tape.value(shifted);
        for (int i = 0; i < h * h; ++i)
            depth[i] = d * al[i] + depth[i] * (1.0f - al[i]);
    }
    return depth;
}

}  // namespace laekit
