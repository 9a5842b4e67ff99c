#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace laekit {

// Dense row-major float tensor. Small and copyable; every array in the
// toolkit (latents, token tables, images, alpha maps) is one of these.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;
    Tensor(std::vector<int> s, std::vector<float> d);

    static Tensor zeros(std::vector<int> shape);
    static Tensor full(std::vector<int> shape, float value);
    // i.i.d. N(0, stddev^2) entries drawn from rng.
    static Tensor gaussian(std::vector<int> shape, float stddev, std::mt19937_64& rng);

    int size() const { return static_cast<int>(data.size()); }
    float& operator[](int i) { return data[static_cast<size_t>(i)]; }
    float operator[](int i) const { return data[static_cast<size_t>(i)]; }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    bool all_finite() const;
};

int shape_size(const std::vector<int>& shape);

// FNV-1a over the raw float bytes; used for frozen-weight digests.
std::uint64_t fnv1a_digest(std::uint64_t seed, const Tensor& t);

}  // namespace laekit
