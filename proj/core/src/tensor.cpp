#include "laekit/tensor.hpp"

#include <cmath>
#include <cstring>

namespace laekit {

int shape_size(const std::vector<int>& shape) {
    int n = 1;
    for (int s : shape) {
        if (s < 0) throw std::invalid_argument("negative tensor dimension");
        n *= s;
    }
    return n;
}

Tensor::Tensor(std::vector<int> s, std::vector<float> d) : shape(std::move(s)), data(std::move(d)) {
    if (shape_size(shape) != static_cast<int>(data.size()))
        throw std::invalid_argument("tensor shape/data size mismatch");
}

Tensor Tensor::zeros(std::vector<int> shape) {
    int n = shape_size(shape);
    return Tensor(std::move(shape), std::vector<float>(static_cast<size_t>(n), 0.0f));
}

Tensor Tensor::full(std::vector<int> shape, float value) {
    int n = shape_size(shape);
    return Tensor(std::move(shape), std::vector<float>(static_cast<size_t>(n), value));
}

Tensor Tensor::gaussian(std::vector<int> shape, float stddev, std::mt19937_64& rng) {
    Tensor t = zeros(std::move(shape));
    std::normal_distribution<float> dist(0.0f, stddev);
    for (float& v : t.data) v = dist(rng);
    return t;
}

bool Tensor::all_finite() const {
    for (float v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

std::uint64_t fnv1a_digest(std::uint64_t seed, const Tensor& t) {
    std::uint64_t h = seed ? seed : 1469598103934665603ull;
    for (float v : t.data) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        for (int b = 0; b < 4; ++b) {
            h ^= (bits >> (8 * b)) & 0xffu;
            h *= 1099511628211ull;
        }
    }
    return h;
}

}  // namespace laekit
