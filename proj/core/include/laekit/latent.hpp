#pragma once

#include <array>
#include <vector>

#include "laekit/tensor.hpp"

namespace laekit {

// A point in the generator's extended latent space: one vector per layer.
struct LatentCode {
    std::vector<Tensor> layers;  // each of dimension dim()

    int num_layers() const { return static_cast<int>(layers.size()); }
    int dim() const { return layers.empty() ? 0 : layers[0].size(); }
    void validate() const;  // >= 3 layers, equal dims, finite entries
};

// An additive offset with the same shape as the code it edits.
struct EditDirection {
    std::vector<Tensor> layers;

    int num_layers() const { return static_cast<int>(layers.size()); }
    double l2_norm() const;
};

// Half-open layer-index ranges for the coarse / middle / fine groups.
struct LatentSplit {
    int coarse_end = 0;  // coarse = [0, coarse_end)
    int middle_end = 0;  // middle = [coarse_end, middle_end)
    // fine = [middle_end, num_layers)

    static LatentSplit thirds(int num_layers);
    // Explicit half-open ranges; rejects anything that is not a contiguous
    // in-order partition of [0, num_layers).
    static LatentSplit from_ranges(std::array<int, 2> coarse, std::array<int, 2> middle,
                                   std::array<int, 2> fine, int num_layers);
    void validate(int num_layers) const;  // contiguous partition, each group nonempty
    int group_of(int layer) const;        // 0 coarse, 1 middle, 2 fine
};

struct LatentGroups {
    std::vector<Tensor> coarse, middle, fine;
};

LatentGroups split_latent(const LatentCode& w, const LatentSplit& split);
LatentCode merge_latent(const LatentGroups& groups);
LatentCode apply_edit(const LatentCode& w, const EditDirection& delta);

}  // namespace laekit
