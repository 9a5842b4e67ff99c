#pragma once

#include <array>
#include <random>

#include "laekit/latent.hpp"
#include "laekit/tape.hpp"

namespace laekit {

// Tri-level affine style mapper. One shared instance serves every
// attribute; attribute specificity enters only through the prompt
// embedding fed to map_edit.
struct MapperParams {
    std::array<Tensor, 3> weights;  // per group: (D_w, D_w + d_e)
    std::array<Tensor, 3> biases;   // per group: (D_w)
    float edit_scale = 0.1f;

    int latent_dim() const { return weights[0].shape.empty() ? 0 : weights[0].shape[0]; }
    int embed_dim() const {
        return weights[0].shape.size() > 1 ? weights[0].shape[1] - latent_dim() : 0;
    }
    void validate() const;
};

// Weights N(0, 1/(D_w + d_e)), biases zero.
MapperParams init_mapper(int latent_dim, int embed_dim, std::mt19937_64& rng,
                         float edit_scale = 0.1f);

// Per layer l in group g: delta_l = s * (W_g . concat(w_l, dv) + b_g).
EditDirection map_edit(const LatentCode& w, const Tensor& dv, const MapperParams& params,
                       const LatentSplit& split);

// Tape variant for training; returns one delta var per layer.
struct MapperVars {
    std::array<Tape::VarId, 3> weights;
    std::array<Tape::VarId, 3> biases;
};
MapperVars mapper_leaves(Tape& tape, const MapperParams& params);
std::vector<Tape::VarId> map_edit_var(Tape& tape, const LatentCode& w, Tape::VarId dv,
                                      const MapperVars& vars, const LatentSplit& split,
                                      float edit_scale);

}  // namespace laekit
