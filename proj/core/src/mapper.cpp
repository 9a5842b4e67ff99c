#include "laekit/mapper.hpp"

#include <cmath>
#include <stdexcept>

namespace laekit {

void MapperParams::validate() const {
    if (!(edit_scale > 0.0f)) throw std::invalid_argument("edit scale must be positive");
    int dw = latent_dim();
    for (int g = 0; g < 3; ++g) {
        const Tensor& w = weights[static_cast<size_t>(g)];
        const Tensor& b = biases[static_cast<size_t>(g)];
        if (w.shape.size() != 2 || w.shape[0] != dw || w.shape[1] != weights[0].shape[1])
            throw std::invalid_argument("mapper weight shape mismatch");
        if (b.size() != dw) throw std::invalid_argument("mapper bias shape mismatch");
        if (!w.all_finite() || !b.all_finite())
            throw std::invalid_argument("mapper params have non-finite entries");
    }
}

MapperParams init_mapper(int latent_dim, int embed_dim, std::mt19937_64& rng, float edit_scale) {
    if (latent_dim < 1 || embed_dim < 1)
        throw std::invalid_argument("mapper dims must be positive");
    MapperParams p;
    p.edit_scale = edit_scale;
    float std = 1.0f / std::sqrt(static_cast<float>(latent_dim + embed_dim));
    for (int g = 0; g < 3; ++g) {
        p.weights[static_cast<size_t>(g)] =
            Tensor::gaussian({latent_dim, latent_dim + embed_dim}, std, rng);
        p.biases[static_cast<size_t>(g)] = Tensor::zeros({latent_dim});
    }
    p.validate();
    return p;
}

MapperVars mapper_leaves(Tape& tape, const MapperParams& params) {
    MapperVars v;
    for (int g = 0; g < 3; ++g) {
        v.weights[static_cast<size_t>(g)] =
            tape.leaf(params.weights[static_cast<size_t>(g)], true);
        v.biases[static_cast<size_t>(g)] = tape.leaf(params.biases[static_cast<size_t>(g)], true);
    }
    return v;
}

std::vector<Tape::VarId> map_edit_var(Tape& tape, const LatentCode& w, Tape::VarId dv,
                                      const MapperVars& vars, const LatentSplit& split,
                                      float edit_scale) {
    split.validate(w.num_layers());
    std::vector<Tape::VarId> deltas;
    deltas.reserve(w.layers.size());
    for (int l = 0; l < w.num_layers(); ++l) {
        int g = split.group_of(l);
        Tape::VarId wl = tape.leaf(w.layers[static_cast<size_t>(l)]);
        Tape::VarId input = tape.concat(wl, dv);
        Tape::VarId out = tape.matvec(vars.weights[static_cast<size_t>(g)], input,
                                      vars.biases[static_cast<size_t>(g)]);
        deltas.push_back(tape.affine(out, edit_scale, 0.0f));
    }
    return deltas;
}

EditDirection map_edit(const LatentCode& w, const Tensor& dv, const MapperParams& params,
                       const LatentSplit& split) {
    params.validate();
    if (w.dim() != params.latent_dim())
        throw std::invalid_argument("map_edit: latent dim mismatch");
    if (dv.size() != params.embed_dim())
        throw std::invalid_argument("map_edit: embedding dim mismatch");
    Tape tape;
    MapperVars vars = mapper_leaves(tape, params);
    Tape::VarId dvv = tape.leaf(dv);
    std::vector<Tape::VarId> deltas = map_edit_var(tape, w, dvv, vars, split, params.edit_scale);
    EditDirection dir;
    for (Tape::VarId d : deltas) {
        Tensor t = tape.value(d);
        if (!t.all_finite()) throw std::runtime_error("map_edit: non-finite edit direction");
        dir.layers.push_back(std::move(t));
    }
    return dir;
}

}  // namespace laekit
