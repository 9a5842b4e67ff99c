#include "laekit/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace laekit {

void LossWeights::validate() const {
    for (float v : {dclip, sc, id, idvc, latent, alpha})
        if (!(v >= 0.0f)) throw std::invalid_argument("loss weights must be nonnegative");
}

LossBreakdown total_loss(const LossBreakdown& terms, const LossWeights& weights) {
    weights.validate();
    LossBreakdown out = terms;
    out.total = static_cast<double>(weights.dclip) * terms.dclip +
                static_cast<double>(weights.sc) * terms.sc +
                static_cast<double>(weights.id) * terms.id +
                static_cast<double>(weights.idvc) * terms.idvc +
                static_cast<double>(weights.latent) * terms.latent +
                static_cast<double>(weights.alpha) * terms.alpha;
    return out;
}

static Tape::VarId zero_scalar(Tape& tape) { return tape.leaf(Tensor({1}, {0.0f})); }

static Tape::VarId normalized(Tape& tape, Tape::VarId v) {
    Tape::VarId n = tape.l2norm(v);
    if (tape.scalar(n) == 0.0f) throw std::domain_error("zero-norm embedding");
    return tape.div_by_scalar(v, n);
}

Tape::VarId directional_clip_loss_var(Tape& tape, std::span<const Tape::VarId> edited_images,
                                      std::span<const Tape::VarId> source_images,
                                      std::span<const Tape::VarId> text_embeddings,
                                      Tape::VarId t_src_embedding, const ImageEncoder& encoder) {
    size_t k = edited_images.size();
    if (k == 0 || source_images.size() != k || text_embeddings.size() != k)
        throw std::invalid_argument("directional clip loss: per-attribute inputs must align");
    Tape::VarId t_src = normalized(tape, t_src_embedding);
    std::vector<Tape::VarId> summands;
    for (size_t i = 0; i < k; ++i) {
        Tape::VarId ie = normalized(tape, encoder.encode(tape, edited_images[i]));
        Tape::VarId is = normalized(tape, encoder.encode(tape, source_images[i]));
        Tape::VarId di = tape.sub(ie, is);
        Tape::VarId dt = tape.sub(normalized(tape, text_embeddings[i]), t_src);
        Tape::VarId cos = tape.cosine(di, dt);
        summands.push_back(tape.affine(cos, -1.0f, 1.0f));
    }
    return tape.sum(summands);
}

Tape::VarId token_contrastive_loss_var(Tape& tape,
                                       std::span<const Tape::VarId> prompt_embeddings) {
    size_t k = prompt_embeddings.size();
    if (k == 0) throw std::invalid_argument("contrastive loss: need at least one embedding");
    if (k == 1) return zero_scalar(tape);
    std::vector<Tape::VarId> summands;
    for (size_t i = 0; i < k; ++i)
        for (size_t j = i + 1; j < k; ++j)
            summands.push_back(tape.cosine(prompt_embeddings[i], prompt_embeddings[j]));
    return tape.sum(summands);
}

Tape::VarId identity_loss_var(Tape& tape, Tape::VarId edited_image, Tape::VarId source_image,
                              const IdentityEncoder& encoder) {
    Tape::VarId ee = encoder.encode(tape, edited_image);
    Tape::VarId es = encoder.encode(tape, source_image);
    return tape.affine(tape.cosine(ee, es), -1.0f, 1.0f);
}

Tape::VarId idvc_loss_var(Tape& tape,
                          std::span<const std::pair<Tape::VarId, Tape::VarId>> pair_images,
                          const IdentityEncoder& encoder) {
    if (pair_images.empty()) return zero_scalar(tape);
    std::vector<Tape::VarId> summands;
    for (const auto& [a, b] : pair_images) {
        Tape::VarId ea = encoder.encode(tape, a);
        Tape::VarId eb = encoder.encode(tape, b);
        summands.push_back(tape.affine(tape.cosine(ea, eb), -1.0f, 1.0f));
    }
    return tape.sum(summands);
}

Tape::VarId latent_reg_loss_var(Tape& tape, std::span<const Tape::VarId> delta_layers) {
    if (delta_layers.empty()) throw std::invalid_argument("latent reg: no layers");
    Tape::VarId stacked = delta_layers[0];
    for (size_t i = 1; i < delta_layers.size(); ++i)
        stacked = tape.concat(stacked, delta_layers[i]);
    return tape.l2norm(stacked);
}

Tape::VarId alpha_reg_loss_var(Tape& tape, std::span<const Tape::VarId> activations) {
    if (activations.empty()) throw std::invalid_argument("alpha reg: no activations");
    Tape::VarId stacked = activations[0];
    for (size_t i = 1; i < activations.size(); ++i)
        stacked = tape.concat(stacked, activations[i]);
    return tape.l2norm(stacked);
}

// ---------------------------------------------------------------------------
// Plain surfaces
// ---------------------------------------------------------------------------

double directional_clip_loss(const std::vector<Tensor>& edited_images,
                             const std::vector<Tensor>& source_images,
                             const std::vector<Tensor>& text_embeddings,
                             const Tensor& t_src_embedding, const ImageEncoder& encoder) {
    Tape tape;
    std::vector<Tape::VarId> ei, si, te;
    for (const Tensor& t : edited_images) ei.push_back(tape.leaf(t));
    for (const Tensor& t : source_images) si.push_back(tape.leaf(t));
    for (const Tensor& t : text_embeddings) te.push_back(tape.leaf(t));
    Tape::VarId ts = tape.leaf(t_src_embedding);
    return tape.scalar(directional_clip_loss_var(tape, ei, si, te, ts, encoder));
}

double token_contrastive_loss(const std::vector<Tensor>& prompt_embeddings) {
    Tape tape;
    std::vector<Tape::VarId> ids;
    for (const Tensor& t : prompt_embeddings) ids.push_back(tape.leaf(t));
    return tape.scalar(token_contrastive_loss_var(tape, ids));
}

double identity_loss(const RenderedImage& edited_frontal, const RenderedImage& source_frontal,
                     const IdentityEncoder& encoder) {
    if (edited_frontal.pose != CameraPose{0.0f, 0.0f} ||
        source_frontal.pose != CameraPose{0.0f, 0.0f})
        throw std::invalid_argument("identity loss expects frontal renders");
    Tape tape;
    Tape::VarId e = tape.leaf(edited_frontal.pixels);
    Tape::VarId s = tape.leaf(source_frontal.pixels);
    return tape.scalar(identity_loss_var(tape, e, s, encoder));
}

double view_consistency_identity_loss(
    const std::vector<LatentCode>& edited_codes,
    const std::vector<std::pair<CameraPose, CameraPose>>& pose_pairs, const ToyBackbone& backbone,
    const AlphaBranchParams& alpha, const IdentityEncoder& encoder, const ParallaxModel& parallax) {
    size_t k = edited_codes.size();
    if (k < 2) return 0.0;
    size_t expected = k * (k - 1) / 2;
    if (pose_pairs.size() != expected)
        throw std::invalid_argument("idvc: need one pose pair per unordered code pair");
    std::vector<MultiplaneImage> mpis;
    for (const LatentCode& w : edited_codes) mpis.push_back(backbone.generate(w, alpha));
    Tape tape;
    std::vector<std::pair<Tape::VarId, Tape::VarId>> pairs;
    size_t p = 0;
    for (size_t i = 0; i < k; ++i)
        for (size_t j = i + 1; j < k; ++j, ++p) {
            RenderedImage a = composite_mpi(mpis[i], pose_pairs[p].first, parallax);
            RenderedImage b = composite_mpi(mpis[j], pose_pairs[p].second, parallax);
            pairs.emplace_back(tape.leaf(a.pixels), tape.leaf(b.pixels));
        }
    return tape.scalar(idvc_loss_var(tape, pairs, encoder));
}

double latent_reg_loss(const LatentCode& w, const Tensor& dv, const MapperParams& mapper,
                       const LatentSplit& split) {
    return map_edit(w, dv, mapper, split).l2_norm();
}

double alpha_reg_loss(const std::vector<Tensor>& alpha_activations) {
    double acc = 0.0;
    for (const Tensor& a : alpha_activations) {
        if (!a.all_finite()) throw std::invalid_argument("alpha reg: non-finite activations");
        for (float v : a.data) acc += static_cast<double>(v) * v;
    }
    return std::sqrt(acc);
}

}  // namespace laekit
