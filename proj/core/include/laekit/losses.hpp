#pragma once

#include <utility>
#include <vector>

#include "laekit/backbones.hpp"
#include "laekit/mapper.hpp"
#include "laekit/mpi.hpp"
#include "laekit/tape.hpp"

namespace laekit {

struct LossWeights {
    float dclip = 1.0f;
    float sc = 0.8f;
    float id = 0.8f;
    float idvc = 0.5f;
    float latent = 0.5f;
    float alpha = 0.5f;

    void validate() const;  // all nonnegative
};

struct LossBreakdown {
    double dclip = 0.0, sc = 0.0, id = 0.0, idvc = 0.0, latent = 0.0, alpha = 0.0;
    double total = 0.0;
};

// total = weighted sum; the breakdown keeps the unweighted terms.
LossBreakdown total_loss(const LossBreakdown& terms, const LossWeights& weights);

// ---------------------------------------------------------------------------
// Tape-level terms. Image/text inputs arrive as tape vars so gradients
// reach the style tokens, mapper, and alpha branch. Zero-norm embeddings
// raise std::domain_error instead of propagating NaNs.
// ---------------------------------------------------------------------------

// sum_i (1 - cos(dI_i, dT_i)) with dI_i the difference of normalized image
// embeddings (edited vs source) and dT_i the difference of normalized text
// embeddings (attribute vs t_src).
Tape::VarId directional_clip_loss_var(Tape& tape, std::span<const Tape::VarId> edited_images,
                                      std::span<const Tape::VarId> source_images,
                                      std::span<const Tape::VarId> text_embeddings,
                                      Tape::VarId t_src_embedding, const ImageEncoder& encoder);

// sum over unordered pairs {i, j} of cos(e_i, e_j); 0 for a single prompt.
Tape::VarId token_contrastive_loss_var(Tape& tape, std::span<const Tape::VarId> prompt_embeddings);

// 1 - cos(AF(edited), AF(source)) on frontal renders.
Tape::VarId identity_loss_var(Tape& tape, Tape::VarId edited_image, Tape::VarId source_image,
                              const IdentityEncoder& encoder);

// sum over unordered pairs of 1 - cos(AF(a), AF(b)) where a, b are renders
// of two different edited codes at two different poses.
Tape::VarId idvc_loss_var(Tape& tape,
                          std::span<const std::pair<Tape::VarId, Tape::VarId>> pair_images,
                          const IdentityEncoder& encoder);

// L2 norm of the stacked per-layer edit vectors.
Tape::VarId latent_reg_loss_var(Tape& tape, std::span<const Tape::VarId> delta_layers);

// L2 norm of the stacked pre-sigmoid alpha-branch activations.
Tape::VarId alpha_reg_loss_var(Tape& tape, std::span<const Tape::VarId> activations);

// ---------------------------------------------------------------------------
// Plain-value surfaces (evaluation and tests).
// ---------------------------------------------------------------------------

double directional_clip_loss(const std::vector<Tensor>& edited_images,
                             const std::vector<Tensor>& source_images,
                             const std::vector<Tensor>& text_embeddings,
                             const Tensor& t_src_embedding, const ImageEncoder& encoder);

double token_contrastive_loss(const std::vector<Tensor>& prompt_embeddings);

double identity_loss(const RenderedImage& edited_frontal, const RenderedImage& source_frontal,
                     const IdentityEncoder& encoder);

// Renders every edited code through the toy generator; one sampled pose
// pair per unordered code pair. K < 2 is defined as 0.
double view_consistency_identity_loss(
    const std::vector<LatentCode>& edited_codes,
    const std::vector<std::pair<CameraPose, CameraPose>>& pose_pairs, const ToyBackbone& backbone,
    const AlphaBranchParams& alpha, const IdentityEncoder& encoder,
    const ParallaxModel& parallax = {});

double latent_reg_loss(const LatentCode& w, const Tensor& dv, const MapperParams& mapper,
                       const LatentSplit& split);

double alpha_reg_loss(const std::vector<Tensor>& alpha_activations);

}  // namespace laekit
