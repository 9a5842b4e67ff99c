#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "laekit/latent.hpp"
#include "laekit/mpi.hpp"
#include "laekit/prompt.hpp"
#include "laekit/tape.hpp"

namespace laekit {

// ---------------------------------------------------------------------------
// Encoder contracts. All encoders are frozen; the tape paths exist so
// gradients can flow through them into upstream parameters.
// ---------------------------------------------------------------------------

class TextEncoder {
public:
    virtual ~TextEncoder() = default;
    virtual int embedding_dim() const = 0;
    virtual Tape::VarId encode(Tape& tape, std::span<const Tape::VarId> tokens) const = 0;
    Tensor encode_assembly(const PromptAssembly& assembly) const;
};

class ImageEncoder {
public:
    virtual ~ImageEncoder() = default;
    virtual int embedding_dim() const = 0;
    virtual Tape::VarId encode(Tape& tape, Tape::VarId image) const = 0;
    Tensor encode_image(const Tensor& image) const;
};

// Pooled projection, L2-normalized; mildly shift tolerant.
class IdentityEncoder {
public:
    virtual ~IdentityEncoder() = default;
    virtual int embedding_dim() const = 0;
    virtual Tape::VarId encode(Tape& tape, Tape::VarId image) const = 0;
    Tensor encode_image(const Tensor& image) const;
};

// ---------------------------------------------------------------------------
// Toy backbone: a deterministic, differentiable stand-in for a pretrained
// MPI generator. Everything except the alpha branch is frozen.
// ---------------------------------------------------------------------------

struct BackboneDims {
    int latent_dim = 0;
    int num_layers = 0;
    int height = 0;
    int planes = 0;
};

struct ToyConfig {
    int latent_dim = 32;
    int num_layers = 12;
    int height = 32;
    int planes = 4;
    int token_dim = 16;
    int embed_dim = 64;
    int identity_dim = 32;
    float near = 0.95f;
    float far = 1.12f;
    std::uint64_t seed = 7;
};

// The trainable part of the generator: one affine map per plane from the
// layer-mean latent to pre-sigmoid alpha activations.
struct AlphaBranchParams {
    std::vector<Tensor> weights;  // per plane: (H*H, D_w)
    std::vector<Tensor> biases;   // per plane: (H*H)
};

struct AlphaBranchVars {
    std::vector<Tape::VarId> weights;
    std::vector<Tape::VarId> biases;
};

struct ToyGenOutput {
    Tape::VarId color;                      // (H, H, 3)
    std::vector<Tape::VarId> alphas;        // per plane (H, H, 1)
    std::vector<Tape::VarId> activations;   // pre-sigmoid alpha activations
};

class ToyBackbone {
public:
    explicit ToyBackbone(const ToyConfig& cfg);

    const ToyConfig& config() const { return cfg_; }
    BackboneDims dims() const;
    const std::vector<float>& depths() const { return depths_; }
    LatentSplit split() const { return LatentSplit::thirds(cfg_.num_layers); }

    // f_map: w_l = tanh(A z + b_l) with frozen A and per-layer biases.
    LatentCode map_latent(const Tensor& z) const;

    // Initial (pretrained) alpha-branch weights; the trainer starts from a
    // copy of these, the originals stay frozen as the source generator.
    AlphaBranchParams initial_alpha_params() const;

    MultiplaneImage generate(const LatentCode& w, const AlphaBranchParams& alpha) const;
    ToyGenOutput generate_var(Tape& tape, std::span<const Tape::VarId> layer_vars,
                              const AlphaBranchVars& alpha) const;

    std::uint64_t frozen_digest(std::uint64_t seed) const;

private:
    ToyConfig cfg_;
    std::vector<float> depths_;
    Tensor map_weight_;               // (D_w, D_w)
    std::vector<Tensor> map_biases_;  // per layer (D_w)
    Tensor color_weight_;             // (3*H*H, D_w)
    Tensor color_bias_;               // (3*H*H)
    AlphaBranchParams initial_alpha_;
};

class ToyTextEncoder final : public TextEncoder {
public:
    ToyTextEncoder(int token_dim, int embed_dim, std::uint64_t seed);
    int embedding_dim() const override { return proj_.shape[0]; }
    Tape::VarId encode(Tape& tape, std::span<const Tape::VarId> tokens) const override;
    std::uint64_t frozen_digest(std::uint64_t seed) const { return fnv1a_digest(seed, proj_); }

private:
    Tensor proj_;  // (d_e, d_l)
};

class ToyImageEncoder final : public ImageEncoder {
public:
    ToyImageEncoder(int height, int embed_dim, std::uint64_t seed);
    int embedding_dim() const override { return proj_.shape[0]; }
    Tape::VarId encode(Tape& tape, Tape::VarId image) const override;
    std::uint64_t frozen_digest(std::uint64_t seed) const { return fnv1a_digest(seed, proj_); }

private:
    Tensor proj_;  // (d_e, 3*H*H)
};

class ToyIdentityEncoder final : public IdentityEncoder {
public:
    ToyIdentityEncoder(int height, int identity_dim, std::uint64_t seed);
    int embedding_dim() const override { return proj_.shape[0]; }
    Tape::VarId encode(Tape& tape, Tape::VarId image) const override;
    std::uint64_t frozen_digest(std::uint64_t seed) const { return fnv1a_digest(seed, proj_); }

private:
    int pool_ = 4;
    Tensor proj_;  // (d_id, 3*(H/pool)^2)
};

struct EncoderBundle {
    std::unique_ptr<ToyTextEncoder> text;
    std::unique_ptr<ToyImageEncoder> image;
    std::unique_ptr<ToyIdentityEncoder> identity;
};

// ---------------------------------------------------------------------------
// Bundle + loader. Real backbone kinds (gmpi, eg3d, stylenerf, cips3d) are
// adapter seams: the loader validates their checkpoint header and reports
// dimensions, but only the toy kind can generate in this build.
// ---------------------------------------------------------------------------

struct BackboneBundle {
    std::string kind;
    BackboneDims dims;
    int planes_train = 32;
    int planes_infer = 96;
    float near = 0.95f;
    float far = 1.12f;
    std::unique_ptr<ToyBackbone> toy;  // null for real kinds
    EncoderBundle encoders;

    bool can_generate() const { return toy != nullptr; }
    // Digest over every frozen array (mapping network, color map, encoder
    // projections). The alpha branch is excluded: it is trainable.
    std::uint64_t frozen_digest() const;
};

// kind "toy" ignores checkpoint_path; other kinds require a checkpoint
// whose header matches the requested kind.
BackboneBundle load_backbone(const std::string& kind,
                             const std::filesystem::path& checkpoint_path,
                             std::uint64_t seed = 7);
BackboneBundle load_toy_backbone(const ToyConfig& cfg);

// Adapter checkpoint handshake header (magic, format version, kind, dims).
void write_backbone_checkpoint_header(const std::filesystem::path& path, const std::string& kind,
                                      const BackboneDims& dims);

}  // namespace laekit
