#include "laekit/backbones.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace laekit {

// ---------------------------------------------------------------------------
// Encoder plain-path helpers
// ---------------------------------------------------------------------------

Tensor TextEncoder::encode_assembly(const PromptAssembly& assembly) const {
    if (assembly.sequence.empty()) throw std::invalid_argument("empty prompt sequence");
    Tape tape;
    std::vector<Tape::VarId> tokens;
    for (const Tensor& t : assembly.sequence) tokens.push_back(tape.leaf(t));
    Tape::VarId out = encode(tape, tokens);
    Tensor v = tape.value(out);
    if (!v.all_finite()) throw std::runtime_error("text encoder produced non-finite embedding");
    return v;
}

Tensor ImageEncoder::encode_image(const Tensor& image) const {
    Tape tape;
    Tape::VarId out = encode(tape, tape.leaf(image));
    return tape.value(out);
}

Tensor IdentityEncoder::encode_image(const Tensor& image) const {
    Tape tape;
    Tape::VarId out = encode(tape, tape.leaf(image));
    return tape.value(out);
}

// ---------------------------------------------------------------------------
// ToyBackbone
// ---------------------------------------------------------------------------

ToyBackbone::ToyBackbone(const ToyConfig& cfg) : cfg_(cfg) {
    if (cfg.latent_dim < 1 || cfg.num_layers < 3 || cfg.height < 4 || cfg.planes < 1)
        throw std::invalid_argument("toy backbone config out of range");
    depths_ = plane_depths(cfg.planes, cfg.near, cfg.far);
    std::mt19937_64 rng(cfg.seed);
    int dw = cfg.latent_dim;
    int hh = cfg.height * cfg.height;
    float std_map = 1.0f / std::sqrt(static_cast<float>(dw));
    map_weight_ = Tensor::gaussian({dw, dw}, std_map, rng);
    for (int l = 0; l < cfg.num_layers; ++l)
        map_biases_.push_back(Tensor::gaussian({dw}, 0.3f, rng));
    color_weight_ = Tensor::gaussian({3 * hh, dw}, std_map, rng);
    color_bias_ = Tensor::gaussian({3 * hh}, 0.5f, rng);
    // Kept small so the pre-sigmoid activations start near the linear
    // regime; the alpha branch is the trainable part of the generator.
    for (int p = 0; p < cfg.planes; ++p) {
        initial_alpha_.weights.push_back(Tensor::gaussian({hh, dw}, 0.4f * std_map, rng));
        initial_alpha_.biases.push_back(Tensor::gaussian({hh}, 0.1f, rng));
    }
}

BackboneDims ToyBackbone::dims() const {
    return {cfg_.latent_dim, cfg_.num_layers, cfg_.height, cfg_.planes};
}

LatentCode ToyBackbone::map_latent(const Tensor& z) const {
    if (z.size() != cfg_.latent_dim) throw std::invalid_argument("map_latent: z dim mismatch");
    LatentCode w;
    int dw = cfg_.latent_dim;
    for (int l = 0; l < cfg_.num_layers; ++l) {
        Tensor layer = Tensor::zeros({dw});
        const Tensor& b = map_biases_[static_cast<size_t>(l)];
        for (int r = 0; r < dw; ++r) {
            float acc = b[r];
            const float* row = map_weight_.data.data() + static_cast<size_t>(r) * dw;
            for (int c = 0; c < dw; ++c) acc += row[c] * z[c];
            layer[r] = std::tanh(acc);
        }
        w.layers.push_back(std::move(layer));
    }
    return w;
}

AlphaBranchParams ToyBackbone::initial_alpha_params() const { return initial_alpha_; }

ToyGenOutput ToyBackbone::generate_var(Tape& tape, std::span<const Tape::VarId> layer_vars,
                                       const AlphaBranchVars& alpha) const {
    if (static_cast<int>(layer_vars.size()) != cfg_.num_layers)
        throw std::invalid_argument("generate: layer count mismatch");
    if (alpha.weights.size() != static_cast<size_t>(cfg_.planes))
        throw std::invalid_argument("generate: alpha plane count mismatch");
    int h = cfg_.height;
    Tape::VarId mean_w = tape.mean_of(layer_vars);
    Tape::VarId cw = tape.leaf(color_weight_);
    Tape::VarId cb = tape.leaf(color_bias_);
    Tape::VarId color_flat = tape.sigmoid(tape.matvec(cw, mean_w, cb));
    ToyGenOutput out;
    out.color = tape.reshape(color_flat, {h, h, 3});
    for (int p = 0; p < cfg_.planes; ++p) {
        Tape::VarId act = tape.matvec(alpha.weights[static_cast<size_t>(p)], mean_w,
                                      alpha.biases[static_cast<size_t>(p)]);
        out.activations.push_back(act);
        out.alphas.push_back(tape.reshape(tape.sigmoid(act), {h, h, 1}));
    }
    return out;
}

MultiplaneImage ToyBackbone::generate(const LatentCode& w, const AlphaBranchParams& alpha) const {
    Tape tape;
    std::vector<Tape::VarId> layers;
    for (const Tensor& l : w.layers) layers.push_back(tape.leaf(l));
    AlphaBranchVars avars;
    for (size_t p = 0; p < alpha.weights.size(); ++p) {
        avars.weights.push_back(tape.leaf(alpha.weights[p]));
        avars.biases.push_back(tape.leaf(alpha.biases[p]));
    }
    ToyGenOutput gen = generate_var(tape, layers, avars);
    MultiplaneImage mpi;
    mpi.color = tape.value(gen.color);
    for (Tape::VarId a : gen.alphas) mpi.alphas.push_back(tape.value(a));
    mpi.depths = depths_;
    return mpi;
}

std::uint64_t ToyBackbone::frozen_digest(std::uint64_t seed) const {
    std::uint64_t h = fnv1a_digest(seed, map_weight_);
    for (const Tensor& b : map_biases_) h = fnv1a_digest(h, b);
    h = fnv1a_digest(h, color_weight_);
    h = fnv1a_digest(h, color_bias_);
    return h;
}

// ---------------------------------------------------------------------------
// Toy encoders
// ---------------------------------------------------------------------------

ToyTextEncoder::ToyTextEncoder(int token_dim, int embed_dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x7465787400000000ull);  // "text" namespace
    proj_ = Tensor::gaussian({embed_dim, token_dim},
                             1.0f / std::sqrt(static_cast<float>(token_dim)), rng);
}

Tape::VarId ToyTextEncoder::encode(Tape& tape, std::span<const Tape::VarId> tokens) const {
    if (tokens.empty()) throw std::invalid_argument("text encoder: empty token sequence");
    Tape::VarId pooled = tape.mean_of(tokens);
    Tape::VarId p = tape.leaf(proj_);
    return tape.tanh(tape.matvec(p, pooled));
}

ToyImageEncoder::ToyImageEncoder(int height, int embed_dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x696d616765000000ull);  // "image" namespace
    int n = 3 * height * height;
    proj_ = Tensor::gaussian({embed_dim, n}, 1.0f / std::sqrt(static_cast<float>(n) / 12.0f), rng);
}

Tape::VarId ToyImageEncoder::encode(Tape& tape, Tape::VarId image) const {
    Tape::VarId p = tape.leaf(proj_);
    return tape.tanh(tape.matvec(p, tape.reshape(image, {tape.value(image).size()})));
}

ToyIdentityEncoder::ToyIdentityEncoder(int height, int identity_dim, std::uint64_t seed) {
    if (height % pool_ != 0) throw std::invalid_argument("identity encoder: height not divisible");
    std::mt19937_64 rng(seed ^ 0x6964656e74000000ull);  // "ident" namespace
    int n = 3 * (height / pool_) * (height / pool_);
    proj_ = Tensor::gaussian({identity_dim, n}, 1.0f / std::sqrt(static_cast<float>(n)), rng);
}

Tape::VarId ToyIdentityEncoder::encode(Tape& tape, Tape::VarId image) const {
    Tape::VarId pooled = tape.avgpool(image, pool_);
    Tape::VarId p = tape.leaf(proj_);
    Tape::VarId raw = tape.matvec(p, tape.reshape(pooled, {tape.value(pooled).size()}));
    Tape::VarId n = tape.l2norm(raw);
    if (tape.scalar(n) == 0.0f) throw std::domain_error("identity encoder: zero-norm embedding");
    return tape.div_by_scalar(raw, n);
}

// ---------------------------------------------------------------------------
// Bundle + loader
// ---------------------------------------------------------------------------

std::uint64_t BackboneBundle::frozen_digest() const {
    std::uint64_t h = 1469598103934665603ull;
    if (toy) h = toy->frozen_digest(h);
    if (encoders.text) h = encoders.text->frozen_digest(h);
    if (encoders.image) h = encoders.image->frozen_digest(h);
    if (encoders.identity) h = encoders.identity->frozen_digest(h);
    return h;
}

BackboneBundle load_toy_backbone(const ToyConfig& cfg) {
    BackboneBundle b;
    b.kind = "toy";
    b.toy = std::make_unique<ToyBackbone>(cfg);
    b.dims = b.toy->dims();
    b.planes_train = cfg.planes;
    b.planes_infer = cfg.planes;
    b.near = cfg.near;
    b.far = cfg.far;
    b.encoders.text = std::make_unique<ToyTextEncoder>(cfg.token_dim, cfg.embed_dim, cfg.seed);
    b.encoders.image = std::make_unique<ToyImageEncoder>(cfg.height, cfg.embed_dim, cfg.seed);
    b.encoders.identity =
        std::make_unique<ToyIdentityEncoder>(cfg.height, cfg.identity_dim, cfg.seed);
    return b;
}

static constexpr char kBackboneMagic[8] = {'L', 'A', 'E', 'K', '3', 'D', 'B', 'K'};
static constexpr std::uint32_t kBackboneVersion = 1;

void write_backbone_checkpoint_header(const std::filesystem::path& path, const std::string& kind,
                                      const BackboneDims& dims) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write backbone checkpoint " + path.string());
    f.write(kBackboneMagic, 8);
    auto put_u32 = [&](std::uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };
    put_u32(kBackboneVersion);
    put_u32(static_cast<std::uint32_t>(kind.size()));
    f.write(kind.data(), static_cast<std::streamsize>(kind.size()));
    for (int d : {dims.latent_dim, dims.num_layers, dims.height, dims.planes})
        put_u32(static_cast<std::uint32_t>(d));
}

BackboneBundle load_backbone(const std::string& kind,
                             const std::filesystem::path& checkpoint_path, std::uint64_t seed) {
    if (kind == "toy") {
        ToyConfig cfg;
        cfg.seed = seed;
        return load_toy_backbone(cfg);
    }
    if (kind != "gmpi" && kind != "eg3d" && kind != "stylenerf" && kind != "cips3d")
        throw std::invalid_argument("unknown backbone kind: " + kind);
    std::ifstream f(checkpoint_path, std::ios::binary);
    if (!f) throw std::runtime_error("missing backbone checkpoint: " + checkpoint_path.string());
    char magic[8];
    if (!f.read(magic, 8) || std::memcmp(magic, kBackboneMagic, 8) != 0)
        throw std::runtime_error("corrupt backbone checkpoint: bad magic");
    auto get_u32 = [&]() {
        std::uint32_t v;
        if (!f.read(reinterpret_cast<char*>(&v), 4))
            throw std::runtime_error("corrupt backbone checkpoint: truncated");
        return v;
    };
    std::uint32_t version = get_u32();
    if (version != kBackboneVersion)
        throw std::runtime_error("unsupported backbone checkpoint version");
    std::uint32_t klen = get_u32();
    if (klen > 64) throw std::runtime_error("corrupt backbone checkpoint: kind length");
    std::string file_kind(klen, '\0');
    if (!f.read(file_kind.data(), klen))
        throw std::runtime_error("corrupt backbone checkpoint: truncated");
    if (file_kind != kind)
        throw std::runtime_error("backbone kind mismatch: requested " + kind + ", checkpoint holds " +
                                 file_kind);
    BackboneBundle b;
    b.kind = kind;
    b.dims.latent_dim = static_cast<int>(get_u32());
    b.dims.num_layers = static_cast<int>(get_u32());
    b.dims.height = static_cast<int>(get_u32());
    b.dims.planes = static_cast<int>(get_u32());
    // Real generators and CLIP/ArcFace encoders live behind external
    // adapters; this build reports their dimensions only.
    return b;
}

}  // namespace laekit
