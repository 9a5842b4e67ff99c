#include "laekit/trainer.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace laekit {

void TrainConfig::validate() const {
    if (steps < 1) throw std::invalid_argument("config: steps must be >= 1");
    if (!(lr >= 0.0f)) throw std::invalid_argument("config: learning rate must be >= 0");
    if (!(beta1 > 0.0f && beta1 < 1.0f && beta2 > 0.0f && beta2 < 1.0f))
        throw std::invalid_argument("config: Adam betas must lie in (0, 1)");
    if (batch_latents < 1) throw std::invalid_argument("config: batch_latents must be >= 1");
    if (tokens_per_attribute < 1) throw std::invalid_argument("config: m must be >= 1");
    if (attributes.empty()) throw std::invalid_argument("config: attribute list is empty");
    if (!(edit_scale > 0.0f)) throw std::invalid_argument("config: edit scale must be positive");
    weights.validate();
    yaw_range.validate();
    pitch_range.validate();
}

void to_json(nlohmann::json& j, const LossWeights& w) {
    j = {{"dclip", w.dclip}, {"sc", w.sc},         {"id", w.id},
         {"idvc", w.idvc},   {"latent", w.latent}, {"alpha", w.alpha}};
}

void from_json(const nlohmann::json& j, LossWeights& w) {
    w.dclip = j.value("dclip", w.dclip);
    w.sc = j.value("sc", w.sc);
    w.id = j.value("id", w.id);
    w.idvc = j.value("idvc", w.idvc);
    w.latent = j.value("latent", w.latent);
    w.alpha = j.value("alpha", w.alpha);
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
    nlohmann::json attrs = nlohmann::json::array();
    for (const AttributeSpec& a : c.attributes)
        attrs.push_back({{"name", a.name}, {"prompt_text", a.prompt_text}});
    j = {{"steps", c.steps},
         {"lr", c.lr},
         {"beta1", c.beta1},
         {"beta2", c.beta2},
         {"adam_eps", c.adam_eps},
         {"weights", c.weights},
         {"batch_latents", c.batch_latents},
         {"yaw_range", {c.yaw_range.min, c.yaw_range.max}},
         {"pitch_range", {c.pitch_range.min, c.pitch_range.max}},
         {"seed", c.seed},
         {"edit_scale", c.edit_scale},
         {"backbone", c.backbone},
         {"backbone_checkpoint", c.backbone_checkpoint},
         {"backbone_seed", c.backbone_seed},
         {"tokens_per_attribute", c.tokens_per_attribute},
         {"attributes", attrs},
         {"system_prompt", c.system_prompt},
         {"source_text", c.source_text},
         {"parallax_scale", c.parallax_scale},
         {"grad_clip", c.grad_clip},
         {"idvc_against_source", c.idvc_against_source}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
    c.steps = j.value("steps", c.steps);
    c.lr = j.value("lr", c.lr);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.adam_eps = j.value("adam_eps", c.adam_eps);
    if (j.contains("weights")) c.weights = j.at("weights").get<LossWeights>();
    c.batch_latents = j.value("batch_latents", c.batch_latents);
    if (j.contains("yaw_range")) {
        c.yaw_range.min = j.at("yaw_range").at(0).get<float>();
        c.yaw_range.max = j.at("yaw_range").at(1).get<float>();
    }
    if (j.contains("pitch_range")) {
        c.pitch_range.min = j.at("pitch_range").at(0).get<float>();
        c.pitch_range.max = j.at("pitch_range").at(1).get<float>();
    }
    c.seed = j.value("seed", c.seed);
    c.edit_scale = j.value("edit_scale", c.edit_scale);
    c.backbone = j.value("backbone", c.backbone);
    c.backbone_checkpoint = j.value("backbone_checkpoint", c.backbone_checkpoint);
    c.backbone_seed = j.value("backbone_seed", c.backbone_seed);
    c.tokens_per_attribute = j.value("tokens_per_attribute", c.tokens_per_attribute);
    if (j.contains("attributes")) {
        c.attributes.clear();
        for (const auto& a : j.at("attributes"))
            c.attributes.push_back(
                {a.at("name").get<std::string>(), a.at("prompt_text").get<std::string>()});
    }
    c.system_prompt = j.value("system_prompt", c.system_prompt);
    c.source_text = j.value("source_text", c.source_text);
    c.parallax_scale = j.value("parallax_scale", c.parallax_scale);
    c.grad_clip = j.value("grad_clip", c.grad_clip);
    c.idvc_against_source = j.value("idvc_against_source", c.idvc_against_source);
}

std::vector<std::pair<std::string, Tensor*>> TrainState::trainable_arrays() {
    std::vector<std::pair<std::string, Tensor*>> out;
    out.emplace_back("tokens", &tokens.tokens);
    for (int g = 0; g < 3; ++g) {
        out.emplace_back("mapper.w" + std::to_string(g), &mapper.weights[static_cast<size_t>(g)]);
        out.emplace_back("mapper.b" + std::to_string(g), &mapper.biases[static_cast<size_t>(g)]);
    }
    for (size_t p = 0; p < alpha.weights.size(); ++p) {
        out.emplace_back("alpha.w" + std::to_string(p), &alpha.weights[p]);
        out.emplace_back("alpha.b" + std::to_string(p), &alpha.biases[p]);
    }
    return out;
}

static Tensor encode_plain_text(const TextEncoder& enc, const std::string& text, int token_dim) {
    PromptAssembly a;
    a.sequence.push_back(embed_word("<sos>", token_dim));
    a.trainable.push_back(false);
    for (Tensor& t : [&] {
             auto v = embed_text(text, token_dim);
             return v;
         }()) {
        a.sequence.push_back(std::move(t));
        a.trainable.push_back(false);
    }
    a.sequence.push_back(embed_word("<eos>", token_dim));
    a.trainable.push_back(false);
    return enc.encode_assembly(a);
}

TrainState init_train_state(const TrainConfig& config) {
    config.validate();
    TrainState s;
    s.config = config;
    s.bundle = load_backbone(config.backbone, config.backbone_checkpoint, config.backbone_seed);
    if (!s.bundle.can_generate())
        throw std::runtime_error("backbone kind '" + config.backbone +
                                 "' has no in-process generator; training requires the toy kind");
    const ToyConfig& toy = s.bundle.toy->config();
    s.system = SystemPrompt::from_text(config.system_prompt, toy.token_dim);
    std::vector<std::string> names;
    for (const AttributeSpec& a : config.attributes) {
        names.push_back(a.name);
        s.attribute_embeddings.push_back(embed_text(a.prompt_text, toy.token_dim));
    }
    s.source_embedding = encode_plain_text(*s.bundle.encoders.text, config.source_text,
                                           toy.token_dim);

    std::mt19937_64 init_rng(config.seed);
    s.tokens = init_style_tokens(names, config.tokens_per_attribute, toy.token_dim, init_rng);
    s.mapper = init_mapper(toy.latent_dim, toy.embed_dim, init_rng, config.edit_scale);
    s.alpha = s.bundle.toy->initial_alpha_params();
    s.alpha_source = s.alpha;

    for (auto& [name, t] : s.trainable_arrays())
        s.opt.push_back({Tensor::zeros(t->shape), Tensor::zeros(t->shape)});
    s.rng.seed(config.seed ^ 0x5cfee0f5u);
    return s;
}

LatentCode sample_w(TrainState& state) {
    int dw = state.bundle.toy->config().latent_dim;
    Tensor z = Tensor::gaussian({dw}, 1.0f, state.rng);
    return state.bundle.toy->map_latent(z);
}

Tensor prompt_embedding(const TrainState& state, int attribute_index) {
    PromptAssembly a =
        assemble_prompt(state.tokens, attribute_index, state.system,
                        state.attribute_embeddings[static_cast<size_t>(attribute_index)]);
    return state.bundle.encoders.text->encode_assembly(a);
}

EditDirection attribute_edit(const TrainState& state, const LatentCode& w, int attribute_index) {
    Tensor dv = prompt_embedding(state, attribute_index);
    return map_edit(w, dv, state.mapper, state.bundle.toy->split());
}

nlohmann::json loss_json(std::uint64_t step, const LossBreakdown& b) {
    return {{"step", step},     {"dclip", b.dclip},   {"sc", b.sc},       {"id", b.id},
            {"idvc", b.idvc},   {"latent", b.latent}, {"alpha", b.alpha}, {"total", b.total}};
}

namespace {

struct StepTape {
    Tape tape;
    Tape::VarId tokens_leaf;
    MapperVars mapper_vars;
    AlphaBranchVars alpha_vars;
    std::vector<Tape::VarId> leaf_order;  // matches trainable_arrays()
};

void check_term(double v, const char* name) {
    if (!std::isfinite(v))
        throw std::runtime_error(std::string("non-finite loss term: ") + name);
}

struct StepResult {
    LossBreakdown breakdown;
    std::vector<Tensor> grads;  // trainable_arrays() order
};

StepResult forward_backward(TrainState& state) {
    const TrainConfig& cfg = state.config;
    const ToyBackbone& bk = *state.bundle.toy;
    const ToyConfig& toy = bk.config();
    const LatentSplit split = bk.split();
    const ParallaxModel parallax{cfg.parallax_scale};
    const CameraPose frontal{0.0f, 0.0f};
    int n_attr = static_cast<int>(cfg.attributes.size());
    int batch = cfg.batch_latents;

    StepTape st;
    Tape& tape = st.tape;
    st.tokens_leaf = tape.leaf(state.tokens.tokens, true);
    st.mapper_vars = mapper_leaves(tape, state.mapper);
    for (size_t p = 0; p < state.alpha.weights.size(); ++p) {
        st.alpha_vars.weights.push_back(tape.leaf(state.alpha.weights[p], true));
        st.alpha_vars.biases.push_back(tape.leaf(state.alpha.biases[p], true));
    }
    st.leaf_order.push_back(st.tokens_leaf);
    for (int g = 0; g < 3; ++g) {
        st.leaf_order.push_back(st.mapper_vars.weights[static_cast<size_t>(g)]);
        st.leaf_order.push_back(st.mapper_vars.biases[static_cast<size_t>(g)]);
    }
    for (size_t p = 0; p < st.alpha_vars.weights.size(); ++p) {
        st.leaf_order.push_back(st.alpha_vars.weights[p]);
        st.leaf_order.push_back(st.alpha_vars.biases[p]);
    }
    AlphaBranchVars source_alpha_vars;
    for (size_t p = 0; p < state.alpha_source.weights.size(); ++p) {
        source_alpha_vars.weights.push_back(tape.leaf(state.alpha_source.weights[p]));
        source_alpha_vars.biases.push_back(tape.leaf(state.alpha_source.biases[p]));
    }

    // prompt embeddings (shared across the latent batch)
    int d = toy.token_dim;
    int m = state.tokens.tokens_per_attribute();
    std::vector<Tape::VarId> dv(static_cast<size_t>(n_attr));
    for (int i = 0; i < n_attr; ++i) {
        std::vector<Tape::VarId> seq;
        seq.push_back(tape.leaf(embed_word("<sos>", d)));
        for (int j = 0; j < m; ++j)
            seq.push_back(tape.slice(st.tokens_leaf, (i * m + j) * d, d));
        for (const Tensor& t : state.system.embedded) seq.push_back(tape.leaf(t));
        for (const Tensor& t : state.attribute_embeddings[static_cast<size_t>(i)])
            seq.push_back(tape.leaf(t));
        seq.push_back(tape.leaf(embed_word("<eos>", d)));
        dv[static_cast<size_t>(i)] = state.bundle.encoders.text->encode(tape, seq);
    }

    Tape::VarId sc_var = token_contrastive_loss_var(tape, dv);
    Tape::VarId tsrc = tape.leaf(state.source_embedding);

    std::vector<Tape::VarId> dclip_terms, id_terms, idvc_terms, latent_terms, alpha_terms;
    for (int b = 0; b < batch; ++b) {
        LatentCode w = sample_w(state);
        std::vector<Tape::VarId> w_leaves;
        for (const Tensor& l : w.layers) w_leaves.push_back(tape.leaf(l));

        ToyGenOutput source_gen = bk.generate_var(tape, w_leaves, source_alpha_vars);
        auto render_source = [&](const CameraPose& p) {
            return composite_mpi_var(tape, source_gen.color, source_gen.alphas, bk.depths(), p,
                                     parallax);
        };
        Tape::VarId source_frontal = render_source(frontal);

        std::vector<ToyGenOutput> edited_gen;
        std::vector<Tape::VarId> edited_p1, source_p2;
        std::vector<Tape::VarId> attr_latent, attr_alpha, attr_id;
        for (int i = 0; i < n_attr; ++i) {
            std::vector<Tape::VarId> deltas = map_edit_var(
                tape, w, dv[static_cast<size_t>(i)], st.mapper_vars, split, cfg.edit_scale);
            std::vector<Tape::VarId> edited_layers;
            for (size_t l = 0; l < deltas.size(); ++l)
                edited_layers.push_back(tape.add(w_leaves[l], deltas[l]));
            ToyGenOutput gen = bk.generate_var(tape, edited_layers, st.alpha_vars);

            CameraPose p1 = sample_pose(state.rng, cfg.yaw_range, cfg.pitch_range);
            CameraPose p2 = sample_pose(state.rng, cfg.yaw_range, cfg.pitch_range);
            edited_p1.push_back(
                composite_mpi_var(tape, gen.color, gen.alphas, bk.depths(), p1, parallax));
            source_p2.push_back(render_source(p2));

            Tape::VarId edited_frontal =
                composite_mpi_var(tape, gen.color, gen.alphas, bk.depths(), frontal, parallax);
            attr_id.push_back(identity_loss_var(tape, edited_frontal, source_frontal,
                                                *state.bundle.encoders.identity));
            attr_latent.push_back(latent_reg_loss_var(tape, deltas));
            attr_alpha.push_back(alpha_reg_loss_var(tape, gen.activations));
            edited_gen.push_back(std::move(gen));
        }

        dclip_terms.push_back(directional_clip_loss_var(tape, edited_p1, source_p2, dv, tsrc,
                                                        *state.bundle.encoders.image));
        id_terms.push_back(tape.sum(attr_id));
        latent_terms.push_back(tape.sum(attr_latent));
        alpha_terms.push_back(tape.sum(attr_alpha));

        std::vector<std::pair<Tape::VarId, Tape::VarId>> idvc_pairs;
        if (cfg.idvc_against_source) {
            for (int i = 0; i < n_attr; ++i) {
                CameraPose q1 = sample_pose(state.rng, cfg.yaw_range, cfg.pitch_range);
                CameraPose q2 = sample_pose(state.rng, cfg.yaw_range, cfg.pitch_range);
                const ToyGenOutput& gi = edited_gen[static_cast<size_t>(i)];
                idvc_pairs.emplace_back(
                    composite_mpi_var(tape, gi.color, gi.alphas, bk.depths(), q1, parallax),
                    render_source(q2));
            }
        } else {
            for (int i = 0; i < n_attr; ++i)
                for (int j = i + 1; j < n_attr; ++j) {
                    CameraPose q1 = sample_pose(state.rng, cfg.yaw_range, cfg.pitch_range);
                    CameraPose q2 = sample_pose(state.rng, cfg.yaw_range, cfg.pitch_range);
                    const ToyGenOutput& gi = edited_gen[static_cast<size_t>(i)];
                    const ToyGenOutput& gj = edited_gen[static_cast<size_t>(j)];
                    idvc_pairs.emplace_back(
                        composite_mpi_var(tape, gi.color, gi.alphas, bk.depths(), q1, parallax),
                        composite_mpi_var(tape, gj.color, gj.alphas, bk.depths(), q2, parallax));
                }
        }
        idvc_terms.push_back(idvc_loss_var(tape, idvc_pairs, *state.bundle.encoders.identity));
    }

    float inv_b = 1.0f / static_cast<float>(batch);
    Tape::VarId dclip_var = tape.affine(tape.sum(dclip_terms), inv_b, 0.0f);
    Tape::VarId id_var = tape.affine(tape.sum(id_terms), inv_b, 0.0f);
    Tape::VarId idvc_var = tape.affine(tape.sum(idvc_terms), inv_b, 0.0f);
    Tape::VarId latent_var = tape.affine(tape.sum(latent_terms), inv_b, 0.0f);
    Tape::VarId alpha_var = tape.affine(tape.sum(alpha_terms), inv_b, 0.0f);

    LossBreakdown terms;
    terms.dclip = tape.scalar(dclip_var);
    terms.sc = tape.scalar(sc_var);
    terms.id = tape.scalar(id_var);
    terms.idvc = tape.scalar(idvc_var);
    terms.latent = tape.scalar(latent_var);
    terms.alpha = tape.scalar(alpha_var);
    check_term(terms.dclip, "dclip");
    check_term(terms.sc, "sc");
    check_term(terms.id, "id");
    check_term(terms.idvc, "idvc");
    check_term(terms.latent, "latent");
    check_term(terms.alpha, "alpha");
    LossBreakdown breakdown = total_loss(terms, cfg.weights);
    check_term(breakdown.total, "total");

    const LossWeights& lw = cfg.weights;
    Tape::VarId total_var = tape.affine(dclip_var, lw.dclip, 0.0f);
    total_var = tape.add(total_var, tape.affine(sc_var, lw.sc, 0.0f));
    total_var = tape.add(total_var, tape.affine(id_var, lw.id, 0.0f));
    total_var = tape.add(total_var, tape.affine(idvc_var, lw.idvc, 0.0f));
    total_var = tape.add(total_var, tape.affine(latent_var, lw.latent, 0.0f));
    total_var = tape.add(total_var, tape.affine(alpha_var, lw.alpha, 0.0f));
    tape.backward(total_var);

    StepResult result;
    result.breakdown = breakdown;
    for (Tape::VarId leaf : st.leaf_order) result.grads.push_back(tape.grad(leaf));
    return result;
}

}  // namespace

LossBreakdown train_step(TrainState& state) {
    const TrainConfig& cfg = state.config;
    StepResult step = forward_backward(state);

    // global-norm clipping, off by default
    float clip_scale = 1.0f;
    if (cfg.grad_clip > 0.0f) {
        double norm_sq = 0.0;
        for (const Tensor& g : step.grads)
            for (float gi : g.data) norm_sq += static_cast<double>(gi) * gi;
        double norm = std::sqrt(norm_sq);
        if (norm > cfg.grad_clip)
            clip_scale = static_cast<float>(cfg.grad_clip / norm);
    }

    state.step += 1;
    auto params = state.trainable_arrays();
    float t = static_cast<float>(state.step);
    float bc1 = 1.0f - std::pow(cfg.beta1, t);
    float bc2 = 1.0f - std::pow(cfg.beta2, t);
    for (size_t a = 0; a < params.size(); ++a) {
        Tensor& p = *params[a].second;
        AdamSlot& slot = state.opt[a];
        const Tensor& g = step.grads[a];
        for (int i = 0; i < p.size(); ++i) {
            float gi = g[i] * clip_scale;
            slot.m[i] = cfg.beta1 * slot.m[i] + (1.0f - cfg.beta1) * gi;
            slot.v[i] = cfg.beta2 * slot.v[i] + (1.0f - cfg.beta2) * gi * gi;
            float mhat = slot.m[i] / bc1;
            float vhat = slot.v[i] / bc2;
            p[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
        }
    }
    return step.breakdown;
}

LossGrads eval_loss_grads(TrainState& state) {
    std::mt19937_64 saved = state.rng;
    StepResult step = forward_backward(state);
    state.rng = saved;
    LossGrads out;
    out.breakdown = step.breakdown;
    auto params = state.trainable_arrays();
    for (size_t a = 0; a < params.size(); ++a)
        out.grads.emplace_back(params[a].first, std::move(step.grads[a]));
    return out;
}

TrainState train_attribute_set(const TrainConfig& config, std::ostream* log,
                               const std::optional<std::filesystem::path>& checkpoint_dir) {
    TrainState state = init_train_state(config);
    for (int s = 0; s < config.steps; ++s) {
        LossBreakdown b = train_step(state);
        if (log) (*log) << loss_json(state.step, b).dump() << "\n";
    }
    if (checkpoint_dir) {
        CheckpointData data = state_to_checkpoint(state);
        save_checkpoint(data, *checkpoint_dir);
    }
    return state;
}

CheckpointData state_to_checkpoint(TrainState& state) {
    CheckpointData data;
    data.step = state.step;
    data.config = state.config;
    for (auto& [name, t] : state.trainable_arrays()) data.arrays.emplace_back(name, *t);
    auto params = state.trainable_arrays();
    for (size_t a = 0; a < params.size(); ++a) {
        data.arrays.emplace_back("adam.m." + params[a].first, state.opt[a].m);
        data.arrays.emplace_back("adam.v." + params[a].first, state.opt[a].v);
    }
    return data;
}

TrainState state_from_checkpoint(const CheckpointData& data) {
    TrainConfig config = data.config.get<TrainConfig>();
    TrainState state = init_train_state(config);
    state.step = data.step;
    auto params = state.trainable_arrays();
    for (size_t a = 0; a < params.size(); ++a) {
        const Tensor& stored = data.array(params[a].first);
        if (stored.shape != params[a].second->shape)
            throw std::runtime_error("checkpoint array shape mismatch: " + params[a].first);
        *params[a].second = stored;
        state.opt[a].m = data.array("adam.m." + params[a].first);
        state.opt[a].v = data.array("adam.v." + params[a].first);
    }
    return state;
}

TrainState load_train_state(const std::filesystem::path& checkpoint_dir) {
    return state_from_checkpoint(load_checkpoint(checkpoint_dir));
}

}  // namespace laekit
