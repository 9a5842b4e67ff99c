#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "laekit/backbones.hpp"
#include "laekit/checkpoint.hpp"
#include "laekit/losses.hpp"
#include "laekit/mapper.hpp"
#include "laekit/prompt.hpp"

namespace laekit {

struct AttributeSpec {
    std::string name;
    std::string prompt_text;
};

struct TrainConfig {
    int steps = 200;
    float lr = 0.001f;
    float beta1 = 0.9f;
    float beta2 = 0.95f;
    float adam_eps = 1e-8f;
    LossWeights weights;
    int batch_latents = 4;
    AngleRange yaw_range{-30.0f, 30.0f};
    AngleRange pitch_range{-20.0f, 20.0f};
    std::uint64_t seed = 0;
    float edit_scale = 0.1f;
    std::string backbone = "toy";
    std::string backbone_checkpoint;  // required for non-toy kinds
    std::uint64_t backbone_seed = 7;
    int tokens_per_attribute = 1;
    std::vector<AttributeSpec> attributes;
    std::string system_prompt = kDefaultSystemPrompt;
    std::string source_text = "face";  // t_src for the directional term
    float parallax_scale = 4.0f;
    float grad_clip = 0.0f;  // 0 disables clipping
    // When set, the view-consistency pairs compare an edited render against
    // the unedited source instead of two edited codes.
    bool idvc_against_source = false;

    void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

// Adam first/second moments, one pair per trainable array.
struct AdamSlot {
    Tensor m;
    Tensor v;
};

struct TrainState {
    TrainConfig config;
    BackboneBundle bundle;
    SystemPrompt system;
    std::vector<std::vector<Tensor>> attribute_embeddings;  // per attribute
    Tensor source_embedding;                                // f_T(t_src)

    StyleTokenTable tokens;
    MapperParams mapper;
    AlphaBranchParams alpha;         // trainable
    AlphaBranchParams alpha_source;  // frozen snapshot of the pretrained branch

    std::vector<AdamSlot> opt;  // aligned with trainable_arrays() order
    std::uint64_t step = 0;
    std::mt19937_64 rng;

    // tokens, mapper weights/biases, alpha weights/biases, in fixed order.
    std::vector<std::pair<std::string, Tensor*>> trainable_arrays();
};

TrainState init_train_state(const TrainConfig& config);

// One Adam update against the total loss. Aborts with a diagnostic naming
// the offending term on a non-finite loss.
LossBreakdown train_step(TrainState& state);

// Loss and gradients for the current parameters without an update. The
// sampling rng is restored afterwards, so repeated calls see identical
// draws; used for gradient checking.
struct LossGrads {
    LossBreakdown breakdown;
    std::vector<std::pair<std::string, Tensor>> grads;  // trainable_arrays() order
};
LossGrads eval_loss_grads(TrainState& state);

// Runs config.steps steps, emitting one JSON line per step to `log` when
// given, and writes the final checkpoint to checkpoint_dir when given.
TrainState train_attribute_set(const TrainConfig& config, std::ostream* log = nullptr,
                               const std::optional<std::filesystem::path>& checkpoint_dir = {});

CheckpointData state_to_checkpoint(TrainState& state);
TrainState state_from_checkpoint(const CheckpointData& data);
TrainState load_train_state(const std::filesystem::path& checkpoint_dir);

// Forward-path helpers shared by the trainer, evaluation, and the CLI.
Tensor prompt_embedding(const TrainState& state, int attribute_index);
EditDirection attribute_edit(const TrainState& state, const LatentCode& w, int attribute_index);
LatentCode sample_w(TrainState& state);  // z ~ N(0, 1) through the mapping network
nlohmann::json loss_json(std::uint64_t step, const LossBreakdown& b);

}  // namespace laekit
