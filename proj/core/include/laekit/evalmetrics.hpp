#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "laekit/trainer.hpp"

namespace laekit {

// ---------------------------------------------------------------------------
// Attribute altering / dependency
// ---------------------------------------------------------------------------

// Per-image attribute logits plus per-attribute logit spreads over a
// reference set. sigma entries must be positive.
class AttributeClassifier {
public:
    virtual ~AttributeClassifier() = default;
    virtual int num_attributes() const = 0;
    virtual Tensor logits(const Tensor& image) const = 0;
    virtual const std::vector<float>& sigma() const = 0;
};

// Fixed random linear probes, sigma estimated from a reference image set.
class ToyAttributeClassifier final : public AttributeClassifier {
public:
    ToyAttributeClassifier(int num_attributes, int height, std::uint64_t seed,
                           const std::vector<Tensor>& reference_images);
    int num_attributes() const override { return probes_.shape[0]; }
    Tensor logits(const Tensor& image) const override;
    const std::vector<float>& sigma() const override { return sigma_; }

private:
    Tensor probes_;  // (n_attr, 3*H*H)
    std::vector<float> sigma_;
};

// mean over pairs of (l_t(edited) - l_t(original)) / sigma_t.
double attribute_altering(const std::vector<Tensor>& edited, const std::vector<Tensor>& originals,
                          int target_attr, const AttributeClassifier& clf);

// mean over pairs and over k != t of |l_k(edited) - l_k(original)| / sigma_k.
double attribute_dependency(const std::vector<Tensor>& edited,
                            const std::vector<Tensor>& originals, int target_attr,
                            const AttributeClassifier& clf);

// ---------------------------------------------------------------------------
// Identity sweep
// ---------------------------------------------------------------------------

struct IdentitySweepResult {
    std::vector<float> bucket_edges;   // e.g. {0, 10, 30}: buckets [0,10), [10,30]
    std::vector<double> bucket_means;  // mean cosine per bucket
    std::vector<int> bucket_counts;
    std::vector<double> per_sample;  // cosine per sample, in draw order
};

// Mean cosine between identity embeddings of edited and original renders
// at the same sampled pose, bucketed by the larger of |yaw|, |pitch|.
// Poses are drawn stratified across buckets; attributes are cycled.
IdentitySweepResult identity_sweep(TrainState& state, int n_samples,
                                   const std::vector<float>& bucket_edges = {0.0f, 10.0f, 30.0f});

// ---------------------------------------------------------------------------
// Pose / depth error
// ---------------------------------------------------------------------------

class PoseDepthEstimator {
public:
    virtual ~PoseDepthEstimator() = default;
    // Depth estimate for a render. Toy mode reads the true composited
    // depth of the MPI behind the render (oracle access).
    virtual Tensor estimate_depth(const RenderedImage& image, const MultiplaneImage& rendered_mpi,
                                  const ParallaxModel& parallax) const = 0;
    // Pose estimate for a render given the unedited reference model.
    virtual CameraPose estimate_pose(const RenderedImage& image,
                                     const MultiplaneImage& reference_mpi,
                                     const ParallaxModel& parallax) const = 0;
};

// Depth: true composited depth at the requested pose. Pose: grid search
// against reference renders; the candidate grid always contains the
// requested pose, so unedited renders recover it exactly.
class ToyPoseDepthEstimator final : public PoseDepthEstimator {
public:
    explicit ToyPoseDepthEstimator(AngleRange yaw, AngleRange pitch, int grid = 25);
    Tensor estimate_depth(const RenderedImage& image, const MultiplaneImage& rendered_mpi,
                          const ParallaxModel& parallax) const override;
    CameraPose estimate_pose(const RenderedImage& image, const MultiplaneImage& reference_mpi,
                             const ParallaxModel& parallax) const override;

private:
    AngleRange yaw_, pitch_;
    int grid_;
};

struct PoseDepthResult {
    double depth_err = 0.0;  // mean L2 between edited and pseudo-GT depth maps
    double pose_err = 0.0;   // mean squared pose error, degrees^2
    int samples = 0;
};

// When `edited` is false the unedited renders are scored against their own
// pseudo ground truth (a zero baseline for the toy oracle).
PoseDepthResult pose_depth_error(TrainState& state, const PoseDepthEstimator& estimator,
                                 int n_samples, bool edited = true);

// ---------------------------------------------------------------------------
// Prompt perturbations and bias probe
// ---------------------------------------------------------------------------

enum class PerturbKind { CharacterDeletion, WordInsertion, OcrSubstitution };

// CD removes exactly one character, WI inserts exactly one filler word,
// OCR substitutes one character through a fixed confusion table.
std::string perturb_prompt(const std::string& text, PerturbKind kind, std::mt19937_64& rng);

// L2 distance between the mean encoder embeddings of two prompt-variant
// groups; identical groups give exactly zero.
double prompt_bias_probe(const std::vector<std::string>& variants_a,
                         const std::vector<std::string>& variants_b, const TextEncoder& encoder,
                         int token_dim);

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

struct MetricReport {
    std::vector<std::string> attribute_names;
    std::vector<double> aa;  // per attribute
    std::vector<double> ad;
    IdentitySweepResult identity;
    PoseDepthResult pose_depth;
    int samples = 0;
};

nlohmann::json report_json(const MetricReport& report);

// Full toy evaluation over a trained state. per_sample_csv, when set,
// receives one identity-cosine row per sample.
MetricReport evaluate(TrainState& state, int n_samples,
                      const std::optional<std::filesystem::path>& per_sample_csv = {});

}  // namespace laekit
