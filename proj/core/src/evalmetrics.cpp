#include "laekit/evalmetrics.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace laekit {

// ---------------------------------------------------------------------------
// AA / AD
// ---------------------------------------------------------------------------

ToyAttributeClassifier::ToyAttributeClassifier(int num_attributes, int height, std::uint64_t seed,
                                               const std::vector<Tensor>& reference_images) {
    if (num_attributes < 1) throw std::invalid_argument("classifier needs attributes");
    if (reference_images.size() < 2)
        throw std::invalid_argument("classifier needs at least two reference images");
    int n = 3 * height * height;
    std::mt19937_64 rng(seed ^ 0x636c617373000000ull);
    probes_ = Tensor::gaussian({num_attributes, n}, 1.0f / std::sqrt(static_cast<float>(n)), rng);
    // per-attribute logit std over the reference set
    std::vector<double> mean(static_cast<size_t>(num_attributes), 0.0);
    std::vector<double> sq(static_cast<size_t>(num_attributes), 0.0);
    for (const Tensor& img : reference_images) {
        Tensor l = logits(img);
        for (int k = 0; k < num_attributes; ++k) {
            mean[static_cast<size_t>(k)] += l[k];
            sq[static_cast<size_t>(k)] += static_cast<double>(l[k]) * l[k];
        }
    }
    double inv = 1.0 / static_cast<double>(reference_images.size());
    for (int k = 0; k < num_attributes; ++k) {
        double mu = mean[static_cast<size_t>(k)] * inv;
        double var = sq[static_cast<size_t>(k)] * inv - mu * mu;
        float s = static_cast<float>(std::sqrt(std::max(var, 1e-12)));
        sigma_.push_back(s);
    }
}

Tensor ToyAttributeClassifier::logits(const Tensor& image) const {
    int n = probes_.shape[1];
    if (image.size() != n) throw std::invalid_argument("classifier: image size mismatch");
    int k = probes_.shape[0];
    Tensor out = Tensor::zeros({k});
    for (int r = 0; r < k; ++r) {
        float acc = 0.0f;
        const float* row = probes_.data.data() + static_cast<size_t>(r) * n;
        for (int c = 0; c < n; ++c) acc += row[c] * image[c];
        out[r] = acc;
    }
    return out;
}

static void check_pairs(const std::vector<Tensor>& edited, const std::vector<Tensor>& originals,
                        int target, const AttributeClassifier& clf) {
    if (edited.empty() || edited.size() != originals.size())
        throw std::invalid_argument("metric needs matched, nonempty image pairs");
    if (target < 0 || target >= clf.num_attributes())
        throw std::invalid_argument("unknown target attribute");
}

double attribute_altering(const std::vector<Tensor>& edited, const std::vector<Tensor>& originals,
                          int target_attr, const AttributeClassifier& clf) {
    check_pairs(edited, originals, target_attr, clf);
    double acc = 0.0;
    for (size_t i = 0; i < edited.size(); ++i) {
        Tensor le = clf.logits(edited[i]);
        Tensor lo = clf.logits(originals[i]);
        acc += static_cast<double>(le[target_attr] - lo[target_attr]) /
               clf.sigma()[static_cast<size_t>(target_attr)];
    }
    return acc / static_cast<double>(edited.size());
}

double attribute_dependency(const std::vector<Tensor>& edited,
                            const std::vector<Tensor>& originals, int target_attr,
                            const AttributeClassifier& clf) {
    check_pairs(edited, originals, target_attr, clf);
    int n = clf.num_attributes();
    if (n < 2) return 0.0;
    double acc = 0.0;
    for (size_t i = 0; i < edited.size(); ++i) {
        Tensor le = clf.logits(edited[i]);
        Tensor lo = clf.logits(originals[i]);
        for (int k = 0; k < n; ++k) {
            if (k == target_attr) continue;
            acc += std::abs(static_cast<double>(le[k] - lo[k])) / clf.sigma()[static_cast<size_t>(k)];
        }
    }
    return acc / (static_cast<double>(edited.size()) * static_cast<double>(n - 1));
}

// ---------------------------------------------------------------------------
// Identity sweep
// ---------------------------------------------------------------------------

static double cosine_plain(const Tensor& a, const Tensor& b) {
    Tape tape;
    return tape.scalar(tape.cosine(tape.leaf(a), tape.leaf(b)));
}

IdentitySweepResult identity_sweep(TrainState& state, int n_samples,
                                   const std::vector<float>& bucket_edges) {
    if (n_samples < 1) throw std::invalid_argument("identity sweep needs samples");
    if (bucket_edges.size() < 2) throw std::invalid_argument("need at least one pose bucket");
    const ToyBackbone& bk = *state.bundle.toy;
    const ParallaxModel parallax{state.config.parallax_scale};
    int n_attr = static_cast<int>(state.config.attributes.size());
    int buckets = static_cast<int>(bucket_edges.size()) - 1;

    IdentitySweepResult res;
    res.bucket_edges = bucket_edges;
    res.bucket_means.assign(static_cast<size_t>(buckets), 0.0);
    res.bucket_counts.assign(static_cast<size_t>(buckets), 0);

    for (int s = 0; s < n_samples; ++s) {
        LatentCode w = sample_w(state);
        int attr = s % n_attr;
        LatentCode edited = apply_edit(w, attribute_edit(state, w, attr));
        MultiplaneImage mpi_src = bk.generate(w, state.alpha_source);
        MultiplaneImage mpi_edit = bk.generate(edited, state.alpha);
        // stratified over buckets so every reachable bucket gets samples;
        // the original is rendered at the same pose, so a zero edit scores
        // an exact self-similarity of one
        int want_bucket = s % buckets;
        CameraPose pose{0.0f, 0.0f};
        bool found = false;
        for (int tries = 0; tries < 10000 && !found; ++tries) {
            pose = sample_pose(state.rng, state.config.yaw_range, state.config.pitch_range);
            float m = std::max(std::abs(pose.yaw), std::abs(pose.pitch));
            bool last = (want_bucket == buckets - 1);
            found = m >= bucket_edges[static_cast<size_t>(want_bucket)] &&
                    (m < bucket_edges[static_cast<size_t>(want_bucket) + 1] ||
                     (last && m <= bucket_edges[static_cast<size_t>(want_bucket) + 1]));
        }
        if (!found)
            throw std::runtime_error("identity sweep: empty pose bucket " +
                                     std::to_string(want_bucket));
        RenderedImage src = composite_mpi(mpi_src, pose, parallax);
        RenderedImage edt = composite_mpi(mpi_edit, pose, parallax);
        Tensor e_src = state.bundle.encoders.identity->encode_image(src.pixels);
        Tensor e_edt = state.bundle.encoders.identity->encode_image(edt.pixels);
        double cos = cosine_plain(e_src, e_edt);
        res.per_sample.push_back(cos);
        float mag = std::max(std::abs(pose.yaw), std::abs(pose.pitch));
        for (int b = 0; b < buckets; ++b) {
            bool last = (b == buckets - 1);
            if (mag >= bucket_edges[static_cast<size_t>(b)] &&
                (mag < bucket_edges[static_cast<size_t>(b) + 1] ||
                 (last && mag <= bucket_edges[static_cast<size_t>(b) + 1]))) {
                res.bucket_means[static_cast<size_t>(b)] += cos;
                res.bucket_counts[static_cast<size_t>(b)] += 1;
                break;
            }
        }
    }
    for (int b = 0; b < buckets; ++b) {
        if (res.bucket_counts[static_cast<size_t>(b)] == 0)
            throw std::runtime_error("identity sweep: empty pose bucket " + std::to_string(b));
        res.bucket_means[static_cast<size_t>(b)] /= res.bucket_counts[static_cast<size_t>(b)];
    }
    return res;
}

// ---------------------------------------------------------------------------
// Pose / depth
// ---------------------------------------------------------------------------

ToyPoseDepthEstimator::ToyPoseDepthEstimator(AngleRange yaw, AngleRange pitch, int grid)
    : yaw_(yaw), pitch_(pitch), grid_(grid) {
    yaw.validate();
    pitch.validate();
    int k = static_cast<int>(std::lround(std::sqrt(static_cast<double>(grid))));
    if (k * k != grid) throw std::invalid_argument("pose estimator grid must be a perfect square");
}

Tensor ToyPoseDepthEstimator::estimate_depth(const RenderedImage& image,
                                             const MultiplaneImage& rendered_mpi,
                                             const ParallaxModel& parallax) const {
    return composite_depth(rendered_mpi, image.pose, parallax);
}

CameraPose ToyPoseDepthEstimator::estimate_pose(const RenderedImage& image,
                                                const MultiplaneImage& reference_mpi,
                                                const ParallaxModel& parallax) const {
    std::vector<CameraPose> candidates = pose_grid(yaw_, pitch_, grid_);
    candidates.push_back(image.pose);
    CameraPose best{0.0f, 0.0f};
    double best_err = -1.0;
    for (const CameraPose& q : candidates) {
        RenderedImage ref = composite_mpi(reference_mpi, q, parallax);
        double err = 0.0;
        for (int i = 0; i < ref.pixels.size(); ++i) {
            double d = static_cast<double>(ref.pixels[i]) - image.pixels[i];
            err += d * d;
        }
        if (best_err < 0.0 || err < best_err) {
            best_err = err;
            best = q;
        }
    }
    return best;
}

PoseDepthResult pose_depth_error(TrainState& state, const PoseDepthEstimator& estimator,
                                 int n_samples, bool edited) {
    if (n_samples < 1) throw std::invalid_argument("pose/depth needs samples");
    const ToyBackbone& bk = *state.bundle.toy;
    const ParallaxModel parallax{state.config.parallax_scale};
    int n_attr = static_cast<int>(state.config.attributes.size());
    PoseDepthResult res;
    res.samples = n_samples;
    for (int s = 0; s < n_samples; ++s) {
        LatentCode w = sample_w(state);
        MultiplaneImage mpi_src = bk.generate(w, state.alpha_source);
        MultiplaneImage mpi_img = mpi_src;
        if (edited) {
            LatentCode we = apply_edit(w, attribute_edit(state, w, s % n_attr));
            mpi_img = bk.generate(we, state.alpha);
        }
        CameraPose pose =
            sample_pose(state.rng, state.config.yaw_range, state.config.pitch_range);
        RenderedImage render = composite_mpi(mpi_img, pose, parallax);
        Tensor est_depth;
        CameraPose est_pose{0.0f, 0.0f};
        try {
            est_depth = estimator.estimate_depth(render, mpi_img, parallax);
            est_pose = estimator.estimate_pose(render, mpi_src, parallax);
        } catch (const std::exception& e) {
            throw std::runtime_error("pose/depth estimator failed at sample " +
                                     std::to_string(s) + ": " + e.what());
        }
        Tensor gt_depth = composite_depth(mpi_src, pose, parallax);
        double acc = 0.0;
        for (int i = 0; i < gt_depth.size(); ++i) {
            double d = static_cast<double>(est_depth[i]) - gt_depth[i];
            acc += d * d;
        }
        res.depth_err += std::sqrt(acc);
        double dy = static_cast<double>(est_pose.yaw) - pose.yaw;
        double dp = static_cast<double>(est_pose.pitch) - pose.pitch;
        res.pose_err += dy * dy + dp * dp;
    }
    res.depth_err /= n_samples;
    res.pose_err /= n_samples;
    return res;
}

// ---------------------------------------------------------------------------
// Prompt perturbations and bias probe
// ---------------------------------------------------------------------------

std::string perturb_prompt(const std::string& text, PerturbKind kind, std::mt19937_64& rng) {
    if (text.empty()) throw std::invalid_argument("perturb_prompt: empty text");
    switch (kind) {
        case PerturbKind::CharacterDeletion: {
            std::uniform_int_distribution<size_t> pick(0, text.size() - 1);
            std::string out = text;
            out.erase(pick(rng), 1);
            return out;
        }
        case PerturbKind::WordInsertion: {
            static const char* fillers[] = {"very", "quite", "really", "rather", "somewhat"};
            std::uniform_int_distribution<size_t> pick_word(0, std::size(fillers) - 1);
            // split on single spaces, insert at a random word boundary
            std::vector<std::string> words;
            size_t start = 0;
            while (true) {
                size_t sp = text.find(' ', start);
                words.push_back(text.substr(start, sp - start));
                if (sp == std::string::npos) break;
                start = sp + 1;
            }
            std::uniform_int_distribution<size_t> pick_pos(0, words.size());
            std::string filler = fillers[pick_word(rng)];
            words.insert(words.begin() + static_cast<std::ptrdiff_t>(pick_pos(rng)), filler);
            std::string out;
            for (size_t i = 0; i < words.size(); ++i) {
                if (i) out += ' ';
                out += words[i];
            }
            return out;
        }
        case PerturbKind::OcrSubstitution: {
            static const std::pair<char, char> confusions[] = {
                {'O', '0'}, {'o', '0'}, {'l', '1'}, {'I', '1'}, {'e', '3'},
                {'a', '@'}, {'s', '5'}, {'S', '5'}, {'B', '8'}, {'g', '9'}};
            std::vector<size_t> positions;
            for (size_t i = 0; i < text.size(); ++i)
                for (const auto& [from, to] : confusions)
                    if (text[i] == from) {
                        positions.push_back(i);
                        break;
                    }
            if (positions.empty()) return text;  // nothing the table can touch
            std::uniform_int_distribution<size_t> pick(0, positions.size() - 1);
            size_t pos = positions[pick(rng)];
            std::string out = text;
            for (const auto& [from, to] : confusions)
                if (out[pos] == from) {
                    out[pos] = to;
                    break;
                }
            return out;
        }
    }
    throw std::logic_error("unreachable perturbation kind");
}

static Tensor encode_text_line(const TextEncoder& encoder, const std::string& text,
                               int token_dim) {
    PromptAssembly a;
    auto push = [&](Tensor t) {
        a.sequence.push_back(std::move(t));
        a.trainable.push_back(false);
    };
    push(embed_word("<sos>", token_dim));
    for (Tensor& t : embed_text(text, token_dim)) push(std::move(t));
    push(embed_word("<eos>", token_dim));
    return encoder.encode_assembly(a);
}

double prompt_bias_probe(const std::vector<std::string>& variants_a,
                         const std::vector<std::string>& variants_b, const TextEncoder& encoder,
                         int token_dim) {
    if (variants_a.empty() || variants_b.empty())
        throw std::invalid_argument("bias probe: empty variant group");
    auto group_mean = [&](const std::vector<std::string>& group) {
        Tensor mean = Tensor::zeros({encoder.embedding_dim()});
        for (const std::string& text : group) {
            Tensor e = encode_text_line(encoder, text, token_dim);
            for (int i = 0; i < mean.size(); ++i) mean[i] += e[i];
        }
        for (float& v : mean.data) v /= static_cast<float>(group.size());
        return mean;
    };
    Tensor ma = group_mean(variants_a);
    Tensor mb = group_mean(variants_b);
    double acc = 0.0;
    for (int i = 0; i < ma.size(); ++i) {
        double d = static_cast<double>(ma[i]) - mb[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

nlohmann::json report_json(const MetricReport& report) {
    nlohmann::json attrs = nlohmann::json::array();
    for (size_t i = 0; i < report.attribute_names.size(); ++i)
        attrs.push_back({{"name", report.attribute_names[i]},
                         {"aa", report.aa[i]},
                         {"ad", report.ad[i]}});
    nlohmann::json buckets = nlohmann::json::array();
    for (size_t b = 0; b + 1 < report.identity.bucket_edges.size(); ++b)
        buckets.push_back({{"min_deg", report.identity.bucket_edges[b]},
                           {"max_deg", report.identity.bucket_edges[b + 1]},
                           {"mean_cosine", report.identity.bucket_means[b]},
                           {"count", report.identity.bucket_counts[b]}});
    return {{"samples", report.samples},
            {"attributes", attrs},
            {"identity_buckets", buckets},
            {"depth_err", report.pose_depth.depth_err},
            {"pose_err", report.pose_depth.pose_err}};
}

MetricReport evaluate(TrainState& state, int n_samples,
                      const std::optional<std::filesystem::path>& per_sample_csv) {
    const ToyBackbone& bk = *state.bundle.toy;
    const ParallaxModel parallax{state.config.parallax_scale};
    const CameraPose frontal{0.0f, 0.0f};
    int n_attr = static_cast<int>(state.config.attributes.size());

    MetricReport report;
    report.samples = n_samples;
    for (const AttributeSpec& a : state.config.attributes)
        report.attribute_names.push_back(a.name);

    // frontal render pairs per attribute, shared reference set for sigma
    std::vector<std::vector<Tensor>> edited(static_cast<size_t>(n_attr));
    std::vector<std::vector<Tensor>> originals(static_cast<size_t>(n_attr));
    std::vector<Tensor> reference;
    int per_attr = std::max(1, n_samples / n_attr);
    for (int i = 0; i < n_attr; ++i) {
        for (int s = 0; s < per_attr; ++s) {
            LatentCode w = sample_w(state);
            LatentCode we = apply_edit(w, attribute_edit(state, w, i));
            RenderedImage orig =
                composite_mpi(bk.generate(w, state.alpha_source), frontal, parallax);
            RenderedImage edit = composite_mpi(bk.generate(we, state.alpha), frontal, parallax);
            originals[static_cast<size_t>(i)].push_back(orig.pixels);
            edited[static_cast<size_t>(i)].push_back(edit.pixels);
            reference.push_back(orig.pixels);
        }
    }
    ToyAttributeClassifier clf(n_attr, bk.config().height, bk.config().seed, reference);
    for (int i = 0; i < n_attr; ++i) {
        report.aa.push_back(attribute_altering(edited[static_cast<size_t>(i)],
                                               originals[static_cast<size_t>(i)], i, clf));
        report.ad.push_back(attribute_dependency(edited[static_cast<size_t>(i)],
                                                 originals[static_cast<size_t>(i)], i, clf));
    }

    report.identity = identity_sweep(state, n_samples);
    ToyPoseDepthEstimator estimator(state.config.yaw_range, state.config.pitch_range);
    report.pose_depth = pose_depth_error(state, estimator, n_samples);

    if (per_sample_csv) {
        std::ofstream f(*per_sample_csv);
        if (!f) throw std::runtime_error("cannot write per-sample CSV");
        f << "sample,identity_cosine\n";
        for (size_t s = 0; s < report.identity.per_sample.size(); ++s)
            f << s << "," << report.identity.per_sample[s] << "\n";
    }
    return report;
}

}  // namespace laekit
