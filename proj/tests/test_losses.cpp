#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "laekit/losses.hpp"
#include "laekit/trainer.hpp"
#include "test_support.hpp"

using namespace laekit;
using testsupport::loop_cosine;
using testsupport::loop_normalize;

TEST_CASE("weighted total uses every documented default weight") {
    LossWeights w;
    CHECK(w.dclip == 1.0f);
    CHECK(w.sc == 0.8f);
    CHECK(w.id == 0.8f);
    CHECK(w.idvc == 0.5f);
    CHECK(w.latent == 0.5f);
    CHECK(w.alpha == 0.5f);

    LossBreakdown unit;
    unit.dclip = unit.sc = unit.id = unit.idvc = unit.latent = unit.alpha = 1.0;
    LossBreakdown out = total_loss(unit, w);
    CHECK(out.total == doctest::Approx(4.1).epsilon(1e-6));

    LossWeights bad;
    bad.sc = -0.1f;
    CHECK_THROWS(bad.validate());
}

TEST_CASE("directional term matches a scalar loop oracle for K in 1..4") {
    ToyImageEncoder enc(16, 48, 99);
    std::mt19937_64 rng(50);
    for (int k = 1; k <= 4; ++k) {
        std::vector<Tensor> edited, source, text;
        for (int i = 0; i < k; ++i) {
            edited.push_back(testsupport::random_unit_image(16, rng));
            source.push_back(testsupport::random_unit_image(16, rng));
            text.push_back(Tensor::gaussian({48}, 1.0f, rng));
        }
        Tensor tsrc = Tensor::gaussian({48}, 1.0f, rng);

        double got = directional_clip_loss(edited, source, text, tsrc, enc);

        float want = 0.0f;
        Tensor nsrc = loop_normalize(tsrc);
        for (int i = 0; i < k; ++i) {
            Tensor ie = loop_normalize(enc.encode_image(edited[size_t(i)]));
            Tensor is = loop_normalize(enc.encode_image(source[size_t(i)]));
            Tensor di = ie;
            for (int j = 0; j < di.size(); ++j) di[j] -= is[j];
            Tensor dt = loop_normalize(text[size_t(i)]);
            for (int j = 0; j < dt.size(); ++j) dt[j] -= nsrc[j];
            want += 1.0f - loop_cosine(di, dt);
        }
        CHECK(std::abs(got - double(want)) <= 1e-6);
    }
}

TEST_CASE("contrastive term oracle, single prompt zero, permutation invariance") {
    std::mt19937_64 rng(51);
    for (int k = 1; k <= 4; ++k) {
        std::vector<Tensor> embeds;
        for (int i = 0; i < k; ++i) embeds.push_back(Tensor::gaussian({32}, 1.0f, rng));
        double got = token_contrastive_loss(embeds);
        if (k == 1) {
            CHECK(got == 0.0);
            continue;
        }
        float want = 0.0f;
        for (int i = 0; i < k; ++i)
            for (int j = i + 1; j < k; ++j)
                want += loop_cosine(embeds[size_t(i)], embeds[size_t(j)]);
        CHECK(std::abs(got - double(want)) <= 1e-6);

        std::vector<Tensor> shuffled = embeds;
        std::reverse(shuffled.begin(), shuffled.end());
        CHECK(std::abs(token_contrastive_loss(shuffled) - got) <= 1e-6);
    }
}

TEST_CASE("contrastive cosine extremes") {
    Tensor a({2}, {1.0f, 0.0f});
    Tensor b({2}, {0.0f, 1.0f});
    CHECK(token_contrastive_loss({a, b}) == 0.0);
    CHECK(token_contrastive_loss({a, a}) == 1.0);
    Tensor na({2}, {-1.0f, 0.0f});
    CHECK(token_contrastive_loss({a, na}) == doctest::Approx(-1.0).epsilon(1e-7));
    CHECK_THROWS_AS((void)token_contrastive_loss({a, Tensor::zeros({2})}), std::domain_error);
}

TEST_CASE("identity term oracle and frontal pose contract") {
    ToyIdentityEncoder enc(16, 24, 7);
    std::mt19937_64 rng(52);
    RenderedImage e{testsupport::random_unit_image(16, rng), {0.0f, 0.0f}};
    RenderedImage s{testsupport::random_unit_image(16, rng), {0.0f, 0.0f}};
    double got = identity_loss(e, s, enc);
    float want = 1.0f - loop_cosine(enc.encode_image(e.pixels), enc.encode_image(s.pixels));
    CHECK(std::abs(got - double(want)) <= 1e-6);

    CHECK(identity_loss(e, e, enc) == 0.0);  // bit-identical renders: exact

    RenderedImage off{e.pixels, {5.0f, 0.0f}};
    CHECK_THROWS(identity_loss(off, s, enc));
}

TEST_CASE("view consistency term oracle over unordered pairs") {
    ToyConfig cfg;
    cfg.height = 16;
    cfg.latent_dim = 8;
    cfg.num_layers = 6;
    cfg.planes = 2;
    ToyBackbone bk(cfg);
    ToyIdentityEncoder enc(16, 24, 7);
    AlphaBranchParams alpha = bk.initial_alpha_params();

    std::mt19937_64 rng(53);
    for (int k = 1; k <= 4; ++k) {
        std::vector<LatentCode> codes;
        for (int i = 0; i < k; ++i)
            codes.push_back(bk.map_latent(Tensor::gaussian({8}, 1.0f, rng)));
        std::vector<std::pair<CameraPose, CameraPose>> poses;
        for (int i = 0; i < k * (k - 1) / 2; ++i)
            poses.emplace_back(sample_pose(rng, {-30.0f, 30.0f}, {-20.0f, 20.0f}),
                               sample_pose(rng, {-30.0f, 30.0f}, {-20.0f, 20.0f}));

        double got = view_consistency_identity_loss(codes, poses, bk, alpha, enc);
        if (k < 2) {
            CHECK(got == 0.0);
            continue;
        }
        float want = 0.0f;
        size_t p = 0;
        for (int i = 0; i < k; ++i)
            for (int j = i + 1; j < k; ++j, ++p) {
                Tensor a = composite_mpi(bk.generate(codes[size_t(i)], alpha),
                                         poses[p].first).pixels;
                Tensor b = composite_mpi(bk.generate(codes[size_t(j)], alpha),
                                         poses[p].second).pixels;
                want += 1.0f - loop_cosine(enc.encode_image(a), enc.encode_image(b));
            }
        CHECK(std::abs(got - double(want)) <= 1e-6);

        if (k >= 2) CHECK_THROWS((void)view_consistency_identity_loss(codes, {}, bk, alpha, enc));
    }
}

TEST_CASE("latent and alpha regularizers match loop norms") {
    std::mt19937_64 rng(54);
    int dw = 8, de = 12, layers = 6;
    MapperParams p = init_mapper(dw, de, rng, 0.1f);
    LatentCode w;
    for (int l = 0; l < layers; ++l) w.layers.push_back(Tensor::gaussian({dw}, 1.0f, rng));
    Tensor dv = Tensor::gaussian({de}, 1.0f, rng);
    LatentSplit split = LatentSplit::thirds(layers);

    double got = latent_reg_loss(w, dv, p, split);
    EditDirection d = map_edit(w, dv, p, split);
    double sq = 0.0;
    for (const Tensor& l : d.layers)
        for (float v : l.data) sq += double(v) * v;
    CHECK(std::abs(got - std::sqrt(sq)) <= 1e-6);

    std::vector<Tensor> acts;
    for (int i = 0; i < 3; ++i) acts.push_back(Tensor::gaussian({40}, 0.5f, rng));
    double asq = 0.0;
    for (const Tensor& a : acts)
        for (float v : a.data) asq += double(v) * v;
    CHECK(std::abs(alpha_reg_loss(acts) - std::sqrt(asq)) <= 1e-6);

    acts[1][3] = std::numeric_limits<float>::infinity();
    CHECK_THROWS((void)alpha_reg_loss(acts));
}

TEST_CASE("tape loss gradients match finite differences") {
    ToyImageEncoder enc(8, 24, 99);
    std::mt19937_64 rng(55);
    Tensor edited = testsupport::random_unit_image(8, rng);
    Tensor source = testsupport::random_unit_image(8, rng);
    Tensor text = Tensor::gaussian({24}, 1.0f, rng);
    Tensor tsrc = Tensor::gaussian({24}, 1.0f, rng);

    auto forward = [&]() { return directional_clip_loss({edited}, {source}, {text}, tsrc, enc); };

    Tape t;
    Tape::VarId ev = t.leaf(edited, true);
    Tape::VarId sv = t.leaf(source, true);
    Tape::VarId tv = t.leaf(text, true);
    std::vector<Tape::VarId> evs{ev}, svs{sv}, tvs{tv};
    Tape::VarId loss = directional_clip_loss_var(t, evs, svs, tvs, t.leaf(tsrc), enc);
    t.backward(loss);
    for (int i : {0, 17, 63, 101, 180}) {
        double fd = testsupport::central_diff(forward, &edited.data[size_t(i)], 1e-2f);
        CHECK(testsupport::rel_err(t.grad(ev)[i], fd) < 2e-3);
    }
    for (int i : {0, 7, 15, 23}) {
        double fd = testsupport::central_diff(forward, &text.data[size_t(i)], 1e-2f);
        CHECK(testsupport::rel_err(t.grad(tv)[i], fd) < 2e-3);
    }
}
