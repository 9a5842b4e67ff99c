#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "laekit/image_io.hpp"
#include "laekit/latent.hpp"
#include "laekit/mpi.hpp"
#include "laekit/pose.hpp"
#include "laekit/tape.hpp"
#include "laekit/tensor.hpp"
#include "test_support.hpp"

using namespace laekit;
using testsupport::central_diff;
using testsupport::rel_err;

TEST_CASE("tensor constructors and digest") {
    Tensor z = Tensor::zeros({2, 3});
    CHECK(z.size() == 6);
    CHECK(z.all_finite());
    Tensor f = Tensor::full({4}, 1.5f);
    for (float v : f.data) CHECK(v == 1.5f);

    std::mt19937_64 a(11), b(11), c(12);
    Tensor ga = Tensor::gaussian({64}, 1.0f, a);
    Tensor gb = Tensor::gaussian({64}, 1.0f, b);
    Tensor gc = Tensor::gaussian({64}, 1.0f, c);
    CHECK(ga.data == gb.data);
    CHECK(ga.data != gc.data);
    CHECK(fnv1a_digest(0, ga) == fnv1a_digest(0, gb));
    CHECK(fnv1a_digest(0, ga) != fnv1a_digest(0, gc));

    Tensor nf({1}, {std::numeric_limits<float>::quiet_NaN()});
    CHECK_FALSE(nf.all_finite());
}

TEST_CASE("tape elementwise ops against hand math") {
    Tape t;
    Tape::VarId a = t.leaf(Tensor({3}, {1.0f, -2.0f, 0.5f}), true);
    Tape::VarId b = t.leaf(Tensor({3}, {3.0f, 4.0f, -1.0f}), true);
    CHECK(t.value(t.add(a, b))[1] == 2.0f);
    CHECK(t.value(t.sub(a, b))[0] == -2.0f);
    CHECK(t.value(t.mul(a, b))[2] == -0.5f);
    CHECK(t.value(t.div(a, b))[1] == -0.5f);
    CHECK(t.value(t.affine(a, 2.0f, 1.0f))[0] == 3.0f);
    CHECK(t.value(t.sigmoid(t.leaf(Tensor({1}, {0.0f}))))[0] == 0.5f);
    CHECK(t.value(t.tanh(t.leaf(Tensor({1}, {0.0f}))))[0] == 0.0f);
}

TEST_CASE("tape backward matches finite differences on a composite expression") {
    std::mt19937_64 rng(5);
    Tensor xv = Tensor::gaussian({6}, 1.0f, rng);
    Tensor wv = Tensor::gaussian({4, 6}, 0.5f, rng);
    Tensor bv = Tensor::gaussian({4}, 0.5f, rng);

    auto forward = [&]() {
        Tape t;
        Tape::VarId x = t.leaf(xv, true);
        Tape::VarId w = t.leaf(wv, true);
        Tape::VarId b = t.leaf(bv, true);
        Tape::VarId h = t.tanh(t.matvec(w, x, b));
        Tape::VarId s = t.sigmoid(h);
        return t.scalar(t.dot(s, h));
    };

    Tape t;
    Tape::VarId x = t.leaf(xv, true);
    Tape::VarId w = t.leaf(wv, true);
    Tape::VarId b = t.leaf(bv, true);
    Tape::VarId h = t.tanh(t.matvec(w, x, b));
    Tape::VarId s = t.sigmoid(h);
    Tape::VarId out = t.dot(s, h);
    t.backward(out);

    for (int i = 0; i < xv.size(); ++i)
        CHECK(rel_err(t.grad(x)[i], central_diff(forward, &xv.data[size_t(i)], 1e-2f)) < 2e-3);
    for (int i : {0, 5, 11, 17, 23})
        CHECK(rel_err(t.grad(w)[i], central_diff(forward, &wv.data[size_t(i)], 1e-2f)) < 2e-3);
    for (int i = 0; i < bv.size(); ++i)
        CHECK(rel_err(t.grad(b)[i], central_diff(forward, &bv.data[size_t(i)], 1e-2f)) < 2e-3);
}

TEST_CASE("cosine is exactly one for identical inputs and rejects zero norm") {
    std::mt19937_64 rng(9);
    Tensor v = Tensor::gaussian({16}, 1.0f, rng);
    Tape t;
    Tape::VarId a = t.leaf(v);
    Tape::VarId b = t.leaf(v);
    CHECK(t.scalar(t.cosine(a, b)) == 1.0f);

    Tape::VarId neg = t.affine(a, -1.0f, 0.0f);
    CHECK(t.scalar(t.cosine(a, neg)) == doctest::Approx(-1.0).epsilon(1e-6));

    Tape::VarId e0 = t.leaf(Tensor({2}, {1.0f, 0.0f}));
    Tape::VarId e1 = t.leaf(Tensor({2}, {0.0f, 1.0f}));
    CHECK(t.scalar(t.cosine(e0, e1)) == 0.0f);

    Tape::VarId z = t.leaf(Tensor::zeros({16}));
    CHECK_THROWS_AS((void)t.cosine(a, z), std::domain_error);
}

TEST_CASE("concat slice reshape round trips") {
    Tape t;
    Tape::VarId a = t.leaf(Tensor({2}, {1.0f, 2.0f}));
    Tape::VarId b = t.leaf(Tensor({3}, {3.0f, 4.0f, 5.0f}));
    Tape::VarId c = t.concat(a, b);
    CHECK(t.value(c).size() == 5);
    CHECK(t.value(t.slice(c, 2, 3)).data == std::vector<float>{3.0f, 4.0f, 5.0f});
    Tape::VarId r = t.reshape(c, {5, 1});
    CHECK(t.value(r).shape == std::vector<int>{5, 1});
    CHECK(t.value(r).data == t.value(c).data);
}

TEST_CASE("latent split merge round trip and edit application") {
    std::mt19937_64 rng(3);
    LatentCode w;
    for (int l = 0; l < 12; ++l) w.layers.push_back(Tensor::gaussian({8}, 1.0f, rng));
    w.validate();

    LatentSplit split = LatentSplit::thirds(12);
    CHECK(split.coarse_end == 4);
    CHECK(split.middle_end == 8);
    CHECK(split.group_of(0) == 0);
    CHECK(split.group_of(5) == 1);
    CHECK(split.group_of(11) == 2);

    LatentGroups g = split_latent(w, split);
    CHECK(g.coarse.size() == 4);
    LatentCode merged = merge_latent(g);
    REQUIRE(merged.num_layers() == 12);
    for (int l = 0; l < 12; ++l) CHECK(merged.layers[size_t(l)].data == w.layers[size_t(l)].data);

    EditDirection delta;
    for (int l = 0; l < 12; ++l) delta.layers.push_back(Tensor::gaussian({8}, 0.1f, rng));
    LatentCode edited = apply_edit(w, delta);
    for (int l = 0; l < 12; ++l)
        for (int i = 0; i < 8; ++i)
            CHECK(std::abs(edited.layers[size_t(l)][i] -
                           (w.layers[size_t(l)][i] + delta.layers[size_t(l)][i])) <= 1e-7f);

    double norm_sq = 0.0;
    for (const Tensor& l : delta.layers)
        for (float v : l.data) norm_sq += double(v) * v;
    CHECK(rel_err(delta.l2_norm(), std::sqrt(norm_sq)) < 1e-6);
}

TEST_CASE("explicit latent ranges must partition the layer list") {
    CHECK_NOTHROW((void)LatentSplit::from_ranges({0, 4}, {4, 8}, {8, 12}, 12));
    CHECK_THROWS((void)LatentSplit::from_ranges({0, 4}, {5, 8}, {8, 12}, 12));   // gap
    CHECK_THROWS((void)LatentSplit::from_ranges({0, 5}, {4, 8}, {8, 12}, 12));   // overlap
    CHECK_THROWS((void)LatentSplit::from_ranges({0, 4}, {4, 8}, {8, 11}, 12));   // short
    CHECK_THROWS((void)LatentSplit::from_ranges({1, 4}, {4, 8}, {8, 12}, 12));   // offset start
    CHECK_THROWS((void)LatentSplit::from_ranges({0, 0}, {0, 8}, {8, 12}, 12));   // empty group
}

TEST_CASE("pose grid covers corners center and matches a linspace oracle") {
    AngleRange yaw{-30.0f, 30.0f}, pitch{-20.0f, 20.0f};
    std::vector<CameraPose> nine = pose_grid(yaw, pitch, 9);
    REQUIRE(nine.size() == 9);
    CHECK(nine.front() == CameraPose{-30.0f, -20.0f});
    CHECK(nine.back() == CameraPose{30.0f, 20.0f});
    CHECK(nine[4] == CameraPose{0.0f, 0.0f});

    std::vector<CameraPose> grid = pose_grid(yaw, pitch, 25);
    REQUIRE(grid.size() == 25);
    for (int pi = 0; pi < 5; ++pi)
        for (int yi = 0; yi < 5; ++yi) {
            float ey = -30.0f + 60.0f * float(yi) / 4.0f;
            float ep = -20.0f + 40.0f * float(pi) / 4.0f;
            const CameraPose& got = grid[size_t(pi * 5 + yi)];
            CHECK(std::abs(got.yaw - ey) <= 1e-5f);
            CHECK(std::abs(got.pitch - ep) <= 1e-5f);
        }

    std::vector<CameraPose> one = pose_grid(yaw, pitch, 1);
    CHECK(one[0] == CameraPose{0.0f, 0.0f});

    std::vector<CameraPose> diag = pose_grid(yaw, pitch, 5, PoseLayout::Diagonal);
    CHECK(diag.front() == CameraPose{-30.0f, -20.0f});
    CHECK(diag.back() == CameraPose{30.0f, 20.0f});

    CHECK_THROWS((void)pose_grid(yaw, pitch, 8));
    CHECK_THROWS((void)pose_grid({-100.0f, 0.0f}, pitch, 9));
}

TEST_CASE("pose sampling is uniform and exact on degenerate ranges") {
    std::mt19937_64 rng(21);
    AngleRange yaw{-30.0f, 30.0f}, pitch{-20.0f, 20.0f};
    double ysum = 0.0, psum = 0.0;
    int n = 4000;
    for (int i = 0; i < n; ++i) {
        CameraPose p = sample_pose(rng, yaw, pitch);
        CHECK(p.yaw >= -30.0f);
        CHECK(p.yaw <= 30.0f);
        CHECK(p.pitch >= -20.0f);
        CHECK(p.pitch <= 20.0f);
        ysum += p.yaw;
        psum += p.pitch;
    }
    CHECK(std::abs(ysum / n) < 1.5);
    CHECK(std::abs(psum / n) < 1.5);

    CameraPose exact = sample_pose(rng, {7.0f, 7.0f}, {-3.0f, -3.0f});
    CHECK(exact.yaw == 7.0f);
    CHECK(exact.pitch == -3.0f);

    // Degenerate ranges must consume the same number of draws.
    std::mt19937_64 r1(5), r2(5);
    (void)sample_pose(r1, {0.0f, 0.0f}, {0.0f, 0.0f});
    (void)sample_pose(r2, yaw, pitch);
    CHECK(r1() == r2());
}

TEST_CASE("plane depths are an inclusive linspace") {
    std::vector<float> d = plane_depths(4, 0.95f, 1.12f);
    CHECK(d.front() == 0.95f);
    CHECK(d.back() == doctest::Approx(1.12).epsilon(1e-6));
    CHECK(std::abs(d[1] - (0.95f + 0.17f / 3.0f)) < 1e-6f);
    std::vector<float> one = plane_depths(1, 0.95f, 1.12f);
    CHECK(one[0] == doctest::Approx(1.035).epsilon(1e-6));
    CHECK_THROWS((void)plane_depths(0, 0.95f, 1.12f));
}

static MultiplaneImage random_mpi(int h, int planes, std::mt19937_64& rng) {
    MultiplaneImage mpi;
    mpi.color = testsupport::random_unit_image(h, rng);
    for (int p = 0; p < planes; ++p) mpi.alphas.push_back(testsupport::random_alpha_map(h, rng));
    mpi.depths = plane_depths(planes, 0.95f, 1.12f);
    return mpi;
}

TEST_CASE("opaque single plane reproduces its texture exactly at the frontal pose") {
    std::mt19937_64 rng(31);
    MultiplaneImage mpi;
    mpi.color = testsupport::random_unit_image(8, rng);
    mpi.alphas.push_back(Tensor::full({8, 8, 1}, 1.0f));
    mpi.depths = {1.0f};
    RenderedImage out = composite_mpi(mpi, {0.0f, 0.0f});
    CHECK(out.pixels.data == mpi.color.data);
}

TEST_CASE("fully transparent planes composite to the black background") {
    std::mt19937_64 rng(32);
    MultiplaneImage mpi = random_mpi(8, 3, rng);
    for (Tensor& a : mpi.alphas) a = Tensor::zeros({8, 8, 1});
    RenderedImage out = composite_mpi(mpi, {12.0f, -8.0f});
    for (float v : out.pixels.data) CHECK(v == 0.0f);
}

TEST_CASE("two plane composite matches the per pixel over operator") {
    std::mt19937_64 rng(33);
    MultiplaneImage mpi = random_mpi(8, 2, rng);
    RenderedImage out = composite_mpi(mpi, {0.0f, 0.0f});  // frontal: no parallax shift
    for (int i = 0; i < 64; ++i) {
        float a0 = mpi.alphas[0][i], a1 = mpi.alphas[1][i];
        for (int k = 0; k < 3; ++k) {
            float c = mpi.color[i * 3 + k];
            float far_acc = c * a1;                         // far plane over black
            float want = c * a0 + far_acc * (1.0f - a0);    // near plane over that
            CHECK(std::abs(out.pixels[i * 3 + k] - want) <= 1e-6f);
        }
    }
}

TEST_CASE("composite output stays in the unit interval at oblique poses") {
    std::mt19937_64 rng(34);
    MultiplaneImage mpi = random_mpi(8, 4, rng);
    for (const CameraPose& p :
         {CameraPose{45.0f, -30.0f}, CameraPose{-60.0f, 60.0f}, CameraPose{90.0f, 90.0f}}) {
        RenderedImage out = composite_mpi(mpi, p);
        for (float v : out.pixels.data) {
            CHECK(v >= 0.0f);
            CHECK(v <= 1.0f);
        }
    }
}

TEST_CASE("composite gradients with respect to alphas match finite differences") {
    std::mt19937_64 rng(35);
    MultiplaneImage mpi = random_mpi(4, 2, rng);
    // keep alphas away from the [0, 1] bounds so the probe stays in range
    for (Tensor& a : mpi.alphas)
        for (float& v : a.data) v = 0.02f + 0.96f * v;
    CameraPose pose{15.0f, -10.0f};

    auto forward = [&]() {
        RenderedImage out = composite_mpi(mpi, pose);
        double s = 0.0;
        for (size_t i = 0; i < out.pixels.data.size(); ++i)
            s += double(out.pixels.data[i]) * double(i % 7 + 1);
        return s;
    };

    Tape t;
    Tape::VarId color = t.leaf(mpi.color, true);
    std::vector<Tape::VarId> alphas;
    for (const Tensor& a : mpi.alphas) alphas.push_back(t.leaf(a, true));
    Tape::VarId img = composite_mpi_var(t, color, alphas, mpi.depths, pose);
    Tensor wts = Tensor::zeros(t.value(img).shape);
    for (size_t i = 0; i < wts.data.size(); ++i) wts.data[i] = float(i % 7 + 1);
    Tape::VarId out = t.dot(img, t.leaf(wts));
    t.backward(out);

    for (int plane = 0; plane < 2; ++plane)
        for (int i : {0, 3, 7, 12, 15}) {
            double fd = central_diff(forward, &mpi.alphas[size_t(plane)].data[size_t(i)], 1e-2f);
            CHECK(rel_err(t.grad(alphas[size_t(plane)])[i], fd) < 2e-3);
        }
    for (int i : {0, 10, 20, 30, 47}) {
        double fd = central_diff(forward, &mpi.color.data[size_t(i)], 1e-2f);
        CHECK(rel_err(t.grad(color)[i], fd) < 2e-3);
    }
}

TEST_CASE("expected depth map lies between the near and far plane depths") {
    std::mt19937_64 rng(36);
    MultiplaneImage mpi = random_mpi(8, 4, rng);
    Tensor depth = composite_depth(mpi, {10.0f, 5.0f});
    for (float v : depth.data) {
        CHECK(v >= 0.95f);
        CHECK(v <= 1.12f);
    }
    for (Tensor& a : mpi.alphas) a = Tensor::zeros({8, 8, 1});
    Tensor bg = composite_depth(mpi, {0.0f, 0.0f});
    for (float v : bg.data) CHECK(v == 1.12f);
}

TEST_CASE("png writer emits valid headers and sweep files carry pose names") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "laekit_png_test";
    fs::remove_all(dir);
    fs::create_directories(dir);

    std::mt19937_64 rng(41);
    Tensor img = testsupport::random_unit_image(8, rng);
    fs::path file = dir / "one.png";
    write_png(file, img);
    std::ifstream in(file, std::ios::binary);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    REQUIRE(bytes.size() > 33);
    const unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    for (int i = 0; i < 8; ++i) CHECK(bytes[size_t(i)] == sig[i]);
    auto be32 = [&](size_t off) {
        return (unsigned(bytes[off]) << 24) | (unsigned(bytes[off + 1]) << 16) |
               (unsigned(bytes[off + 2]) << 8) | unsigned(bytes[off + 3]);
    };
    CHECK(be32(16) == 8);  // IHDR width
    CHECK(be32(20) == 8);  // IHDR height

    CHECK(sweep_file_name({-30.0f, 20.0f}) == "yaw-30_pitch+20.png");
    CHECK(sweep_file_name({0.0f, 0.0f}) == "yaw+00_pitch+00.png");

    std::vector<RenderedImage> renders;
    renders.push_back({img, {0.0f, 0.0f}});
    renders.push_back({img, {-30.0f, 20.0f}});
    std::vector<std::string> files = write_pose_sweep(dir / "sweep", renders);
    REQUIRE(files.size() == 2);
    CHECK(fs::exists(dir / "sweep" / files[0]));
    CHECK(fs::exists(dir / "sweep" / "index.json"));
    fs::remove_all(dir);
}
