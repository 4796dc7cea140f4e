#include <doctest.h>

#include <algorithm>
#include <set>

#include "phylo/error.hpp"
#include "phylo/rng.hpp"
#include "phylo/transforms.hpp"

using namespace phylo;

namespace {

Image random_image(int side, Rng& rng) {
    Image img(side);
    for (double& v : img.pixels) v = rng.uniform(0.0, 255.0);
    return img;
}

}  // namespace

TEST_SUITE("transforms") {

TEST_CASE("identity specs reproduce the input bit-exactly") {
    Rng rng(11);
    const Image img = random_image(40, rng);

    TransformSpec brightness;  // a=1, b=0
    TransformSpec gamma;
    gamma.kind = TransformKind::Gamma;
    TransformSpec rotate;
    rotate.kind = TransformKind::Rotate;
    TransformSpec scale;
    scale.kind = TransformKind::Scale;
    TransformSpec translate;
    translate.kind = TransformKind::Translate;

    for (const auto& spec : {brightness, gamma, rotate, scale, translate}) {
        const Image out = apply_transform(img, spec);
        REQUIRE(out.pixels.size() == img.pixels.size());
        for (size_t i = 0; i < img.pixels.size(); ++i) CHECK(out.pixels[i] == img.pixels[i]);
    }
}

TEST_CASE("brightness clamps at 255") {
    Image img(33, 200.0);
    TransformSpec spec;
    spec.kind = TransformKind::Brightness;
    spec.a = 1.5;
    spec.b = 30.0;  // 1.5*200+30 = 330 -> clamped
    const Image out = apply_transform(img, spec);
    for (double v : out.pixels) CHECK(v == 255.0);
}

TEST_CASE("non-finite parameters are rejected") {
    Image img(32, 10.0);
    TransformSpec spec;
    spec.kind = TransformKind::Brightness;
    spec.a = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(apply_transform(img, spec), InvalidInputError);
    spec.a = 1.0;
    spec.b = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(apply_transform(img, spec), InvalidInputError);
}

TEST_CASE("sampled specs stay on the documented kinds and ranges") {
    Rng rng(5);
    std::set<TransformKind> photometric, geometric;
    for (int i = 0; i < 300; ++i) {
        const TransformSpec p = sample_transform_spec(rng, TransformClass::Photometric);
        photometric.insert(p.kind);
        switch (p.kind) {
            case TransformKind::Brightness:
                CHECK(p.a >= 0.9);
                CHECK(p.a <= 1.5);
                CHECK(p.b >= -30.0);
                CHECK(p.b <= 30.0);
                break;
            case TransformKind::MedianFilter:
                CHECK(p.win_h >= 2);
                CHECK(p.win_h <= 6);
                CHECK(p.win_w >= 2);
                CHECK(p.win_w <= 6);
                break;
            case TransformKind::GaussianSmooth:
                CHECK(p.sigma >= 1.0);
                CHECK(p.sigma <= 3.0);
                break;
            case TransformKind::Gamma:
                CHECK(p.gamma >= 0.5);
                CHECK(p.gamma <= 1.5);
                break;
            default: FAIL("geometric kind sampled for photometric class");
        }
        const TransformSpec g = sample_transform_spec(rng, TransformClass::Geometric);
        geometric.insert(g.kind);
        switch (g.kind) {
            case TransformKind::Translate:
                CHECK(g.tx >= 5);
                CHECK(g.tx <= 20);
                CHECK(g.ty >= 5);
                CHECK(g.ty <= 20);
                break;
            case TransformKind::Scale:
                CHECK(g.scale_pct >= 90.0);
                CHECK(g.scale_pct <= 110.0);
                break;
            case TransformKind::Rotate:
                CHECK(g.theta_deg >= -5.0);
                CHECK(g.theta_deg <= 5.0);
                break;
            default: FAIL("photometric kind sampled for geometric class");
        }
    }
    CHECK(photometric == std::set<TransformKind>{TransformKind::Brightness,
                                                 TransformKind::MedianFilter,
                                                 TransformKind::GaussianSmooth,
                                                 TransformKind::Gamma});
    CHECK(geometric == std::set<TransformKind>{TransformKind::Translate, TransformKind::Scale,
                                               TransformKind::Rotate});
}

TEST_CASE("sampling is deterministic under a fixed seed") {
    Rng a(42), b(42);
    for (int i = 0; i < 20; ++i) {
        const TransformSpec sa = sample_transform_spec(a, TransformClass::Photometric);
        const TransformSpec sb = sample_transform_spec(b, TransformClass::Photometric);
        CHECK(sa.kind == sb.kind);
        CHECK(sa.a == sb.a);
        CHECK(sa.gamma == sb.gamma);
        CHECK(sa.sigma == sb.sigma);
        CHECK(sa.win_h == sb.win_h);
    }
}

TEST_CASE("outputs stay inside [0,255] under fuzzing") {
    Rng rng(99);
    for (int trial = 0; trial < 1000; ++trial) {
        const Image img = random_image(32, rng);
        const TransformClass cls =
            trial % 2 == 0 ? TransformClass::Photometric : TransformClass::Geometric;
        const Image out = apply_transform(img, sample_transform_spec(rng, cls));
        REQUIRE(out.side == img.side);
        for (double v : out.pixels) {
            REQUIRE(v >= 0.0);
            REQUIRE(v <= 255.0);
        }
    }
}

TEST_CASE("five-node configs are valid and distinct") {
    std::set<std::vector<std::pair<int, int>>> shapes;
    for (char key : {'A', 'B', 'C', 'D', 'E', 'F'}) {
        const TreeConfig cfg = five_node_config(key);
        CHECK(cfg.n_nodes == 5);
        CHECK(tree_config_root(cfg) == 0);
        shapes.insert(cfg.immediate_edges);
    }
    CHECK(shapes.size() == 6);
    CHECK_THROWS_AS(five_node_config('Z'), InvalidInputError);

    // D is the max-breadth star: all four children hang off the root.
    const TreeConfig star = five_node_config('D');
    for (const auto& [p, c] : star.immediate_edges) CHECK(p == 0);

    // B is the max-depth chain.
    const TreeConfig chain = five_node_config('B');
    for (int i = 0; i < 4; ++i)
        CHECK(chain.immediate_edges[i] == std::make_pair(i, i + 1));
}

TEST_CASE("larger configs stay within six depth labels") {
    for (const TreeConfig& cfg : {ten_node_config(0), ten_node_config(1), fifteen_node_config(0),
                                  fifteen_node_config(1)}) {
        GroundTruthTree t;
        t.set_id = "cfg";
        t.root = tree_config_root(cfg);
        t.immediate_edges = cfg.immediate_edges;
        std::vector<int> nodes(cfg.n_nodes);
        for (int i = 0; i < cfg.n_nodes; ++i) nodes[i] = i;
        const auto depths = derive_depth_labels(t, nodes);
        int max_depth = 0;
        for (const auto& [node, d] : depths) max_depth = std::max(max_depth, d);
        CHECK(max_depth <= 6);
    }
}

TEST_CASE("labeled tree enumeration matches Cayley counts") {
    CHECK(enumerate_labeled_trees(3).size() == 3);
    CHECK(enumerate_labeled_trees(4).size() == 16);
    const auto trees = enumerate_labeled_trees(5);
    CHECK(trees.size() == 125);

    std::set<std::vector<std::pair<int, int>>> distinct;
    for (const TreeConfig& cfg : trees) {
        CHECK(tree_config_root(cfg) == 0);
        distinct.insert(cfg.immediate_edges);
    }
    CHECK(distinct.size() == 125);
}

TEST_CASE("synthesize_ipt shapes and determinism") {
    Rng texture_rng(7);
    const Image root = make_texture(32, texture_rng);

    SUBCASE("single node") {
        Rng rng(1);
        const SynthTree t = synthesize_ipt(root, TreeConfig{1, {}}, TransformClass::Photometric,
                                           rng);
        CHECK(t.images.size() == 1);
        CHECK(t.truth.immediate_edges.empty());
        CHECK(t.truth.depth_labels.at(0) == 1);
        Image expected = root;
        quantize_to_8bit(expected);
        CHECK(t.images[0] == expected);
    }

    SUBCASE("chain depths") {
        Rng rng(2);
        const SynthTree t =
            synthesize_ipt(root, five_node_config('B'), TransformClass::Photometric, rng);
        CHECK(t.images.size() == 5);
        CHECK(t.truth.immediate_edges.size() == 4);
        for (int i = 0; i < 5; ++i) CHECK(t.truth.depth_labels.at(i) == i + 1);
    }

    SUBCASE("same seed reproduces the image set") {
        Rng r1(3), r2(3);
        const SynthTree a =
            synthesize_ipt(root, five_node_config('C'), TransformClass::Geometric, r1);
        const SynthTree b =
            synthesize_ipt(root, five_node_config('C'), TransformClass::Geometric, r2);
        CHECK(a.images == b.images);
    }
}

TEST_CASE("synthesize_ipf") {
    Rng texture_rng(13);
    std::vector<Image> sources;
    for (int i = 0; i < 3; ++i) sources.push_back(make_texture(32, texture_rng));

    SUBCASE("three sources of 5/10/15 nodes give 30 images") {
        Rng rng(4);
        const SynthForest f = synthesize_ipf(sources, ipf_configs(0), TransformClass::Photometric,
                                             rng, {101, 202, 303});
        CHECK(f.images.size() == 30);
        CHECK(f.truths.size() == 3);
        CHECK(std::count(f.cluster_truth.begin(), f.cluster_truth.end(), 0) == 5);
        CHECK(std::count(f.cluster_truth.begin(), f.cluster_truth.end(), 1) == 10);
        CHECK(std::count(f.cluster_truth.begin(), f.cluster_truth.end(), 2) == 15);
    }

    SUBCASE("fewer than two sources is an error") {
        Rng rng(5);
        CHECK_THROWS_AS(synthesize_ipf({sources[0]}, {five_node_config('A')},
                                       TransformClass::Photometric, rng, {1}),
                        InvalidInputError);
    }

    SUBCASE("identical sources are rejected") {
        Rng rng(6);
        CHECK_THROWS_AS(synthesize_ipf({sources[0], sources[0]},
                                       {five_node_config('A'), five_node_config('B')},
                                       TransformClass::Photometric, rng, {1, 2}),
                        InvalidInputError);
    }

    SUBCASE("same seed twice is byte-identical") {
        Rng r1(8), r2(8);
        const SynthForest a = synthesize_ipf(sources, ipf_configs(1), TransformClass::Photometric,
                                             r1, {11, 22, 33});
        const SynthForest b = synthesize_ipf(sources, ipf_configs(1), TransformClass::Photometric,
                                             r2, {11, 22, 33});
        CHECK(a.images == b.images);
        CHECK(a.cluster_truth == b.cluster_truth);
    }
}

TEST_CASE("sensor pattern embedding is keyed and bounded") {
    Rng rng(21);
    const Image img = make_texture(32, rng);
    const Image a = embed_sensor_pattern(img, 42, 0.02);
    const Image b = embed_sensor_pattern(img, 42, 0.02);
    const Image c = embed_sensor_pattern(img, 43, 0.02);
    CHECK(a == b);
    CHECK(a.pixels != c.pixels);
    for (size_t i = 0; i < img.pixels.size(); ++i) {
        CHECK(a.pixels[i] >= img.pixels[i] * 0.98 - 1e-9);
        CHECK(a.pixels[i] <= std::min(img.pixels[i] * 1.02 + 1e-9, 255.0));
    }
}

TEST_CASE("textures are deterministic and in range") {
    Rng r1(77), r2(77);
    const Image a = make_texture(48, r1);
    const Image b = make_texture(48, r2);
    CHECK(a == b);
    for (double v : a.pixels) {
        CHECK(v >= 0.0);
        CHECK(v <= 255.0);
        CHECK(v == std::floor(v));  // quantized
    }
}

}  // TEST_SUITE
