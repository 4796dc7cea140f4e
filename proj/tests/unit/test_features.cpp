#include <doctest.h>

#include <cmath>

#include "phylo/error.hpp"
#include "phylo/features.hpp"
#include "phylo/rng.hpp"
#include "phylo/transforms.hpp"

using namespace phylo;

TEST_SUITE("features") {

TEST_CASE("pixel vector flattens row-major") {
    Image img(2);
    img.at(0, 0) = 1;
    img.at(0, 1) = 2;
    img.at(1, 0) = 3;
    img.at(1, 1) = 4;
    const Eigen::VectorXd v = pixel_vector(img);
    REQUIRE(v.size() == 4);
    CHECK(v(0) == 1);
    CHECK(v(1) == 2);
    CHECK(v(2) == 3);
    CHECK(v(3) == 4);

    const Image constant(32, 9.0);
    const Eigen::VectorXd c = pixel_vector(constant);
    CHECK(c.size() == 32 * 32);
    CHECK(c.minCoeff() == 9.0);
    CHECK(c.maxCoeff() == 9.0);
}

TEST_CASE("descriptor shape and determinism") {
    Rng rng(3);
    const Image img = make_texture(64, rng);
    const Eigen::VectorXd a = image_descriptor(img);
    const Eigen::VectorXd b = image_descriptor(img);
    CHECK(a.size() == 256);
    CHECK(a == b);
}

TEST_CASE("constant image concentrates the histogram and kills gradients") {
    const Image img(64, 100.0);
    const Eigen::VectorXd d = image_descriptor(img);
    // Block means are all 100.
    for (int i = 0; i < 64; ++i) CHECK(d(i) == doctest::Approx(100.0));
    // Histogram: all mass in bin floor(100/4) = 25.
    int nonzero = 0;
    for (int i = 64; i < 128; ++i)
        if (d(i) != 0.0) ++nonzero;
    CHECK(nonzero == 1);
    CHECK(d(64 + 25) == doctest::Approx(255.0));
    // No gradients anywhere.
    for (int i = 128; i < 256; ++i) CHECK(d(i) == 0.0);
}

TEST_CASE("brightness-shifted copies stay closer than unrelated textures") {
    Rng rng(17);
    int closer = 0;
    const int pairs = 100;
    for (int t = 0; t < pairs; ++t) {
        const Image a = make_texture(48, rng);
        const Image other = make_texture(48, rng);
        TransformSpec shift;
        shift.kind = TransformKind::Brightness;
        shift.a = rng.uniform(0.9, 1.5);
        shift.b = rng.uniform(-30.0, 30.0);
        const Image shifted = apply_transform(a, shift);

        const Eigen::VectorXd da = image_descriptor(a);
        const double d_copy = cosine_distance(da, image_descriptor(shifted));
        const double d_other = cosine_distance(da, image_descriptor(other));
        if (d_copy < d_other) ++closer;
    }
    CHECK(closer >= 90);
}

TEST_CASE("cosine distance endpoints") {
    Eigen::VectorXd u(3), v(3), w(3);
    u << 1, 2, 3;
    v = -u;
    w << 0, 0, 0;
    CHECK(cosine_distance(u, u) == 0.0);
    CHECK(cosine_distance(u, v) == 1.0);
    CHECK(cosine_distance(u, v, CosineConvention::Raw) == 2.0);

    Eigen::VectorXd e1(2), e2(2);
    e1 << 1, 0;
    e2 << 0, 1;
    CHECK(cosine_distance(e1, e2) == doctest::Approx(0.5));

    CHECK_THROWS_AS(cosine_distance(u, w), InvalidInputError);
    CHECK_THROWS_AS(cosine_distance(w, u), InvalidInputError);
}

TEST_CASE("cosine distance range and symmetry on random vectors") {
    Rng rng(23);
    for (int t = 0; t < 200; ++t) {
        Eigen::VectorXd u(8), v(8);
        for (int i = 0; i < 8; ++i) {
            u(i) = rng.uniform(-5.0, 5.0);
            v(i) = rng.uniform(-5.0, 5.0);
        }
        if (u.norm() == 0.0 || v.norm() == 0.0) continue;
        const double d = cosine_distance(u, v);
        CHECK(d >= 0.0);
        CHECK(d <= 1.0);
        CHECK(d == cosine_distance(v, u));
    }
}

TEST_CASE("safe cosine handles zero vectors") {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(4);
    Eigen::VectorXd u(4);
    u << 1, 0, 2, 0;
    CHECK(safe_cosine_distance(z, z) == 0.0);
    CHECK(safe_cosine_distance(z, u) == 1.0);
    CHECK(safe_cosine_distance(u, z, CosineConvention::Raw) == 2.0);
    CHECK(safe_cosine_distance(u, u) == 0.0);
}

TEST_CASE("kde matches the hand-evaluated two-point case") {
    // Points {0, 1}: b = 1, p(0) = (phi(0) + phi(1)) / 2.
    std::vector<Eigen::VectorXd> pts(2, Eigen::VectorXd(1));
    pts[0](0) = 0.0;
    pts[1](0) = 1.0;
    const auto densities = kde_local_bandwidths(pts);
    REQUIRE(densities.size() == 2);
    CHECK(densities[0] == doctest::Approx(0.32045650246028805).epsilon(1e-9));
    CHECK(densities[0] == densities[1]);  // symmetric configuration
}

TEST_CASE("kde positivity and identical points") {
    std::vector<Eigen::VectorXd> pts(2, Eigen::VectorXd(2));
    pts[0] << 3.0, 4.0;
    pts[1] << 3.0, 4.0;
    const auto densities = kde_local_bandwidths(pts);
    CHECK(densities[0] == densities[1]);
    CHECK(densities[0] > 0.0);

    CHECK_THROWS_AS(kde_local_bandwidths({pts[0]}), InvalidInputError);
}

TEST_CASE("kde integrates to one in 1-D") {
    std::vector<Eigen::VectorXd> pts(3, Eigen::VectorXd(1));
    pts[0](0) = 0.0;
    pts[1](0) = 0.7;
    pts[2](0) = 2.3;
    const double b = kde_bandwidth(pts);

    // Trapezoid quadrature over a wide interval.
    const double lo = -20.0, hi = 22.0, step = 0.01;
    double integral = 0.0;
    Eigen::VectorXd q(1);
    double prev = 0.0;
    bool first = true;
    for (double x = lo; x <= hi; x += step) {
        q(0) = x;
        const double cur = kde_density(pts, q, b);
        if (!first) integral += 0.5 * (prev + cur) * step;
        prev = cur;
        first = false;
    }
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("node feature matrices") {
    Rng rng(31);
    std::vector<Image> images{make_texture(32, rng), make_texture(32, rng)};
    std::vector<NoiseResidual> enhanced;
    for (const auto& img : images)
        enhanced.push_back(enhance_residual(extract_residual(img), 6.0));
    const auto bundles = make_feature_bundles(images, enhanced);

    const Eigen::MatrixXd px = build_node_features(bundles, {0, 1}, NodeFeatureKind::Pixel);
    CHECK(px.rows() == 2);
    CHECK(px.cols() == 32 * 32);
    CHECK(px.maxCoeff() <= 1.0);
    CHECK(px.minCoeff() >= 0.0);

    const Eigen::MatrixXd pr = build_node_features(bundles, {0, 1}, NodeFeatureKind::Prnu);
    CHECK(pr.cols() == 32 * 32);

    const Eigen::MatrixXd de = build_node_features(bundles, {1}, NodeFeatureKind::Descriptor);
    CHECK(de.rows() == 1);
    CHECK(de.cols() == 256);
    CHECK(de.row(0).norm() == doctest::Approx(1.0));
}

}  // TEST_SUITE
