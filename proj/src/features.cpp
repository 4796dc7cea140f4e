#include "phylo/features.hpp"

#include <algorithm>
#include <cmath>

#include "phylo/error.hpp"

namespace phylo {

namespace {

constexpr double kDensityFloor = 1e-12;
constexpr double kBandwidthFloor = 1e-12;

double standard_normal_pdf(double t) {
    return std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI);
}

}  // namespace

Eigen::VectorXd pixel_vector(const Image& img) {
    return Eigen::Map<const Eigen::VectorXd>(img.pixels.data(),
                                             static_cast<Eigen::Index>(img.pixels.size()));
}

Eigen::VectorXd image_descriptor(const Image& img) {
    const int n = img.side;
    Eigen::VectorXd desc(256);
    int idx = 0;

    // 8x8 block means.
    for (int by = 0; by < 8; ++by)
        for (int bx = 0; bx < 8; ++bx) {
            const int y0 = by * n / 8, y1 = (by + 1) * n / 8;
            const int x0 = bx * n / 8, x1 = (bx + 1) * n / 8;
            double acc = 0.0;
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x) acc += img.at(y, x);
            desc[idx++] = acc / ((y1 - y0) * (x1 - x0));
        }

    // 64-bin intensity histogram, normalized to a unit sum.
    Eigen::VectorXd hist = Eigen::VectorXd::Zero(64);
    for (double v : img.pixels) {
        const int bin = std::min(63, static_cast<int>(std::clamp(v, 0.0, 255.0) / 4.0));
        hist[bin] += 1.0;
    }
    hist /= static_cast<double>(img.pixels.size());
    desc.segment(idx, 64) = 255.0 * hist;  // comparable magnitude to block means
    idx += 64;

    // Gradient orientations, 8 bins per cell on a 4x4 grid, magnitude
    // weighted; central differences with clamped borders.
    for (int cy = 0; cy < 4; ++cy)
        for (int cx = 0; cx < 4; ++cx) {
            Eigen::VectorXd bins = Eigen::VectorXd::Zero(8);
            const int y0 = cy * n / 4, y1 = (cy + 1) * n / 4;
            const int x0 = cx * n / 4, x1 = (cx + 1) * n / 4;
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x) {
                    const double gx = img.at(y, std::min(x + 1, n - 1)) -
                                      img.at(y, std::max(x - 1, 0));
                    const double gy = img.at(std::min(y + 1, n - 1), x) -
                                      img.at(std::max(y - 1, 0), x);
                    const double mag = std::sqrt(gx * gx + gy * gy);
                    if (mag <= 0.0) continue;
                    double ang = std::atan2(gy, gx);  // [-pi, pi]
                    if (ang < 0) ang += 2.0 * M_PI;
                    const int bin = std::min(7, static_cast<int>(ang / (2.0 * M_PI) * 8.0));
                    bins[bin] += mag;
                }
            const double cell_count = (y1 - y0) * (x1 - x0);
            desc.segment(idx, 8) = bins / cell_count;
            idx += 8;
        }
    return desc;
}

double cosine_distance(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                       CosineConvention convention) {
    if (u.size() != v.size()) throw InvalidInputError("cosine_distance: length mismatch");
    const double nu = u.norm(), nv = v.norm();
    if (nu <= 0.0 || nv <= 0.0)
        throw InvalidInputError("cosine_distance: zero vector has no direction");
    if (u == v) return 0.0;  // exact on identical inputs
    const double cos_sim = std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
    return convention == CosineConvention::Normalized ? (1.0 - cos_sim) / 2.0 : 1.0 - cos_sim;
}

double kde_bandwidth(const std::vector<Eigen::VectorXd>& points) {
    const size_t n = points.size();
    double sum = 0.0;
    size_t pairs = 0;
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) {
            sum += (points[i] - points[j]).norm();
            ++pairs;
        }
    if (pairs == 0) return kBandwidthFloor;
    return std::max(sum / static_cast<double>(pairs), kBandwidthFloor);
}

double kde_density(const std::vector<Eigen::VectorXd>& points, const Eigen::VectorXd& query,
                   double bandwidth) {
    const double n = static_cast<double>(points.size());
    double acc = 0.0;
    for (const auto& p : points) acc += standard_normal_pdf((query - p).norm() / bandwidth);
    return acc / (n * bandwidth);
}

std::vector<double> kde_local_bandwidths(const std::vector<Eigen::VectorXd>& points) {
    if (points.size() < 2)
        throw InvalidInputError("kde_local_bandwidths needs at least two points");
    const double b = kde_bandwidth(points);
    std::vector<double> densities(points.size());
    for (size_t j = 0; j < points.size(); ++j)
        densities[j] = std::max(kde_density(points, points[j], b), kDensityFloor);
    return densities;
}

namespace {

// Directions only: the similarity numerators are cosine distances, so the
// density estimate has to live on the same unit sphere or its scale
// swamps the exponent.
Eigen::VectorXd unit_direction(const Eigen::VectorXd& v) {
    const double norm = v.norm();
    return norm > 0.0 ? Eigen::VectorXd(v / norm) : v;
}

}  // namespace

LocalBandwidths compute_local_bandwidths(const std::vector<FeatureBundle>& bundles) {
    std::vector<Eigen::VectorXd> f, n, p;
    f.reserve(bundles.size());
    n.reserve(bundles.size());
    p.reserve(bundles.size());
    for (const auto& b : bundles) {
        f.push_back(unit_direction(b.descriptor));
        n.push_back(unit_direction(b.noise));
        p.push_back(unit_direction(b.pixels));
    }
    return {kde_local_bandwidths(f), kde_local_bandwidths(n), kde_local_bandwidths(p)};
}

double safe_cosine_distance(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                            CosineConvention convention) {
    const double nu = u.norm(), nv = v.norm();
    if (nu <= 0.0 && nv <= 0.0) return 0.0;  // both directionless: identical
    if (nu <= 0.0 || nv <= 0.0) return convention == CosineConvention::Normalized ? 1.0 : 2.0;
    return cosine_distance(u, v, convention);
}

namespace {

double distance_stddev(const std::vector<const Eigen::VectorXd*>& vecs,
                       CosineConvention convention) {
    std::vector<double> d;
    for (size_t i = 0; i < vecs.size(); ++i)
        for (size_t j = i + 1; j < vecs.size(); ++j)
            d.push_back(safe_cosine_distance(*vecs[i], *vecs[j], convention));
    if (d.empty()) return kBandwidthFloor;
    double mean = 0.0;
    for (double x : d) mean += x;
    mean /= static_cast<double>(d.size());
    double var = 0.0;
    for (double x : d) var += (x - mean) * (x - mean);
    var /= static_cast<double>(d.size());
    return std::max(std::sqrt(var), kBandwidthFloor);
}

}  // namespace

LocalBandwidths compute_global_bandwidths(const std::vector<FeatureBundle>& bundles,
                                          CosineConvention convention) {
    std::vector<const Eigen::VectorXd*> f, n, p;
    for (const auto& b : bundles) {
        f.push_back(&b.descriptor);
        n.push_back(&b.noise);
        p.push_back(&b.pixels);
    }
    const double sf = distance_stddev(f, convention);
    const double sn = distance_stddev(n, convention);
    const double sp = distance_stddev(p, convention);
    LocalBandwidths bw;
    bw.f.assign(bundles.size(), sf);
    bw.n.assign(bundles.size(), sn);
    bw.p.assign(bundles.size(), sp);
    return bw;
}

std::vector<FeatureBundle> make_feature_bundles(const std::vector<Image>& images,
                                                const std::vector<NoiseResidual>& enhanced) {
    if (images.size() != enhanced.size())
        throw InvalidInputError("make_feature_bundles: image/residual count mismatch");
    std::vector<FeatureBundle> bundles(images.size());
    for (size_t i = 0; i < images.size(); ++i) {
        bundles[i].descriptor = image_descriptor(images[i]);
        bundles[i].pixels = pixel_vector(images[i]);
        bundles[i].noise = Eigen::Map<const Eigen::VectorXd>(
            enhanced[i].values.data(), static_cast<Eigen::Index>(enhanced[i].values.size()));
    }
    return bundles;
}

Eigen::MatrixXd build_node_features(const std::vector<FeatureBundle>& bundles,
                                    const std::vector<int>& indices, NodeFeatureKind kind) {
    if (indices.empty()) throw InvalidInputError("build_node_features: no indices");
    // Rows are normalized to unit L2; the graph layers train at a scale
    // that keeps full-batch steps stable.
    auto row_of = [&](int idx) -> Eigen::VectorXd {
        const FeatureBundle& b = bundles.at(idx);
        const Eigen::VectorXd* v = nullptr;
        switch (kind) {
            case NodeFeatureKind::Pixel: v = &b.pixels; break;
            case NodeFeatureKind::Prnu: v = &b.noise; break;
            case NodeFeatureKind::Descriptor: v = &b.descriptor; break;
        }
        if (!v) throw InvalidInputError("build_node_features: unknown feature kind");
        const double norm = v->norm();
        return norm > 0.0 ? Eigen::VectorXd(*v / norm) : *v;
    };
    const Eigen::VectorXd first = row_of(indices[0]);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(indices.size()), first.size());
    x.row(0) = first;
    for (size_t i = 1; i < indices.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = row_of(indices[i]);
    return x;
}

}  // namespace phylo
