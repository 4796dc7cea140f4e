#pragma once

#include <vector>

#include <Eigen/Dense>

#include "phylo/image.hpp"
#include "phylo/sensor_noise.hpp"

namespace phylo {

/// Per-image feature triple used by the clustering similarity.
struct FeatureBundle {
    Eigen::VectorXd descriptor;  // F: global content descriptor
    Eigen::VectorXd pixels;      // P: flattened intensities, length d^2
    Eigen::VectorXd noise;       // N: flattened enhanced residual, length d^2
};

/// Row-major flatten, length d^2.
Eigen::VectorXd pixel_vector(const Image& img);

/// Deterministic 256-dim content descriptor: an 8x8 grid of block means,
/// a 64-bin intensity histogram, and 8-bin gradient-orientation
/// histograms over a 4x4 cell grid.
Eigen::VectorXd image_descriptor(const Image& img);

enum class CosineConvention {
    Normalized,  // (1 - cos) / 2, range [0, 1]
    Raw,         // 1 - cos, range [0, 2]
};

/// Cosine distance under the chosen convention. Zero-norm input is
/// rejected.
double cosine_distance(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                       CosineConvention convention = CosineConvention::Normalized);

/// Variant that tolerates directionless vectors: two zero vectors are at
/// distance 0, a zero vector is maximally distant from anything else.
double safe_cosine_distance(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                            CosineConvention convention = CosineConvention::Normalized);

/// Normal-kernel density of `query` against a point set, evaluated on
/// Euclidean norms with scalar bandwidth b = mean pairwise distance.
double kde_density(const std::vector<Eigen::VectorXd>& points, const Eigen::VectorXd& query,
                   double bandwidth);

/// Mean pairwise Euclidean distance over unordered pairs, floored away
/// from zero so degenerate point sets stay finite.
double kde_bandwidth(const std::vector<Eigen::VectorXd>& points);

/// Per-point density estimates (the "local bandwidths" of the similarity
/// denominator), floored at 1e-12. Requires at least two points.
std::vector<double> kde_local_bandwidths(const std::vector<Eigen::VectorXd>& points);

/// One density triple per image.
struct LocalBandwidths {
    std::vector<double> f;
    std::vector<double> n;
    std::vector<double> p;
};

LocalBandwidths compute_local_bandwidths(const std::vector<FeatureBundle>& bundles);

/// Global-bandwidth ablation: each feature gets one constant scale, the
/// standard deviation of its pairwise cosine distances.
LocalBandwidths compute_global_bandwidths(const std::vector<FeatureBundle>& bundles,
                                          CosineConvention convention);

/// Builds the F/P/N triple for every image from its enhanced residual.
std::vector<FeatureBundle> make_feature_bundles(const std::vector<Image>& images,
                                                const std::vector<NoiseResidual>& enhanced);

/// Which per-node feature rows feed the graph network.
enum class NodeFeatureKind { Pixel, Prnu, Descriptor };

/// Feature matrix for the listed bundle indices: pixel rows are scaled to
/// [0,1], PRNU rows are the enhanced residuals, descriptor rows are unit
/// normalized.
Eigen::MatrixXd build_node_features(const std::vector<FeatureBundle>& bundles,
                                    const std::vector<int>& indices, NodeFeatureKind kind);

}  // namespace phylo
