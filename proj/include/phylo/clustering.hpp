#pragma once

#include <vector>

#include <Eigen/Dense>

#include "phylo/features.hpp"
#include "phylo/image.hpp"
#include "phylo/rng.hpp"
#include "phylo/sensor_noise.hpp"

namespace phylo {

/// 1-based cluster ids, every id in [1, k] occupied.
struct ClusterAssignment {
    std::vector<int> labels;
    int k = 0;
};

/// S(i,j) = exp -( D_F^2/(pF_i pF_j) + D_N^2/(pN_i pN_j) + D_P^2/(pP_i pP_j) ),
/// cosine distances scaled by the per-image bandwidth products.
Eigen::MatrixXd build_similarity(const std::vector<FeatureBundle>& bundles,
                                 const LocalBandwidths& bw,
                                 CosineConvention convention = CosineConvention::Normalized);

/// Row rule: S_B(i,j) = 1 iff S(i,j) > median(S(i,:)); exact-duplicate
/// pairs (S within 1e-12 of 1) stay connected since a median threshold
/// cannot separate ties at the maximum. Result is symmetrized by max.
Eigen::MatrixXd binarize_similarity(const Eigen::MatrixXd& S);

/// Deg^(-1/2) S_B Deg^(-1/2); zero-degree rows receive a self-loop first
/// so the degree matrix stays invertible.
Eigen::MatrixXd normalized_laplacian(const Eigen::MatrixXd& S_B);

enum class SpectrumConvention {
    Standard,  // eigenvalues of I - Deg^(-1/2) S_B Deg^(-1/2), keep < eta
    Paper,     // eigenvalues of Deg^(-1/2) S_B Deg^(-1/2) themselves, keep < eta
};

struct SpectralEmbedding {
    Eigen::MatrixXd embedding;  // Q x k, rows length-normalized
    Eigen::MatrixXd vectors;    // Q x k raw eigenvectors of `laplacian`
    Eigen::VectorXd values;     // the k retained eigenvalues, ascending
    Eigen::MatrixXd laplacian;  // matrix that was eigendecomposed
    int k = 0;
};

/// Eigendecomposition under the chosen convention; retains eigenpairs
/// with eigenvalue < eta (at least one).
SpectralEmbedding spectral_embed(const Eigen::MatrixXd& normalized_laplacian, double eta,
                                 SpectrumConvention convention = SpectrumConvention::Standard);

struct KMeansOptions {
    int restarts = 50;
    int max_iterations = 300;
};

/// Lloyd's algorithm with k-means++ seeding; best inertia over restarts.
/// Labels are renumbered 1..k by first appearance.
ClusterAssignment kmeans_rows(const Eigen::MatrixXd& rows, int k, Rng& rng,
                              const KMeansOptions& opts = {});

enum class BandwidthMode { LocallyScaled, Global };

struct ClusteringOptions {
    double eta = 0.7;
    double enhance_alpha = 6.0;
    DenoiseOptions denoise;
    CosineConvention cosine = CosineConvention::Normalized;
    SpectrumConvention spectrum = SpectrumConvention::Standard;
    BandwidthMode bandwidth = BandwidthMode::LocallyScaled;
    KMeansOptions kmeans;
};

/// Full grouping pass over a set of images.
ClusterAssignment cluster_images(const std::vector<Image>& images, const ClusteringOptions& opts,
                                 Rng& rng);

/// Same pass when residuals are already available (avoids re-extraction).
ClusterAssignment cluster_bundles(const std::vector<FeatureBundle>& bundles,
                                  const ClusteringOptions& opts, Rng& rng);

}  // namespace phylo
