#pragma once

#include <string>

#include "phylo/chebnet.hpp"
#include "phylo/clustering.hpp"
#include "phylo/features.hpp"
#include "phylo/phylogeny.hpp"
#include "phylo/sensor_noise.hpp"
#include "phylo/transforms.hpp"

namespace phylo {

/// Every tunable of the pipeline. Values are the shipped defaults; a
/// config file overrides them, command-line flags override both.
struct RunConfig {
    int side = 96;
    TransformClass transform_class = TransformClass::Photometric;

    // clustering
    double eta = 0.7;
    CosineConvention cosine = CosineConvention::Normalized;
    SpectrumConvention spectrum = SpectrumConvention::Standard;
    BandwidthMode bandwidth = BandwidthMode::LocallyScaled;
    int kmeans_restarts = 50;
    int kmeans_max_iterations = 300;

    // sensor noise
    DenoiserKind denoiser = DenoiserKind::WaveletWiener;
    double sigma0 = 5.0;
    double enhance_alpha = 6.0;
    double sensor_amplitude = 0.02;

    // node embedding
    int cheb_degree = 3;  // 0 selects on the validation split from {3..9}
    int hidden = 16;
    int n_classes = 6;
    double learning_rate = 0.01;
    int epochs = 100;
    double dropout = 0.5;
    double weight_decay = 5e-4;
    int patience = 10;
    NodeFeatureKind features = NodeFeatureKind::Pixel;
    AdjacencyNorm adjacency = AdjacencyNorm::Symmetric;

    // link prediction + scoring
    RootAggregation aggregation = RootAggregation::Sum;
    bool scoring_ancestral = true;

    // synthesis sizes (pipeline)
    int train_sources = 40;
    int val_sources = 8;
    int test_sources = 18;
    int ipf_count = 30;
    double val_fraction = 0.15;
};

RunConfig default_config();

/// Parses a key = value file ('#' comments, optional quotes). Unknown
/// keys are rejected.
RunConfig load_config(const std::string& path);

/// Applies one key/value pair (the file parser and flag overrides share
/// this path).
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

/// Canonical serialized form, alphabetical keys, one per line.
std::string canonical_config(const RunConfig& cfg);

/// FNV-1a 64-bit hash of the canonical form, hex encoded.
std::string config_hash(const RunConfig& cfg);

ClusteringOptions clustering_options(const RunConfig& cfg);
TrainOptions train_options(const RunConfig& cfg);
ReconstructOptions reconstruct_options(const RunConfig& cfg);
DenoiseOptions denoise_options(const RunConfig& cfg);

}  // namespace phylo
