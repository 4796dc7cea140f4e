#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "phylo/manifest.hpp"
#include "phylo/rng.hpp"
#include "phylo/version.hpp"

namespace phylo {

/// Two-layer Chebyshev graph convolution classifier over depth labels.
/// w1[k]: in_dim x hidden, w2[k]: hidden x n_classes, k < degree.
struct ChebNetModel {
    int degree = 3;
    int in_dim = 0;
    int hidden = 16;
    int n_classes = 6;
    std::vector<Eigen::MatrixXd> w1;
    std::vector<Eigen::MatrixXd> w2;
};

ChebNetModel init_chebnet(int in_dim, int hidden, int n_classes, int degree, Rng& rng);

/// One near-duplicate set: features, adjacency, and (for training) the
/// depth label of every node.
struct GraphSet {
    Eigen::MatrixXd features;   // M x D
    Eigen::MatrixXd adjacency;  // M x M, nonnegative, zero diagonal
    std::vector<int> labels;    // depth labels in [1, n_classes]; may be empty
};

/// Block-diagonal batch: each set is one independent block.
using GraphBatch = std::vector<GraphSet>;

enum class AdjacencyNorm { Symmetric, RandomWalk };

/// Ground-truth adjacency for training. `nodes` fixes the row order.
Eigen::MatrixXd build_train_adjacency(const GroundTruthTree& truth, const std::vector<int>& nodes,
                                      bool symmetric = true);

/// Test-time adjacency: link where the pairwise distance is strictly
/// below the mean off-diagonal distance of the set.
Eigen::MatrixXd build_test_adjacency(const Eigen::MatrixXd& distances);

/// [T_0, ..., T_{K-1}] evaluated at the rescaled Laplacian 2L/lambda_max - I
/// with lambda_max fixed at 2. Zero-degree nodes receive a self-loop.
std::vector<Eigen::MatrixXd> chebyshev_filterbank(const Eigen::MatrixXd& adjacency, int degree,
                                                  AdjacencyNorm norm = AdjacencyNorm::Symmetric);

/// Stacked unnormalized class scores, one row per node across all sets.
/// With dropout active, `rng` drives the hidden-layer masks.
Eigen::MatrixXd forward(const ChebNetModel& model, const GraphBatch& batch,
                        bool dropout_active = false, Rng* rng = nullptr,
                        double dropout_rate = 0.5,
                        AdjacencyNorm norm = AdjacencyNorm::Symmetric);

struct ModelGradients {
    std::vector<Eigen::MatrixXd> w1;
    std::vector<Eigen::MatrixXd> w2;
};

/// Softmax cross-entropy over labeled nodes plus (wd/2)*sum(|W|^2).
/// Deterministic: no dropout on this path.
double batch_loss(const ChebNetModel& model, const GraphBatch& batch, double weight_decay,
                  AdjacencyNorm norm = AdjacencyNorm::Symmetric);

std::pair<double, ModelGradients> loss_and_gradients(
    const ChebNetModel& model, const GraphBatch& batch, double weight_decay,
    AdjacencyNorm norm = AdjacencyNorm::Symmetric);

struct TrainOptions {
    double learning_rate = 0.01;
    int epochs = 100;
    double dropout = 0.5;
    double weight_decay = 5e-4;
    int patience = 10;
    AdjacencyNorm norm = AdjacencyNorm::Symmetric;
};

struct TrainHistory {
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    std::vector<double> train_accuracy;
    std::vector<double> val_accuracy;
    int best_epoch = -1;
};

/// Full-batch Adam with early stopping on validation loss; the model is
/// left at the best-validation weights.
TrainHistory train(ChebNetModel& model, const GraphBatch& train_batch,
                   const GraphBatch& val_batch, const TrainOptions& opts, Rng& rng);

/// Argmax depth labels (1-based) for one set.
std::vector<int> predict_depths(const ChebNetModel& model, const Eigen::MatrixXd& features,
                                const Eigen::MatrixXd& adjacency,
                                AdjacencyNorm norm = AdjacencyNorm::Symmetric);

/// Fraction of labeled nodes predicted exactly.
double depth_accuracy(const ChebNetModel& model, const GraphBatch& batch,
                      AdjacencyNorm norm = AdjacencyNorm::Symmetric);

struct DegreeSelection {
    int degree = 3;
    ChebNetModel model;
    TrainHistory history;
};

/// Trains one model per candidate degree and keeps the best validation
/// loss (ties go to the smaller degree).
DegreeSelection select_chebyshev_degree(int in_dim, int hidden, int n_classes,
                                        const std::vector<int>& degrees,
                                        const GraphBatch& train_batch, const GraphBatch& val_batch,
                                        const TrainOptions& opts, Rng& rng);

/// Versioned JSON with decimal weights; round-trips to within 1e-9.
void save_model(const ChebNetModel& model, const std::string& path,
                const Provenance* provenance = nullptr);
ChebNetModel load_model(const std::string& path);

}  // namespace phylo
