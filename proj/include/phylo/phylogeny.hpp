#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phylo/chebnet.hpp"
#include "phylo/clustering.hpp"
#include "phylo/features.hpp"
#include "phylo/image.hpp"
#include "phylo/rng.hpp"
#include "phylo/sensor_noise.hpp"

namespace phylo {

/// Reconstructed phylogeny over a set of node ids (global image indices
/// in forest context). Ancestral edges are the transitive closure of the
/// immediate edges minus the immediate edges themselves.
struct PhyloTree {
    std::vector<int> nodes;
    int root = 0;
    std::map<int, int> parent;  // child -> parent, absent for root
    std::map<int, int> depth;   // node -> depth, root at 1
    std::vector<std::pair<int, int>> immediate_edges;
    std::vector<std::pair<int, int>> ancestral_edges;
    std::vector<int> ranked_roots;          // best-first root candidates
    std::vector<std::string> diagnostics;   // tie/correction notes
};

struct PhyloForest {
    ClusterAssignment assignment;
    std::vector<PhyloTree> trees;
};

/// Indices labeled 1; when none exist the minimum-label node (lowest
/// index on ties) is promoted to sole candidate.
std::vector<int> find_candidate_roots(const std::vector<int>& labels);

enum class RootAggregation { Sum, Max };

/// Aggregate distance from node c to all others (sum by default).
Eigen::VectorXd aggregate_distances(const Eigen::MatrixXd& distances, RootAggregation agg);

/// Keeps label 1 only on the candidate with the largest aggregate
/// distance (lowest index on ties); other candidates drop to depth 2.
/// Non-candidates are untouched.
std::vector<int> correct_depth_labels(const std::vector<int>& labels,
                                      const Eigen::MatrixXd& distances,
                                      RootAggregation agg = RootAggregation::Sum,
                                      std::vector<std::string>* diagnostics = nullptr);

/// Nodes ordered by (corrected label ascending, aggregate distance
/// descending, index ascending), truncated to topk. The first entry is
/// the corrected root.
std::vector<int> rank_roots(const std::vector<int>& labels, const Eigen::MatrixXd& distances,
                            int topk, RootAggregation agg = RootAggregation::Sum);

/// Parent of every non-root node: the nearest node (by the distance
/// matrix) among those at the closest shallower populated depth.
/// Requires exactly one depth-1 node.
std::map<int, int> infer_links(const std::vector<int>& corrected_labels,
                               const Eigen::MatrixXd& distances,
                               std::vector<std::string>* diagnostics = nullptr);

/// Builds the tree structure from a parent map over local indices;
/// node_ids translates local index -> node id. Depths are recomputed
/// from the tree and override inconsistent input labels (recorded in
/// diagnostics).
PhyloTree assemble_ipt(const std::vector<int>& node_ids, const std::vector<int>& corrected_labels,
                       const std::map<int, int>& parent_map);

/// Depth correction + link inference + assembly over one cluster, with
/// distances already computed (local indices).
PhyloTree reconstruct_tree_from_distances(const std::vector<int>& node_ids,
                                          const std::vector<int>& predicted_labels,
                                          const Eigen::MatrixXd& distances,
                                          RootAggregation agg = RootAggregation::Sum);

struct ReconstructOptions {
    ClusteringOptions clustering;
    NodeFeatureKind features = NodeFeatureKind::Pixel;
    AdjacencyNorm norm = AdjacencyNorm::Symmetric;
    RootAggregation aggregation = RootAggregation::Sum;
};

/// Full pipeline over a mixed image set: cluster, then per cluster embed
/// depths with the model and infer links from residual distances.
PhyloForest reconstruct_ipf(const std::vector<Image>& images, const ChebNetModel& model,
                            const ReconstructOptions& opts, Rng& rng);

/// Same pipeline with residuals/bundles precomputed by the caller.
PhyloForest reconstruct_ipf_from_bundles(const std::vector<FeatureBundle>& bundles,
                                         const std::vector<NoiseResidual>& enhanced,
                                         const ChebNetModel& model,
                                         const ReconstructOptions& opts, Rng& rng);

}  // namespace phylo
