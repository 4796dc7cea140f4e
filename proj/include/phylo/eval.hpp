#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phylo/clustering.hpp"
#include "phylo/manifest.hpp"
#include "phylo/phylogeny.hpp"
#include "phylo/version.hpp"

namespace phylo {

/// Fraction of trees whose true root appears within the first `rank`
/// entries of the prediction list; an empty list counts as a miss.
double root_identification_accuracy(const std::vector<std::vector<int>>& ranked_roots,
                                    const std::vector<int>& true_roots, int rank);

/// |truth_edges  intersect  recon_edges| / |truth_edges| over directed
/// edge sets including ancestral links. When `recon_ancestral` is false
/// only the reconstruction's immediate edges enter its side.
/// Requires identical node sets.
double ipt_reconstruction_accuracy(const PhyloTree& recon, const GroundTruthTree& truth,
                                   bool recon_ancestral = true);

struct ClusteringScore {
    double accuracy = 0.0;
    int k_hat = 0;
};

/// Proportion of images assigned to the right cluster under the optimal
/// one-to-one matching between predicted and true cluster labels.
ClusteringScore clustering_accuracy(const ClusterAssignment& assignment,
                                    const std::vector<int>& truth);

/// Greedy spanning arborescence over an asymmetric dissimilarity matrix:
/// directed edges ascending by weight, accepted when the head has no
/// parent yet and no cycle forms. Ties keep enumeration order (row-major).
PhyloTree oriented_kruskal(const Eigen::MatrixXd& dissimilarity);

/// Maximum-total assignment between the rows and columns of a count
/// matrix; returns the matched sum (used by clustering_accuracy, exposed
/// for verification).
double assignment_match_total(const Eigen::MatrixXd& counts);

/// Per-tree outcome within one evaluated forest.
struct TreeScore {
    std::string label;   // config tag, e.g. "5-node" or "A"
    int n_nodes = 0;
    int root_rank = 0;   // 1-based rank of the true root; 0 = absent
    double recon = 0.0;
};

struct ForestScore {
    ClusteringScore clustering;
    int k_true = 0;
    std::vector<TreeScore> trees;
};

/// Scores one reconstructed forest against ground truth with global node
/// ids. Truth trees are matched to predicted trees by maximal image
/// overlap (optimal assignment); unmatched truth trees score zero.
ForestScore score_forest(const PhyloForest& forest, const std::vector<GroundTruthTree>& truths,
                         const std::vector<int>& cluster_truth,
                         const std::vector<std::string>& truth_labels,
                         bool recon_ancestral = true);

struct PerConfigStats {
    std::string label;
    int trees = 0;
    double root_id_rank1 = 0.0;
    double root_id_rank2 = 0.0;
    double recon = 0.0;
};

struct EvalReport {
    std::map<int, double> root_id_accuracy;  // rank -> fraction
    double ipt_recon_accuracy = 0.0;
    double clustering_mean_k = 0.0;
    double clustering_sd_k = 0.0;
    double clustering_accuracy = 0.0;
    std::vector<PerConfigStats> per_config;
    int n_trees = 0;
    int n_forests = 0;
};

/// Unweighted per-tree aggregation across forests, ranks 1 and 2.
EvalReport aggregate_scores(const std::vector<ForestScore>& scores);

std::string report_to_json(const EvalReport& report, const Provenance* provenance = nullptr);

/// Aligned-column text table, one row per config plus an average row.
std::string format_report_table(const EvalReport& report);

}  // namespace phylo
