#include "phylo/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "phylo/error.hpp"

namespace phylo {

using nlohmann::json;

double root_identification_accuracy(const std::vector<std::vector<int>>& ranked_roots,
                                    const std::vector<int>& true_roots, int rank) {
    if (rank < 1) throw InvalidInputError("root_identification_accuracy: rank must be >= 1");
    if (ranked_roots.size() != true_roots.size())
        throw InvalidInputError("root_identification_accuracy: prediction/truth count mismatch");
    if (true_roots.empty()) return 0.0;
    int hits = 0;
    for (size_t i = 0; i < true_roots.size(); ++i) {
        const auto& ranked = ranked_roots[i];
        const size_t upto = std::min<size_t>(ranked.size(), static_cast<size_t>(rank));
        for (size_t r = 0; r < upto; ++r)
            if (ranked[r] == true_roots[i]) {
                ++hits;
                break;
            }
    }
    return static_cast<double>(hits) / static_cast<double>(true_roots.size());
}

namespace {

std::set<std::pair<int, int>> truth_edge_set(const GroundTruthTree& truth) {
    std::set<std::pair<int, int>> edges(truth.immediate_edges.begin(),
                                        truth.immediate_edges.end());
    for (const auto& e : ancestral_edges_of(truth)) edges.insert(e);
    return edges;
}

std::set<std::pair<int, int>> recon_edge_set(const PhyloTree& recon, bool recon_ancestral) {
    std::set<std::pair<int, int>> edges(recon.immediate_edges.begin(),
                                        recon.immediate_edges.end());
    if (recon_ancestral)
        for (const auto& e : recon.ancestral_edges) edges.insert(e);
    return edges;
}

}  // namespace

double ipt_reconstruction_accuracy(const PhyloTree& recon, const GroundTruthTree& truth,
                                   bool recon_ancestral) {
    std::set<int> truth_nodes;
    for (const auto& [node, d] : truth.depth_labels) truth_nodes.insert(node);
    const std::set<int> recon_nodes(recon.nodes.begin(), recon.nodes.end());
    if (truth_nodes != recon_nodes)
        throw InvalidInputError("ipt_reconstruction_accuracy: node sets differ");

    const auto truth_edges = truth_edge_set(truth);
    if (truth_edges.empty()) return 1.0;  // single-node tree
    const auto recon_edges = recon_edge_set(recon, recon_ancestral);
    int shared = 0;
    for (const auto& e : truth_edges)
        if (recon_edges.count(e)) ++shared;
    return static_cast<double>(shared) / static_cast<double>(truth_edges.size());
}

namespace {

/// Kuhn-Munkres with potentials on a square min-cost matrix; returns the
/// row assigned to each column.
std::vector<int> hungarian_square(const Eigen::MatrixXd& cost) {
    const int n = static_cast<int>(cost.rows());
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = -1;
            double delta = std::numeric_limits<double>::infinity();
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> col_to_row(n, -1);
    for (int j = 1; j <= n; ++j) col_to_row[j - 1] = p[j] - 1;
    return col_to_row;
}

/// Pads a count matrix square and returns the max-total matching as a
/// column -> row map restricted to real (unpadded) cells.
std::vector<int> match_columns(const Eigen::MatrixXd& counts) {
    const int n = static_cast<int>(std::max(counts.rows(), counts.cols()));
    std::vector<int> match(counts.cols(), -1);
    if (n == 0) return match;
    Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(n, n);
    cost.topLeftCorner(counts.rows(), counts.cols()) = -counts;
    const std::vector<int> col_to_row = hungarian_square(cost);
    for (int j = 0; j < counts.cols(); ++j) {
        const int i = col_to_row[j];
        if (i >= 0 && i < counts.rows()) match[j] = i;
    }
    return match;
}

}  // namespace

double assignment_match_total(const Eigen::MatrixXd& counts) {
    const std::vector<int> match = match_columns(counts);
    double total = 0.0;
    for (int j = 0; j < counts.cols(); ++j)
        if (match[j] >= 0) total += counts(match[j], j);
    return total;
}

ClusteringScore clustering_accuracy(const ClusterAssignment& assignment,
                                    const std::vector<int>& truth) {
    if (assignment.labels.size() != truth.size())
        throw InvalidInputError("clustering_accuracy: assignment/truth size mismatch");
    ClusteringScore score;
    score.k_hat = assignment.k;
    if (truth.empty()) return score;

    // Confusion counts: predicted label x true label.
    std::map<int, int> true_index;
    for (int t : truth) true_index.try_emplace(t, static_cast<int>(true_index.size()));
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(assignment.k, true_index.size());
    for (size_t i = 0; i < truth.size(); ++i)
        counts(assignment.labels[i] - 1, true_index[truth[i]]) += 1.0;

    score.accuracy = assignment_match_total(counts) / static_cast<double>(truth.size());
    return score;
}

PhyloTree oriented_kruskal(const Eigen::MatrixXd& dissimilarity) {
    const int m = static_cast<int>(dissimilarity.rows());
    if (dissimilarity.cols() != m) throw InvalidInputError("oriented_kruskal: matrix not square");
    if (m < 1) throw InvalidInputError("oriented_kruskal: empty matrix");
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            if (i != j && !std::isfinite(dissimilarity(i, j)))
                throw InvalidInputError("oriented_kruskal: non-finite off-diagonal entry");

    struct Edge {
        int u, v;
        double w;
    };
    std::vector<Edge> edges;
    edges.reserve(static_cast<size_t>(m) * (m - 1));
    for (int u = 0; u < m; ++u)
        for (int v = 0; v < m; ++v)
            if (u != v) edges.push_back({u, v, dissimilarity(u, v)});
    std::stable_sort(edges.begin(), edges.end(),
                     [](const Edge& a, const Edge& b) { return a.w < b.w; });

    std::vector<int> uf(m);
    std::iota(uf.begin(), uf.end(), 0);
    auto find = [&uf](int x) {
        while (uf[x] != x) x = uf[x] = uf[uf[x]];
        return x;
    };

    std::map<int, int> parent;
    int accepted = 0;
    for (const Edge& e : edges) {
        if (accepted == m - 1) break;
        if (parent.count(e.v)) continue;  // in-degree at most one
        const int ru = find(e.u), rv = find(e.v);
        if (ru == rv) continue;  // would close a cycle
        parent[e.v] = e.u;
        uf[ru] = rv;
        ++accepted;
    }
    if (accepted != m - 1) throw InternalError("oriented_kruskal: failed to span all nodes");

    std::vector<int> nodes(m);
    std::iota(nodes.begin(), nodes.end(), 0);
    std::vector<int> labels(m, 1);  // recomputed by assemble_ipt
    PhyloTree tree = assemble_ipt(nodes, labels, parent);
    tree.diagnostics.clear();  // label mismatch against the dummy labels is expected
    tree.ranked_roots = {tree.root};
    return tree;
}

ForestScore score_forest(const PhyloForest& forest, const std::vector<GroundTruthTree>& truths,
                         const std::vector<int>& cluster_truth,
                         const std::vector<std::string>& truth_labels, bool recon_ancestral) {
    if (truth_labels.size() != truths.size())
        throw InvalidInputError("score_forest: one label per truth tree required");

    ForestScore score;
    score.k_true = static_cast<int>(truths.size());
    score.clustering = clustering_accuracy(forest.assignment, cluster_truth);

    // Overlap counts between predicted trees and truth trees, matched by
    // the same optimal-assignment machinery as the clustering metric.
    const int pk = static_cast<int>(forest.trees.size());
    const int tk = static_cast<int>(truths.size());
    std::vector<std::set<int>> truth_nodes(tk);
    for (int t = 0; t < tk; ++t)
        for (const auto& [node, d] : truths[t].depth_labels) truth_nodes[t].insert(node);

    Eigen::MatrixXd overlap = Eigen::MatrixXd::Zero(pk, tk);
    for (int p = 0; p < pk; ++p)
        for (int n : forest.trees[p].nodes)
            for (int t = 0; t < tk; ++t)
                if (truth_nodes[t].count(n)) overlap(p, t) += 1.0;

    std::vector<int> match = match_columns(overlap);
    for (int t = 0; t < tk; ++t)
        if (match[t] >= 0 && overlap(match[t], t) <= 0.0) match[t] = -1;  // padding artifact

    for (int t = 0; t < tk; ++t) {
        TreeScore ts;
        ts.label = truth_labels[t];
        ts.n_nodes = static_cast<int>(truth_nodes[t].size());
        if (match[t] >= 0) {
            const PhyloTree& pred = forest.trees[match[t]];
            // Root rank within the matched tree's candidate list.
            const std::vector<int>& ranked =
                pred.ranked_roots.empty() ? std::vector<int>{pred.root} : pred.ranked_roots;
            for (size_t r = 0; r < ranked.size(); ++r)
                if (ranked[r] == truths[t].root) {
                    ts.root_rank = static_cast<int>(r) + 1;
                    break;
                }
            const auto tedges = truth_edge_set(truths[t]);
            if (!tedges.empty()) {
                const auto redges = recon_edge_set(pred, recon_ancestral);
                int shared = 0;
                for (const auto& e : tedges)
                    if (redges.count(e)) ++shared;
                ts.recon = static_cast<double>(shared) / static_cast<double>(tedges.size());
            } else {
                ts.recon = 1.0;
            }
        }
        score.trees.push_back(std::move(ts));
    }
    return score;
}

EvalReport aggregate_scores(const std::vector<ForestScore>& scores) {
    EvalReport report;
    report.n_forests = static_cast<int>(scores.size());

    std::map<std::string, std::vector<const TreeScore*>> by_label;
    std::vector<double> ks;
    double cluster_acc = 0.0;
    int total_trees = 0;
    for (const auto& fs : scores) {
        ks.push_back(fs.clustering.k_hat);
        cluster_acc += fs.clustering.accuracy;
        for (const auto& ts : fs.trees) {
            by_label[ts.label].push_back(&ts);
            ++total_trees;
        }
    }
    report.n_trees = total_trees;
    if (!scores.empty()) {
        report.clustering_accuracy = cluster_acc / scores.size();
        double mean = 0.0;
        for (double k : ks) mean += k;
        mean /= ks.size();
        double var = 0.0;
        for (double k : ks) var += (k - mean) * (k - mean);
        report.clustering_mean_k = mean;
        report.clustering_sd_k = ks.size() > 1 ? std::sqrt(var / (ks.size() - 1)) : 0.0;
    }

    double rank1 = 0.0, rank2 = 0.0, recon = 0.0;
    for (const auto& [label, trees] : by_label) {
        PerConfigStats pcs;
        pcs.label = label;
        pcs.trees = static_cast<int>(trees.size());
        for (const TreeScore* ts : trees) {
            pcs.root_id_rank1 += (ts->root_rank == 1) ? 1.0 : 0.0;
            pcs.root_id_rank2 += (ts->root_rank >= 1 && ts->root_rank <= 2) ? 1.0 : 0.0;
            pcs.recon += ts->recon;
        }
        pcs.root_id_rank1 /= pcs.trees;
        pcs.root_id_rank2 /= pcs.trees;
        pcs.recon /= pcs.trees;
        rank1 += pcs.root_id_rank1 * pcs.trees;
        rank2 += pcs.root_id_rank2 * pcs.trees;
        recon += pcs.recon * pcs.trees;
        report.per_config.push_back(std::move(pcs));
    }
    if (total_trees > 0) {
        report.root_id_accuracy[1] = rank1 / total_trees;
        report.root_id_accuracy[2] = rank2 / total_trees;
        report.ipt_recon_accuracy = recon / total_trees;
    }
    return report;
}

std::string report_to_json(const EvalReport& report, const Provenance* provenance) {
    json doc;
    if (provenance)
        doc["meta"] = {{"tool_version", provenance->tool_version},
                       {"seed", provenance->seed},
                       {"config_hash", provenance->config_hash}};
    json roots = json::object();
    for (const auto& [rank, frac] : report.root_id_accuracy)
        roots["rank" + std::to_string(rank)] = frac;
    doc["root_identification_accuracy"] = roots;
    doc["ipt_reconstruction_accuracy"] = report.ipt_recon_accuracy;
    doc["clustering"] = {{"mean_k", report.clustering_mean_k},
                         {"sd_k", report.clustering_sd_k},
                         {"accuracy", report.clustering_accuracy}};
    doc["n_trees"] = report.n_trees;
    doc["n_forests"] = report.n_forests;
    json per = json::array();
    for (const auto& pcs : report.per_config)
        per.push_back({{"config", pcs.label},
                       {"trees", pcs.trees},
                       {"root_id_rank1", pcs.root_id_rank1},
                       {"root_id_rank2", pcs.root_id_rank2},
                       {"reconstruction", pcs.recon}});
    doc["per_config"] = per;
    return doc.dump(2) + "\n";
}

std::string format_report_table(const EvalReport& report) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(2);
    out << std::left << std::setw(18) << "Configuration" << std::right << std::setw(8) << "Trees"
        << std::setw(14) << "Root@1 (%)" << std::setw(14) << "Root@2 (%)" << std::setw(14)
        << "Recon (%)" << "\n";
    out << std::string(68, '-') << "\n";
    for (const auto& pcs : report.per_config) {
        out << std::left << std::setw(18) << pcs.label << std::right << std::setw(8) << pcs.trees
            << std::setw(14) << 100.0 * pcs.root_id_rank1 << std::setw(14)
            << 100.0 * pcs.root_id_rank2 << std::setw(14) << 100.0 * pcs.recon << "\n";
    }
    out << std::string(68, '-') << "\n";
    const double r1 = report.root_id_accuracy.count(1) ? report.root_id_accuracy.at(1) : 0.0;
    const double r2 = report.root_id_accuracy.count(2) ? report.root_id_accuracy.at(2) : 0.0;
    out << std::left << std::setw(18) << "Average" << std::right << std::setw(8) << report.n_trees
        << std::setw(14) << 100.0 * r1 << std::setw(14) << 100.0 * r2 << std::setw(14)
        << 100.0 * report.ipt_recon_accuracy << "\n";
    if (report.n_forests > 0) {
        out << "\nClustering: mean k = " << report.clustering_mean_k
            << ", sd = " << report.clustering_sd_k
            << ", accuracy = " << 100.0 * report.clustering_accuracy << "% over "
            << report.n_forests << " forests\n";
    }
    return out.str();
}

}  // namespace phylo
