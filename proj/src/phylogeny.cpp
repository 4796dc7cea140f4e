#include "phylo/phylogeny.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include "phylo/error.hpp"

namespace phylo {

std::vector<int> find_candidate_roots(const std::vector<int>& labels) {
    std::vector<int> candidates;
    for (size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == 1) candidates.push_back(static_cast<int>(i));
    if (candidates.empty() && !labels.empty()) {
        // No node claimed depth 1: promote the shallowest prediction.
        int best = 0;
        for (size_t i = 1; i < labels.size(); ++i)
            if (labels[i] < labels[best]) best = static_cast<int>(i);
        candidates.push_back(best);
    }
    return candidates;
}

Eigen::VectorXd aggregate_distances(const Eigen::MatrixXd& distances, RootAggregation agg) {
    const int m = static_cast<int>(distances.rows());
    Eigen::VectorXd d = Eigen::VectorXd::Zero(m);
    for (int c = 0; c < m; ++c) {
        if (agg == RootAggregation::Sum) {
            d(c) = distances.row(c).sum() - distances(c, c);
        } else {
            double mx = 0.0;
            for (int z = 0; z < m; ++z)
                if (z != c) mx = std::max(mx, distances(c, z));
            d(c) = mx;
        }
    }
    return d;
}

std::vector<int> correct_depth_labels(const std::vector<int>& labels,
                                      const Eigen::MatrixXd& distances, RootAggregation agg,
                                      std::vector<std::string>* diagnostics) {
    if (labels.empty()) throw InvalidInputError("correct_depth_labels: no labels");
    if (distances.rows() != static_cast<Eigen::Index>(labels.size()))
        throw InvalidInputError("correct_depth_labels: label/distance size mismatch");

    const std::vector<int> candidates = find_candidate_roots(labels);
    std::vector<int> corrected = labels;
    if (candidates.size() == 1) {
        corrected[candidates[0]] = 1;  // covers the promotion case
        return corrected;
    }

    const Eigen::VectorXd d = aggregate_distances(distances, agg);
    int winner = candidates[0];
    for (int c : candidates) {
        if (d(c) > d(winner)) winner = c;
    }
    for (int c : candidates) {
        if (c != winner && d(c) == d(winner) && diagnostics)
            diagnostics->push_back("root tie between nodes " + std::to_string(winner) + " and " +
                                   std::to_string(c) + "; kept lower index");
        corrected[c] = (c == winner) ? 1 : 2;
    }
    return corrected;
}

std::vector<int> rank_roots(const std::vector<int>& labels, const Eigen::MatrixXd& distances,
                            int topk, RootAggregation agg) {
    if (topk < 1) throw InvalidInputError("rank_roots: topk must be >= 1");
    const std::vector<int> corrected = correct_depth_labels(labels, distances, agg);
    const Eigen::VectorXd d = aggregate_distances(distances, agg);

    std::vector<int> order(labels.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (corrected[a] != corrected[b]) return corrected[a] < corrected[b];
        if (d(a) != d(b)) return d(a) > d(b);
        return a < b;
    });
    if (static_cast<int>(order.size()) > topk) order.resize(topk);
    return order;
}

std::map<int, int> infer_links(const std::vector<int>& corrected_labels,
                               const Eigen::MatrixXd& distances,
                               std::vector<std::string>* diagnostics) {
    const int m = static_cast<int>(corrected_labels.size());
    int roots = 0;
    for (int l : corrected_labels)
        if (l == 1) ++roots;
    if (roots != 1)
        throw InvalidInputError("infer_links: expected exactly one depth-1 node, got " +
                                std::to_string(roots));

    // Nodes per depth, each list already index-sorted.
    std::map<int, std::vector<int>> by_depth;
    for (int i = 0; i < m; ++i) by_depth[corrected_labels[i]].push_back(i);

    std::map<int, int> parent;
    for (int t = 0; t < m; ++t) {
        const int depth = corrected_labels[t];
        if (depth == 1) continue;
        // Nearest shallower populated depth.
        auto it = by_depth.lower_bound(depth);
        if (it == by_depth.begin())
            throw InternalError("infer_links: no shallower depth available");
        --it;
        const std::vector<int>& pool = it->second;
        int best = pool[0];
        for (int cand : pool) {
            if (distances(cand, t) < distances(best, t)) best = cand;
        }
        if (diagnostics) {
            for (int cand : pool)
                if (cand != best && distances(cand, t) == distances(best, t)) {
                    diagnostics->push_back("parent tie for node " + std::to_string(t) +
                                           "; kept lower index");
                    break;
                }
        }
        parent[t] = best;
    }
    return parent;
}

PhyloTree assemble_ipt(const std::vector<int>& node_ids, const std::vector<int>& corrected_labels,
                       const std::map<int, int>& parent_map) {
    const int m = static_cast<int>(node_ids.size());
    if (static_cast<int>(corrected_labels.size()) != m)
        throw InvalidInputError("assemble_ipt: label count mismatch");

    PhyloTree tree;
    tree.nodes = node_ids;

    // Root: the unique local index without a parent.
    int root_local = -1;
    for (int i = 0; i < m; ++i) {
        if (!parent_map.count(i)) {
            if (root_local != -1)
                throw InvalidInputError("assemble_ipt: multiple parentless nodes");
            root_local = i;
        }
    }
    if (root_local == -1) throw InternalError("assemble_ipt: cycle detected (no parentless node)");
    tree.root = node_ids[root_local];

    // Depth by walking to the root; a walk longer than m is a cycle.
    std::vector<int> depth_local(m, 0);
    for (int i = 0; i < m; ++i) {
        int cur = i, steps = 0;
        while (parent_map.count(cur)) {
            cur = parent_map.at(cur);
            if (++steps > m) throw InternalError("assemble_ipt: cycle detected");
        }
        if (cur != root_local) throw InternalError("assemble_ipt: multiple components");
        depth_local[i] = steps + 1;
    }

    bool overrode = false;
    for (int i = 0; i < m; ++i) {
        tree.depth[node_ids[i]] = depth_local[i];
        if (depth_local[i] != corrected_labels[i]) overrode = true;
    }
    if (overrode)
        tree.diagnostics.push_back("predicted depth labels inconsistent with tree; tree depths kept");

    for (const auto& [child, par] : parent_map) {
        tree.parent[node_ids[child]] = node_ids[par];
        tree.immediate_edges.emplace_back(node_ids[par], node_ids[child]);
    }
    std::sort(tree.immediate_edges.begin(), tree.immediate_edges.end());

    for (const auto& [child, par] : parent_map) {
        int anc = par;
        while (parent_map.count(anc)) {
            anc = parent_map.at(anc);
            tree.ancestral_edges.emplace_back(node_ids[anc], node_ids[child]);
        }
    }
    std::sort(tree.ancestral_edges.begin(), tree.ancestral_edges.end());
    return tree;
}

PhyloTree reconstruct_tree_from_distances(const std::vector<int>& node_ids,
                                          const std::vector<int>& predicted_labels,
                                          const Eigen::MatrixXd& distances, RootAggregation agg) {
    std::vector<std::string> diagnostics;
    const std::vector<int> corrected =
        correct_depth_labels(predicted_labels, distances, agg, &diagnostics);
    const std::map<int, int> parents = infer_links(corrected, distances, &diagnostics);
    PhyloTree tree = assemble_ipt(node_ids, corrected, parents);
    tree.diagnostics.insert(tree.diagnostics.begin(), diagnostics.begin(), diagnostics.end());

    const std::vector<int> ranked =
        rank_roots(predicted_labels, distances, static_cast<int>(node_ids.size()), agg);
    tree.ranked_roots.clear();
    for (int local : ranked) tree.ranked_roots.push_back(node_ids[local]);
    return tree;
}

PhyloForest reconstruct_ipf_from_bundles(const std::vector<FeatureBundle>& bundles,
                                         const std::vector<NoiseResidual>& enhanced,
                                         const ChebNetModel& model, const ReconstructOptions& opts,
                                         Rng& rng) {
    if (bundles.size() != enhanced.size())
        throw InvalidInputError("reconstruct_ipf: bundle/residual count mismatch");
    if (bundles.empty()) throw InvalidInputError("reconstruct_ipf: empty input");
    if (bundles.size() < 2) throw InvalidInputError("reconstruct_ipf needs at least two images");

    PhyloForest forest;
    forest.assignment = cluster_bundles(bundles, opts.clustering, rng);

    for (int cluster = 1; cluster <= forest.assignment.k; ++cluster) {
        std::vector<int> members;
        for (size_t i = 0; i < forest.assignment.labels.size(); ++i)
            if (forest.assignment.labels[i] == cluster) members.push_back(static_cast<int>(i));
        if (members.empty()) continue;

        if (members.size() == 1) {
            PhyloTree tree;
            tree.nodes = members;
            tree.root = members[0];
            tree.depth[members[0]] = 1;
            tree.ranked_roots = members;
            forest.trees.push_back(std::move(tree));
            continue;
        }

        std::vector<NoiseResidual> cluster_residuals;
        cluster_residuals.reserve(members.size());
        for (int idx : members) cluster_residuals.push_back(enhanced[idx]);
        const Eigen::MatrixXd distances = residual_distance_matrix(cluster_residuals);

        const Eigen::MatrixXd features = build_node_features(bundles, members, opts.features);
        const Eigen::MatrixXd adjacency = build_test_adjacency(distances);
        const std::vector<int> labels = predict_depths(model, features, adjacency, opts.norm);

        forest.trees.push_back(
            reconstruct_tree_from_distances(members, labels, distances, opts.aggregation));
    }
    return forest;
}

PhyloForest reconstruct_ipf(const std::vector<Image>& images, const ChebNetModel& model,
                            const ReconstructOptions& opts, Rng& rng) {
    if (images.empty()) throw InvalidInputError("reconstruct_ipf: empty input");
    if (images.size() < 2) throw InvalidInputError("reconstruct_ipf needs at least two images");
    std::vector<NoiseResidual> enhanced;
    enhanced.reserve(images.size());
    for (const auto& img : images)
        enhanced.push_back(enhance_residual(extract_residual(img, opts.clustering.denoise),
                                            opts.clustering.enhance_alpha));
    const auto bundles = make_feature_bundles(images, enhanced);
    return reconstruct_ipf_from_bundles(bundles, enhanced, model, opts, rng);
}

}  // namespace phylo
