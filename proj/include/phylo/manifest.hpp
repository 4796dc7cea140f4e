#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "phylo/version.hpp"

namespace phylo {

/// Ground-truth phylogeny of one near-duplicate set. Edges are directed
/// parent -> child; the root sits at depth 1.
struct GroundTruthTree {
    std::string set_id;
    int root = 0;
    std::vector<std::pair<int, int>> immediate_edges;
    std::map<int, int> depth_labels;

    bool operator==(const GroundTruthTree& o) const = default;
};

struct ManifestEntry {
    std::string path;
    std::string set_id;
    int node_id = 0;

    bool operator==(const ManifestEntry& o) const = default;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    std::vector<GroundTruthTree> ground_truth;

    bool operator==(const DatasetManifest& o) const = default;
};

/// Depth labels implied by the edges: root depth 1, child = parent + 1.
/// Throws ValidationError when the edges do not form a tree over `nodes`.
std::map<int, int> derive_depth_labels(const GroundTruthTree& truth,
                                       const std::vector<int>& nodes);

/// Full invariant check for one tree against the node ids of its set.
void validate_ground_truth(const GroundTruthTree& truth, const std::vector<int>& nodes);

/// Parses a JSON-lines manifest and validates it. Ground-truth depth
/// labels are derived from the edges when the file omits them.
DatasetManifest read_manifest(const std::string& path);

void write_manifest(const DatasetManifest& m, const std::string& path,
                    const Provenance* provenance = nullptr);

/// Ancestral closure of a ground-truth tree: every (ancestor, descendant)
/// pair that is not an immediate edge.
std::vector<std::pair<int, int>> ancestral_edges_of(const GroundTruthTree& truth);

/// Node ids of one set, in manifest order.
std::vector<int> set_node_ids(const DatasetManifest& m, const std::string& set_id);

/// Distinct set ids in first-appearance order.
std::vector<std::string> set_ids(const DatasetManifest& m);

}  // namespace phylo
