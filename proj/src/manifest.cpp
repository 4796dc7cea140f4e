#include "phylo/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "phylo/error.hpp"

namespace phylo {

using nlohmann::json;

std::map<int, int> derive_depth_labels(const GroundTruthTree& truth,
                                       const std::vector<int>& nodes) {
    const std::set<int> node_set(nodes.begin(), nodes.end());
    if (node_set.size() != nodes.size())
        throw ValidationError("set " + truth.set_id + ": duplicate node_id");
    if (!node_set.count(truth.root))
        throw ValidationError("set " + truth.set_id + ": root " + std::to_string(truth.root) +
                              " is not a node of the set");

    std::map<int, std::vector<int>> children;
    std::map<int, int> parent_count;
    for (const auto& [p, c] : truth.immediate_edges) {
        if (!node_set.count(p) || !node_set.count(c))
            throw ValidationError("set " + truth.set_id + ": edge (" + std::to_string(p) + "," +
                                  std::to_string(c) + ") references unknown node_id");
        children[p].push_back(c);
        if (++parent_count[c] > 1)
            throw ValidationError("set " + truth.set_id + ": node " + std::to_string(c) +
                                  " has multiple parents");
    }
    if (parent_count.count(truth.root))
        throw ValidationError("set " + truth.set_id + ": root has a parent");
    if (truth.immediate_edges.size() + 1 != nodes.size())
        throw ValidationError("set " + truth.set_id + ": expected " +
                              std::to_string(nodes.size() - 1) + " edges, got " +
                              std::to_string(truth.immediate_edges.size()));

    // BFS from the root; reaching every node implies connected + acyclic
    // given the edge count and in-degree checks above.
    std::map<int, int> depths;
    std::vector<int> frontier{truth.root};
    depths[truth.root] = 1;
    while (!frontier.empty()) {
        std::vector<int> next;
        for (int u : frontier) {
            for (int v : children[u]) {
                depths[v] = depths[u] + 1;
                next.push_back(v);
            }
        }
        frontier = std::move(next);
    }
    if (depths.size() != nodes.size())
        throw ValidationError("set " + truth.set_id + ": edges do not connect all nodes");
    return depths;
}

void validate_ground_truth(const GroundTruthTree& truth, const std::vector<int>& nodes) {
    const auto derived = derive_depth_labels(truth, nodes);
    if (!truth.depth_labels.empty() && truth.depth_labels != derived)
        throw ValidationError("set " + truth.set_id +
                              ": depth_labels disagree with the edges");
    int roots = 0;
    for (const auto& [node, d] : derived)
        if (d == 1) ++roots;
    if (roots != 1)
        throw ValidationError("set " + truth.set_id + ": expected exactly one depth-1 node, got " +
                              std::to_string(roots));
}

DatasetManifest read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);

    DatasetManifest m;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw IoError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (rec.contains("meta")) continue;  // provenance stamp
        if (rec.contains("ground_truth")) {
            const json& g = rec["ground_truth"];
            GroundTruthTree t;
            t.set_id = g.at("set_id").get<std::string>();
            t.root = g.at("root").get<int>();
            for (const auto& e : g.at("immediate_edges"))
                t.immediate_edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
            if (g.contains("depth_labels"))
                for (auto it = g["depth_labels"].begin(); it != g["depth_labels"].end(); ++it)
                    t.depth_labels[std::stoi(it.key())] = it.value().get<int>();
            m.ground_truth.push_back(std::move(t));
        } else {
            ManifestEntry e;
            e.path = rec.at("path").get<std::string>();
            e.set_id = rec.at("set_id").get<std::string>();
            e.node_id = rec.at("node_id").get<int>();
            m.entries.push_back(std::move(e));
        }
    }

    // Validate: unique node ids per set, ground truth consistent.
    for (const auto& sid : set_ids(m)) {
        const auto nodes = set_node_ids(m, sid);
        std::set<int> uniq(nodes.begin(), nodes.end());
        if (uniq.size() != nodes.size())
            throw ValidationError("set " + sid + ": duplicate node_id in manifest");
    }
    for (auto& t : m.ground_truth) {
        const auto nodes = set_node_ids(m, t.set_id);
        if (nodes.empty())
            throw ValidationError("ground truth for unknown set " + t.set_id);
        validate_ground_truth(t, nodes);
        if (t.depth_labels.empty()) t.depth_labels = derive_depth_labels(t, nodes);
    }
    return m;
}

void write_manifest(const DatasetManifest& m, const std::string& path,
                    const Provenance* provenance) {
    std::ostringstream out;
    if (provenance) {
        json meta;
        meta["meta"] = {{"tool_version", provenance->tool_version},
                        {"seed", provenance->seed},
                        {"config_hash", provenance->config_hash}};
        out << meta.dump() << "\n";
    }
    for (const auto& e : m.entries) {
        json rec = {{"path", e.path}, {"set_id", e.set_id}, {"node_id", e.node_id}};
        out << rec.dump() << "\n";
    }
    for (const auto& t : m.ground_truth) {
        json g;
        g["set_id"] = t.set_id;
        g["root"] = t.root;
        g["immediate_edges"] = json::array();
        for (const auto& [p, c] : t.immediate_edges) g["immediate_edges"].push_back({p, c});
        json depths = json::object();
        for (const auto& [node, d] : t.depth_labels) depths[std::to_string(node)] = d;
        g["depth_labels"] = depths;
        out << json{{"ground_truth", g}}.dump() << "\n";
    }

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path);
    f << out.str();
    if (!f) throw IoError("short write to " + path);
}

std::vector<std::pair<int, int>> ancestral_edges_of(const GroundTruthTree& truth) {
    std::map<int, int> parent;
    for (const auto& [p, c] : truth.immediate_edges) parent[c] = p;
    std::vector<std::pair<int, int>> out;
    for (const auto& [c, p] : parent) {
        int anc = p;
        while (parent.count(anc)) {
            anc = parent.at(anc);
            out.emplace_back(anc, c);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> set_node_ids(const DatasetManifest& m, const std::string& set_id) {
    std::vector<int> nodes;
    for (const auto& e : m.entries)
        if (e.set_id == set_id) nodes.push_back(e.node_id);
    return nodes;
}

std::vector<std::string> set_ids(const DatasetManifest& m) {
    std::vector<std::string> ids;
    for (const auto& e : m.entries)
        if (std::find(ids.begin(), ids.end(), e.set_id) == ids.end()) ids.push_back(e.set_id);
    return ids;
}

}  // namespace phylo
