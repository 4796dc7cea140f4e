#include "phylo/forest_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "phylo/error.hpp"

namespace phylo {

using nlohmann::json;

std::string forest_to_json(const PhyloForest& forest, const Provenance* provenance) {
    json doc;
    if (provenance)
        doc["meta"] = {{"tool_version", provenance->tool_version},
                       {"seed", provenance->seed},
                       {"config_hash", provenance->config_hash}};
    doc["k"] = forest.assignment.k;
    doc["assignment"] = forest.assignment.labels;
    json trees = json::array();
    for (const auto& tree : forest.trees) {
        json t;
        t["nodes"] = tree.nodes;
        t["root"] = tree.root;
        json edges = json::array();
        for (const auto& [p, c] : tree.immediate_edges) edges.push_back({p, c});
        t["immediate_edges"] = edges;
        json anc = json::array();
        for (const auto& [p, c] : tree.ancestral_edges) anc.push_back({p, c});
        t["ancestral_edges"] = anc;
        json depths = json::object();
        for (const auto& [node, d] : tree.depth) depths[std::to_string(node)] = d;
        t["depths"] = depths;
        t["ranked_roots"] = tree.ranked_roots;
        t["diagnostics"] = tree.diagnostics;
        trees.push_back(std::move(t));
    }
    doc["trees"] = trees;
    return doc.dump(2) + "\n";
}

PhyloForest forest_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw IoError(std::string("forest JSON: ") + e.what());
    }
    PhyloForest forest;
    forest.assignment.k = doc.at("k").get<int>();
    forest.assignment.labels = doc.at("assignment").get<std::vector<int>>();
    for (const auto& t : doc.at("trees")) {
        PhyloTree tree;
        tree.nodes = t.at("nodes").get<std::vector<int>>();
        tree.root = t.at("root").get<int>();
        for (const auto& e : t.at("immediate_edges"))
            tree.immediate_edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
        for (const auto& e : t.at("ancestral_edges"))
            tree.ancestral_edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
        for (auto it = t.at("depths").begin(); it != t.at("depths").end(); ++it)
            tree.depth[std::stoi(it.key())] = it.value().get<int>();
        if (t.contains("ranked_roots"))
            tree.ranked_roots = t.at("ranked_roots").get<std::vector<int>>();
        if (t.contains("diagnostics"))
            tree.diagnostics = t.at("diagnostics").get<std::vector<std::string>>();
        for (const auto& [p, c] : tree.immediate_edges) tree.parent[c] = p;
        forest.trees.push_back(std::move(tree));
    }
    return forest;
}

void write_forest(const PhyloForest& forest, const std::string& path,
                  const Provenance* provenance) {
    write_text_atomic(path, forest_to_json(forest, provenance));
}

PhyloForest read_forest(const std::string& path) { return forest_from_json(read_text_file(path)); }

void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot write " + tmp);
        out << content;
        if (!out) throw IoError("short write to " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw IoError("cannot rename " + tmp + " to " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace phylo
