#include "phylo/dot_export.hpp"

#include <sstream>

#include "phylo/error.hpp"

namespace phylo {

std::string export_dot(const PhyloForest& forest, const Provenance* provenance) {
    if (forest.trees.empty()) throw InvalidInputError("export_dot: forest has no trees");

    std::ostringstream out;
    if (provenance)
        out << "// phylo " << provenance->tool_version << " seed=" << provenance->seed
            << " config=" << provenance->config_hash << "\n";
    out << "digraph phylogeny {\n";
    out << "  node [shape=circle];\n";
    for (const auto& tree : forest.trees) {
        out << "  n" << tree.root << " [shape=doublecircle];\n";
        for (const auto& [p, c] : tree.immediate_edges)
            out << "  n" << p << " -> n" << c << ";\n";
        for (const auto& [p, c] : tree.ancestral_edges)
            out << "  n" << p << " -> n" << c << " [style=dashed];\n";
    }
    out << "}\n";
    return out.str();
}

}  // namespace phylo
