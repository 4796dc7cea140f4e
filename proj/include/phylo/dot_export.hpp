#pragma once

#include <string>

#include "phylo/phylogeny.hpp"
#include "phylo/version.hpp"

namespace phylo {

/// One Graphviz digraph for the whole forest: solid immediate edges,
/// dashed ancestral edges, double-circled roots.
std::string export_dot(const PhyloForest& forest, const Provenance* provenance = nullptr);

}  // namespace phylo
