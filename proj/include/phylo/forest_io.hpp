#pragma once

#include <string>

#include "phylo/phylogeny.hpp"
#include "phylo/version.hpp"

namespace phylo {

std::string forest_to_json(const PhyloForest& forest, const Provenance* provenance = nullptr);
PhyloForest forest_from_json(const std::string& text);

void write_forest(const PhyloForest& forest, const std::string& path,
                  const Provenance* provenance = nullptr);
PhyloForest read_forest(const std::string& path);

/// Writes to <path>.tmp then renames, so readers never see partial files.
void write_text_atomic(const std::string& path, const std::string& content);

std::string read_text_file(const std::string& path);

}  // namespace phylo
