#pragma once

#include <string>

namespace phylo {

inline constexpr const char* kToolVersion = "0.1.0";

/// Provenance stamp embedded in every text artifact the tool writes.
struct Provenance {
    const char* tool_version = kToolVersion;
    unsigned long long seed = 0;
    std::string config_hash;
};

}  // namespace phylo
