#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "phylo/image.hpp"
#include "phylo/manifest.hpp"
#include "phylo/rng.hpp"

namespace phylo {

enum class TransformKind {
    Brightness,
    MedianFilter,
    GaussianSmooth,
    Gamma,
    Translate,
    Scale,
    Rotate,
};

enum class TransformClass { Photometric, Geometric };

/// One sampled edit. Only the fields of the active kind are meaningful;
/// defaults are the identity so a default-constructed spec is a no-op.
struct TransformSpec {
    TransformKind kind = TransformKind::Brightness;
    double a = 1.0;          // Brightness: out = a * in + b
    double b = 0.0;
    double gamma = 1.0;      // Gamma: out = 255 * (in / 255)^gamma
    double sigma = 1.0;      // GaussianSmooth std-dev, pixels
    int win_h = 3;           // MedianFilter window rows
    int win_w = 3;           // MedianFilter window cols
    int tx = 0;              // Translate, pixels
    int ty = 0;
    double scale_pct = 100.0;
    double theta_deg = 0.0;  // Rotate, degrees
};

const char* transform_kind_name(TransformKind k);

/// Applies one edit; the result is clamped back into [0, 255] and keeps
/// the input side. Geometric kinds resample with replicated borders.
Image apply_transform(const Image& img, const TransformSpec& spec);

/// Uniform kind + uniform parameters over the supported ranges:
/// a in [0.9,1.5], b in [-30,30], window in [2,6]^2, sigma in [1,3],
/// gamma in [0.5,1.5], Tx,Ty in [5,20], scale in [90,110]%, theta in
/// [-5,5] degrees.
TransformSpec sample_transform_spec(Rng& rng, TransformClass cls);

/// Rooted labeled tree over nodes 0..n_nodes-1, edges parent -> child.
struct TreeConfig {
    int n_nodes = 0;
    std::vector<std::pair<int, int>> immediate_edges;
};

/// Unique parentless node; throws InvalidInputError when the edges do not
/// form a tree.
int tree_config_root(const TreeConfig& config);

/// The six canonical 5-node training shapes, keyed 'A'..'F'. 'B' is the
/// maximal-depth chain and 'D' the maximal-breadth star.
TreeConfig five_node_config(char key);

/// 10- and 15-node shapes used for forest synthesis, two variants each.
TreeConfig ten_node_config(int variant);
TreeConfig fifteen_node_config(int variant);

/// The (5, 10, 15)-node triple spanned by one synthesized forest.
std::vector<TreeConfig> ipf_configs(int variant);

/// All labeled trees on n nodes via Prufer sequences, rooted at node 0.
/// Sizes follow n^(n-2): 1, 3, 16, 125 for n = 2..5.
std::vector<TreeConfig> enumerate_labeled_trees(int n);

struct SynthTree {
    std::vector<Image> images;  // index == node id
    GroundTruthTree truth;
};

/// Grows one near-duplicate set: node images derive from their parent by
/// one freshly sampled transform, in breadth-first edge order. Every node
/// is quantized to 8-bit levels, matching what would be written to disk.
SynthTree synthesize_ipt(const Image& root_img, const TreeConfig& config,
                         TransformClass cls, Rng& rng,
                         const std::string& set_id = "set0");

struct SynthForest {
    std::vector<Image> images;            // trees concatenated
    std::vector<GroundTruthTree> truths;  // one per source
    std::vector<int> cluster_truth;       // image index -> source index
};

/// One forest: each source spans one tree. A fixed multiplicative sensor
/// pattern (uniform in [-amplitude, amplitude], keyed by noise_seeds[i])
/// marks each source before its tree is grown, simulating distinct
/// cameras.
SynthForest synthesize_ipf(const std::vector<Image>& sources,
                           const std::vector<TreeConfig>& configs, TransformClass cls,
                           Rng& rng, const std::vector<std::uint64_t>& noise_seeds,
                           double amplitude = 0.02);

/// Multiplies img by (1 + K), K a seeded uniform pattern in [-amp, amp].
Image embed_sensor_pattern(const Image& img, std::uint64_t seed, double amplitude);

/// Procedural multi-octave texture, mean near 128, quantized to 8-bit.
/// Used as a stand-in corpus of source images.
Image make_texture(int side, Rng& rng);

}  // namespace phylo
