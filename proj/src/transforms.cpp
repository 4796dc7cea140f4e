#include "phylo/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "phylo/error.hpp"

namespace phylo {

namespace {

constexpr double kPi = 3.14159265358979323846;

int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

double sample_replicate(const Image& img, double y, double x) {
    // Bilinear with replicated borders. Integral coordinates reproduce the
    // source pixel exactly.
    const double cy = std::clamp(y, 0.0, img.side - 1.0);
    const double cx = std::clamp(x, 0.0, img.side - 1.0);
    const int y0 = static_cast<int>(std::floor(cy));
    const int x0 = static_cast<int>(std::floor(cx));
    const int y1 = std::min(y0 + 1, img.side - 1);
    const int x1 = std::min(x0 + 1, img.side - 1);
    const double fy = cy - y0, fx = cx - x0;
    return (1 - fy) * ((1 - fx) * img.at(y0, x0) + fx * img.at(y0, x1)) +
           fy * ((1 - fx) * img.at(y1, x0) + fx * img.at(y1, x1));
}

Image brightness(const Image& img, double a, double b) {
    Image out = img;
    for (double& v : out.pixels) v = a * v + b;
    return out;
}

Image gamma_map(const Image& img, double gamma) {
    if (gamma == 1.0) return img;  // exact identity
    Image out = img;
    for (double& v : out.pixels) v = 255.0 * std::pow(std::max(v, 0.0) / 255.0, gamma);
    return out;
}

Image gaussian_smooth(const Image& img, double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += kernel[i + radius];
    }
    for (double& k : kernel) k /= sum;

    const int n = img.side;
    Image tmp(n), out(n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * img.at(y, clampi(x + i, 0, n - 1));
            tmp.at(y, x) = acc;
        }
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * tmp.at(clampi(y + i, 0, n - 1), x);
            out.at(y, x) = acc;
        }
    return out;
}

Image median_filter(const Image& img, int win_h, int win_w) {
    const int n = img.side;
    // Window covers [-(s-1)/2, s/2] so even sizes are usable.
    const int top = -(win_h - 1) / 2, bottom = win_h / 2;
    const int left = -(win_w - 1) / 2, right = win_w / 2;
    Image out(n);
    std::vector<double> vals;
    vals.reserve(static_cast<size_t>(win_h) * win_w);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            vals.clear();
            for (int dy = top; dy <= bottom; ++dy)
                for (int dx = left; dx <= right; ++dx)
                    vals.push_back(img.at(clampi(y + dy, 0, n - 1), clampi(x + dx, 0, n - 1)));
            std::sort(vals.begin(), vals.end());
            const size_t m = vals.size();
            out.at(y, x) = (m % 2 == 1) ? vals[m / 2] : 0.5 * (vals[m / 2 - 1] + vals[m / 2]);
        }
    return out;
}

Image translate(const Image& img, int tx, int ty) {
    const int n = img.side;
    Image out(n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            out.at(y, x) = img.at(clampi(y - ty, 0, n - 1), clampi(x - tx, 0, n - 1));
    return out;
}

Image scale_about_center(const Image& img, double pct) {
    const double s = pct / 100.0;
    const int n = img.side;
    const double c = (n - 1) / 2.0;
    Image out(n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            out.at(y, x) = sample_replicate(img, c + (y - c) / s, c + (x - c) / s);
    return out;
}

Image rotate_about_center(const Image& img, double theta_deg) {
    const double t = theta_deg * kPi / 180.0;
    const double ct = std::cos(t), st = std::sin(t);
    const int n = img.side;
    const double c = (n - 1) / 2.0;
    Image out(n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const double dy = y - c, dx = x - c;
            out.at(y, x) = sample_replicate(img, c + st * dx + ct * dy, c + ct * dx - st * dy);
        }
    return out;
}

void require_finite(double v, const char* name) {
    if (!std::isfinite(v))
        throw InvalidInputError(std::string("non-finite transform parameter ") + name);
}

}  // namespace

const char* transform_kind_name(TransformKind k) {
    switch (k) {
        case TransformKind::Brightness: return "brightness";
        case TransformKind::MedianFilter: return "median";
        case TransformKind::GaussianSmooth: return "gaussian";
        case TransformKind::Gamma: return "gamma";
        case TransformKind::Translate: return "translate";
        case TransformKind::Scale: return "scale";
        case TransformKind::Rotate: return "rotate";
    }
    return "?";
}

Image apply_transform(const Image& img, const TransformSpec& spec) {
    Image out;
    switch (spec.kind) {
        case TransformKind::Brightness:
            require_finite(spec.a, "a");
            require_finite(spec.b, "b");
            out = brightness(img, spec.a, spec.b);
            break;
        case TransformKind::Gamma:
            require_finite(spec.gamma, "gamma");
            out = gamma_map(img, spec.gamma);
            break;
        case TransformKind::GaussianSmooth:
            require_finite(spec.sigma, "sigma");
            if (spec.sigma <= 0) throw InvalidInputError("gaussian sigma must be positive");
            out = gaussian_smooth(img, spec.sigma);
            break;
        case TransformKind::MedianFilter:
            if (spec.win_h < 1 || spec.win_w < 1)
                throw InvalidInputError("median window must be at least 1x1");
            out = median_filter(img, spec.win_h, spec.win_w);
            break;
        case TransformKind::Translate:
            out = translate(img, spec.tx, spec.ty);
            break;
        case TransformKind::Scale:
            require_finite(spec.scale_pct, "scale_pct");
            if (spec.scale_pct <= 0) throw InvalidInputError("scale percentage must be positive");
            out = scale_about_center(img, spec.scale_pct);
            break;
        case TransformKind::Rotate:
            require_finite(spec.theta_deg, "theta_deg");
            out = rotate_about_center(img, spec.theta_deg);
            break;
    }
    clamp_to_range(out);
    return out;
}

TransformSpec sample_transform_spec(Rng& rng, TransformClass cls) {
    TransformSpec spec;
    if (cls == TransformClass::Photometric) {
        switch (rng.uniform_int(0, 3)) {
            case 0:
                spec.kind = TransformKind::Brightness;
                spec.a = rng.uniform(0.9, 1.5);
                spec.b = rng.uniform(-30.0, 30.0);
                break;
            case 1:
                spec.kind = TransformKind::MedianFilter;
                spec.win_h = static_cast<int>(rng.uniform_int(2, 6));
                spec.win_w = static_cast<int>(rng.uniform_int(2, 6));
                break;
            case 2:
                spec.kind = TransformKind::GaussianSmooth;
                spec.sigma = rng.uniform(1.0, 3.0);
                break;
            default:
                spec.kind = TransformKind::Gamma;
                spec.gamma = rng.uniform(0.5, 1.5);
                break;
        }
    } else {
        switch (rng.uniform_int(0, 2)) {
            case 0:
                spec.kind = TransformKind::Translate;
                spec.tx = static_cast<int>(rng.uniform_int(5, 20));
                spec.ty = static_cast<int>(rng.uniform_int(5, 20));
                break;
            case 1:
                spec.kind = TransformKind::Scale;
                spec.scale_pct = rng.uniform(90.0, 110.0);
                break;
            default:
                spec.kind = TransformKind::Rotate;
                spec.theta_deg = rng.uniform(-5.0, 5.0);
                break;
        }
    }
    return spec;
}

int tree_config_root(const TreeConfig& config) {
    if (config.n_nodes < 1) throw InvalidInputError("tree config needs at least one node");
    if (static_cast<int>(config.immediate_edges.size()) != config.n_nodes - 1)
        throw InvalidInputError("tree config needs n-1 edges");
    std::vector<int> parent(config.n_nodes, -1);
    for (const auto& [p, c] : config.immediate_edges) {
        if (p < 0 || p >= config.n_nodes || c < 0 || c >= config.n_nodes)
            throw InvalidInputError("tree config edge out of range");
        if (parent[c] != -1) throw InvalidInputError("tree config node has two parents");
        parent[c] = p;
    }
    int root = -1;
    for (int i = 0; i < config.n_nodes; ++i)
        if (parent[i] == -1) {
            if (root != -1) throw InvalidInputError("tree config has multiple roots");
            root = i;
        }
    // Acyclic by construction when exactly one root and unique parents; a
    // cycle would leave no parentless node.
    if (root == -1) throw InvalidInputError("tree config has a cycle");
    return root;
}

TreeConfig five_node_config(char key) {
    switch (key) {
        case 'A': return {5, {{0, 1}, {0, 2}, {1, 3}, {2, 4}}};            // two branches
        case 'B': return {5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}}};            // chain, max depth
        case 'C': return {5, {{0, 1}, {0, 2}, {0, 3}, {3, 4}}};            // wide, one tail
        case 'D': return {5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}}};            // star, max breadth
        case 'E': return {5, {{0, 1}, {0, 2}, {2, 3}, {2, 4}}};            // lopsided fork
        case 'F': return {5, {{0, 1}, {1, 2}, {2, 3}, {1, 4}}};            // deep, unbalanced
        default: throw InvalidInputError(std::string("unknown 5-node config '") + key + "'");
    }
}

TreeConfig ten_node_config(int variant) {
    switch (variant) {
        case 0:
            return {10, {{0, 1}, {0, 2}, {1, 3}, {1, 4}, {2, 5}, {3, 6}, {4, 7}, {5, 8}, {6, 9}}};
        case 1:
            return {10, {{0, 1}, {0, 2}, {0, 3}, {1, 4}, {1, 5}, {2, 6}, {3, 7}, {4, 8}, {6, 9}}};
        default: throw InvalidInputError("unknown 10-node config variant");
    }
}

TreeConfig fifteen_node_config(int variant) {
    switch (variant) {
        case 0:
            return {15,
                    {{0, 1}, {0, 2}, {0, 3}, {1, 4}, {1, 5}, {2, 6}, {2, 7}, {3, 8}, {4, 9},
                     {4, 10}, {6, 11}, {8, 12}, {9, 13}, {12, 14}}};
        case 1:
            return {15,
                    {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 6}, {0, 7}, {6, 8}, {6, 9},
                     {7, 10}, {8, 11}, {10, 12}, {2, 13}, {13, 14}}};
        default: throw InvalidInputError("unknown 15-node config variant");
    }
}

std::vector<TreeConfig> ipf_configs(int variant) {
    return {variant == 0 ? five_node_config('A') : five_node_config('D'),
            ten_node_config(variant), fifteen_node_config(variant)};
}

std::vector<TreeConfig> enumerate_labeled_trees(int n) {
    if (n < 2 || n > 8) throw InvalidInputError("enumerate_labeled_trees supports n in [2,8]");

    std::vector<TreeConfig> out;
    const int seq_len = n - 2;
    std::vector<int> seq(seq_len, 0);

    auto decode = [&](const std::vector<int>& prufer) {
        std::vector<int> degree(n, 1);
        for (int s : prufer) ++degree[s];
        std::vector<std::pair<int, int>> undirected;
        std::vector<int> deg = degree;
        for (int s : prufer) {
            for (int leaf = 0; leaf < n; ++leaf) {
                if (deg[leaf] == 1) {
                    undirected.emplace_back(leaf, s);
                    --deg[leaf];
                    --deg[s];
                    break;
                }
            }
        }
        int u = -1, v = -1;
        for (int i = 0; i < n; ++i)
            if (deg[i] == 1) (u == -1 ? u : v) = i;
        undirected.emplace_back(u, v);

        // Orient away from node 0.
        std::vector<std::vector<int>> adj(n);
        for (const auto& [a, b] : undirected) {
            adj[a].push_back(b);
            adj[b].push_back(a);
        }
        TreeConfig cfg;
        cfg.n_nodes = n;
        std::vector<int> stack{0};
        std::vector<bool> seen(n, false);
        seen[0] = true;
        while (!stack.empty()) {
            const int cur = stack.back();
            stack.pop_back();
            for (int nb : adj[cur])
                if (!seen[nb]) {
                    seen[nb] = true;
                    cfg.immediate_edges.emplace_back(cur, nb);
                    stack.push_back(nb);
                }
        }
        std::sort(cfg.immediate_edges.begin(), cfg.immediate_edges.end());
        return cfg;
    };

    while (true) {
        out.push_back(decode(seq));
        int pos = seq_len - 1;
        while (pos >= 0 && seq[pos] == n - 1) seq[pos--] = 0;
        if (pos < 0) break;
        ++seq[pos];
    }
    return out;
}

SynthTree synthesize_ipt(const Image& root_img, const TreeConfig& config, TransformClass cls,
                         Rng& rng, const std::string& set_id) {
    const int root = tree_config_root(config);

    // Children grouped by parent, then expanded breadth-first so the
    // sampling order is a pure function of the config.
    std::map<int, std::vector<int>> children;
    for (const auto& [p, c] : config.immediate_edges) children[p].push_back(c);
    for (auto& [p, kids] : children) std::sort(kids.begin(), kids.end());

    SynthTree result;
    result.images.assign(config.n_nodes, Image());
    result.images[root] = root_img;
    quantize_to_8bit(result.images[root]);

    std::vector<int> frontier{root};
    while (!frontier.empty()) {
        std::vector<int> next;
        for (int p : frontier) {
            for (int c : children[p]) {
                const TransformSpec spec = sample_transform_spec(rng, cls);
                result.images[c] = apply_transform(result.images[p], spec);
                quantize_to_8bit(result.images[c]);
                next.push_back(c);
            }
        }
        frontier = std::move(next);
    }

    result.truth.set_id = set_id;
    result.truth.root = root;
    result.truth.immediate_edges = config.immediate_edges;
    std::vector<int> nodes(config.n_nodes);
    std::iota(nodes.begin(), nodes.end(), 0);
    result.truth.depth_labels = derive_depth_labels(result.truth, nodes);
    return result;
}

SynthForest synthesize_ipf(const std::vector<Image>& sources,
                           const std::vector<TreeConfig>& configs, TransformClass cls, Rng& rng,
                           const std::vector<std::uint64_t>& noise_seeds, double amplitude) {
    if (sources.size() < 2)
        throw InvalidInputError("synthesize_ipf needs at least 2 source images");
    if (configs.size() != sources.size() || noise_seeds.size() != sources.size())
        throw InvalidInputError("synthesize_ipf: one config and one noise seed per source");
    for (size_t i = 0; i < sources.size(); ++i)
        for (size_t j = i + 1; j < sources.size(); ++j)
            if (sources[i] == sources[j])
                throw InvalidInputError("synthesize_ipf: sources must be pairwise distinct");

    SynthForest forest;
    for (size_t i = 0; i < sources.size(); ++i) {
        const Image marked = embed_sensor_pattern(sources[i], noise_seeds[i], amplitude);
        Rng tree_rng = rng.child(i);
        SynthTree tree = synthesize_ipt(marked, configs[i], cls, tree_rng,
                                        "tree" + std::to_string(i));
        for (auto& img : tree.images) {
            forest.images.push_back(std::move(img));
            forest.cluster_truth.push_back(static_cast<int>(i));
        }
        forest.truths.push_back(std::move(tree.truth));
    }
    return forest;
}

Image embed_sensor_pattern(const Image& img, std::uint64_t seed, double amplitude) {
    Rng rng(splitmix64(seed));
    Image out = img;
    for (double& v : out.pixels) v *= 1.0 + rng.uniform(-amplitude, amplitude);
    clamp_to_range(out);
    return out;
}

Image make_texture(int side, Rng& rng) {
    auto value_noise = [&](int cell) {
        const int lat = side / cell + 2;
        std::vector<double> lattice(static_cast<size_t>(lat) * lat);
        for (double& v : lattice) v = rng.uniform(-1.0, 1.0);
        Image layer(side);
        for (int y = 0; y < side; ++y)
            for (int x = 0; x < side; ++x) {
                const double gy = static_cast<double>(y) / cell;
                const double gx = static_cast<double>(x) / cell;
                const int y0 = static_cast<int>(gy), x0 = static_cast<int>(gx);
                const double fy = gy - y0, fx = gx - x0;
                auto at = [&](int yy, int xx) { return lattice[static_cast<size_t>(yy) * lat + xx]; };
                layer.at(y, x) = (1 - fy) * ((1 - fx) * at(y0, x0) + fx * at(y0, x0 + 1)) +
                                 fy * ((1 - fx) * at(y0 + 1, x0) + fx * at(y0 + 1, x0 + 1));
            }
        return layer;
    };

    Image tex(side, 128.0);
    const struct {
        int cell;
        double amp;
    } octaves[] = {{24, 42.0}, {12, 30.0}, {6, 20.0}, {3, 13.0}};
    for (const auto& o : octaves) {
        const Image layer = value_noise(o.cell);
        for (size_t i = 0; i < tex.pixels.size(); ++i) tex.pixels[i] += o.amp * layer.pixels[i];
    }
    // Pixel-level detail so noise residuals carry texture energy.
    for (double& v : tex.pixels) v += rng.uniform(-9.0, 9.0);
    quantize_to_8bit(tex);
    return tex;
}

}  // namespace phylo
