#include "phylo/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "phylo/error.hpp"

namespace phylo {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                          (s.front() == '\'' && s.back() == '\'')))
        return s.substr(1, s.size() - 2);
    return s;
}

int parse_int(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const int v = std::stoi(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ValidationError("config key '" + key + "': expected integer, got '" + value + "'");
    }
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ValidationError("config key '" + key + "': expected number, got '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ValidationError("config key '" + key + "': expected boolean, got '" + value + "'");
}

template <typename T>
T parse_choice(const std::string& key, const std::string& value,
               const std::map<std::string, T>& choices) {
    const auto it = choices.find(value);
    if (it == choices.end()) {
        std::string options;
        for (const auto& [name, v] : choices) options += (options.empty() ? "" : "|") + name;
        throw ValidationError("config key '" + key + "': expected one of " + options + ", got '" +
                              value + "'");
    }
    return it->second;
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

RunConfig default_config() { return RunConfig{}; }

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
    static const std::map<std::string, TransformClass> classes = {
        {"photometric", TransformClass::Photometric},
        {"geometric", TransformClass::Geometric}};
    static const std::map<std::string, CosineConvention> cosines = {
        {"normalized", CosineConvention::Normalized}, {"raw", CosineConvention::Raw}};
    static const std::map<std::string, SpectrumConvention> spectra = {
        {"standard", SpectrumConvention::Standard}, {"paper", SpectrumConvention::Paper}};
    static const std::map<std::string, BandwidthMode> bandwidths = {
        {"local", BandwidthMode::LocallyScaled}, {"global", BandwidthMode::Global}};
    static const std::map<std::string, DenoiserKind> denoisers = {
        {"wavelet", DenoiserKind::WaveletWiener}, {"spatial", DenoiserKind::SpatialWiener}};
    static const std::map<std::string, NodeFeatureKind> features = {
        {"pixel", NodeFeatureKind::Pixel},
        {"prnu", NodeFeatureKind::Prnu},
        {"descriptor", NodeFeatureKind::Descriptor}};
    static const std::map<std::string, AdjacencyNorm> adjacencies = {
        {"symmetric", AdjacencyNorm::Symmetric}, {"asymmetric", AdjacencyNorm::RandomWalk}};
    static const std::map<std::string, RootAggregation> aggregations = {
        {"sum", RootAggregation::Sum}, {"max", RootAggregation::Max}};

    if (key == "side") cfg.side = parse_int(key, value);
    else if (key == "class") cfg.transform_class = parse_choice(key, value, classes);
    else if (key == "eta") cfg.eta = parse_double(key, value);
    else if (key == "cosine") cfg.cosine = parse_choice(key, value, cosines);
    else if (key == "spectrum") cfg.spectrum = parse_choice(key, value, spectra);
    else if (key == "bandwidth") cfg.bandwidth = parse_choice(key, value, bandwidths);
    else if (key == "kmeans_restarts") cfg.kmeans_restarts = parse_int(key, value);
    else if (key == "kmeans_max_iterations") cfg.kmeans_max_iterations = parse_int(key, value);
    else if (key == "denoiser") cfg.denoiser = parse_choice(key, value, denoisers);
    else if (key == "sigma0") cfg.sigma0 = parse_double(key, value);
    else if (key == "enhance_alpha") cfg.enhance_alpha = parse_double(key, value);
    else if (key == "sensor_amplitude") cfg.sensor_amplitude = parse_double(key, value);
    else if (key == "cheb_degree") cfg.cheb_degree = parse_int(key, value);
    else if (key == "hidden") cfg.hidden = parse_int(key, value);
    else if (key == "n_classes") cfg.n_classes = parse_int(key, value);
    else if (key == "learning_rate") cfg.learning_rate = parse_double(key, value);
    else if (key == "epochs") cfg.epochs = parse_int(key, value);
    else if (key == "dropout") cfg.dropout = parse_double(key, value);
    else if (key == "weight_decay") cfg.weight_decay = parse_double(key, value);
    else if (key == "patience") cfg.patience = parse_int(key, value);
    else if (key == "features") cfg.features = parse_choice(key, value, features);
    else if (key == "adjacency") cfg.adjacency = parse_choice(key, value, adjacencies);
    else if (key == "aggregation") cfg.aggregation = parse_choice(key, value, aggregations);
    else if (key == "scoring_ancestral") cfg.scoring_ancestral = parse_bool(key, value);
    else if (key == "train_sources") cfg.train_sources = parse_int(key, value);
    else if (key == "val_sources") cfg.val_sources = parse_int(key, value);
    else if (key == "test_sources") cfg.test_sources = parse_int(key, value);
    else if (key == "ipf_count") cfg.ipf_count = parse_int(key, value);
    else if (key == "val_fraction") cfg.val_fraction = parse_double(key, value);
    else throw ValidationError("unknown config key '" + key + "'");
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    RunConfig cfg;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') continue;  // section headers are cosmetic
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError(path + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = unquote(trim(line.substr(eq + 1)));
        try {
            set_config_value(cfg, key, value);
        } catch (const ValidationError& e) {
            throw ValidationError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

std::string canonical_config(const RunConfig& cfg) {
    std::map<std::string, std::string> kv;
    kv["side"] = std::to_string(cfg.side);
    kv["class"] = cfg.transform_class == TransformClass::Photometric ? "photometric" : "geometric";
    kv["eta"] = fmt_double(cfg.eta);
    kv["cosine"] = cfg.cosine == CosineConvention::Normalized ? "normalized" : "raw";
    kv["spectrum"] = cfg.spectrum == SpectrumConvention::Standard ? "standard" : "paper";
    kv["bandwidth"] = cfg.bandwidth == BandwidthMode::LocallyScaled ? "local" : "global";
    kv["kmeans_restarts"] = std::to_string(cfg.kmeans_restarts);
    kv["kmeans_max_iterations"] = std::to_string(cfg.kmeans_max_iterations);
    kv["denoiser"] = cfg.denoiser == DenoiserKind::WaveletWiener ? "wavelet" : "spatial";
    kv["sigma0"] = fmt_double(cfg.sigma0);
    kv["enhance_alpha"] = fmt_double(cfg.enhance_alpha);
    kv["sensor_amplitude"] = fmt_double(cfg.sensor_amplitude);
    kv["cheb_degree"] = std::to_string(cfg.cheb_degree);
    kv["hidden"] = std::to_string(cfg.hidden);
    kv["n_classes"] = std::to_string(cfg.n_classes);
    kv["learning_rate"] = fmt_double(cfg.learning_rate);
    kv["epochs"] = std::to_string(cfg.epochs);
    kv["dropout"] = fmt_double(cfg.dropout);
    kv["weight_decay"] = fmt_double(cfg.weight_decay);
    kv["patience"] = std::to_string(cfg.patience);
    kv["features"] = cfg.features == NodeFeatureKind::Pixel
                         ? "pixel"
                         : (cfg.features == NodeFeatureKind::Prnu ? "prnu" : "descriptor");
    kv["adjacency"] = cfg.adjacency == AdjacencyNorm::Symmetric ? "symmetric" : "asymmetric";
    kv["aggregation"] = cfg.aggregation == RootAggregation::Sum ? "sum" : "max";
    kv["scoring_ancestral"] = cfg.scoring_ancestral ? "true" : "false";
    kv["train_sources"] = std::to_string(cfg.train_sources);
    kv["val_sources"] = std::to_string(cfg.val_sources);
    kv["test_sources"] = std::to_string(cfg.test_sources);
    kv["ipf_count"] = std::to_string(cfg.ipf_count);
    kv["val_fraction"] = fmt_double(cfg.val_fraction);

    std::ostringstream out;
    for (const auto& [k, v] : kv) out << k << " = " << v << "\n";
    return out.str();
}

std::string config_hash(const RunConfig& cfg) {
    const std::string text = canonical_config(cfg);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ClusteringOptions clustering_options(const RunConfig& cfg) {
    ClusteringOptions opts;
    opts.eta = cfg.eta;
    opts.enhance_alpha = cfg.enhance_alpha;
    opts.denoise = denoise_options(cfg);
    opts.cosine = cfg.cosine;
    opts.spectrum = cfg.spectrum;
    opts.bandwidth = cfg.bandwidth;
    opts.kmeans.restarts = cfg.kmeans_restarts;
    opts.kmeans.max_iterations = cfg.kmeans_max_iterations;
    return opts;
}

TrainOptions train_options(const RunConfig& cfg) {
    TrainOptions opts;
    opts.learning_rate = cfg.learning_rate;
    opts.epochs = cfg.epochs;
    opts.dropout = cfg.dropout;
    opts.weight_decay = cfg.weight_decay;
    opts.patience = cfg.patience;
    opts.norm = cfg.adjacency;
    return opts;
}

ReconstructOptions reconstruct_options(const RunConfig& cfg) {
    ReconstructOptions opts;
    opts.clustering = clustering_options(cfg);
    opts.features = cfg.features;
    opts.norm = cfg.adjacency;
    opts.aggregation = cfg.aggregation;
    return opts;
}

DenoiseOptions denoise_options(const RunConfig& cfg) {
    DenoiseOptions opts;
    opts.kind = cfg.denoiser;
    opts.sigma0 = cfg.sigma0;
    return opts;
}

}  // namespace phylo
