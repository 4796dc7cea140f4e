#include "phylo/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "phylo/error.hpp"

namespace phylo {

namespace {

constexpr double kDuplicateTie = 1.0 - 1e-12;

double row_median(const Eigen::MatrixXd& S, int row) {
    std::vector<double> vals(S.cols());
    for (int j = 0; j < S.cols(); ++j) vals[j] = S(row, j);
    std::sort(vals.begin(), vals.end());
    const size_t m = vals.size();
    return (m % 2 == 1) ? vals[m / 2] : 0.5 * (vals[m / 2 - 1] + vals[m / 2]);
}

}  // namespace

Eigen::MatrixXd build_similarity(const std::vector<FeatureBundle>& bundles,
                                 const LocalBandwidths& bw, CosineConvention convention) {
    const int q = static_cast<int>(bundles.size());
    if (q < 2) throw InvalidInputError("build_similarity needs at least two images");
    if (static_cast<int>(bw.f.size()) != q || static_cast<int>(bw.n.size()) != q ||
        static_cast<int>(bw.p.size()) != q)
        throw InvalidInputError("build_similarity: bandwidth count mismatch");
    for (int i = 0; i < q; ++i)
        if (bw.f[i] <= 0.0 || bw.n[i] <= 0.0 || bw.p[i] <= 0.0)
            throw InvalidInputError("build_similarity: bandwidths must be positive");

    Eigen::MatrixXd S(q, q);
    for (int i = 0; i < q; ++i) {
        S(i, i) = 1.0;
        for (int j = i + 1; j < q; ++j) {
            const double df = safe_cosine_distance(bundles[i].descriptor, bundles[j].descriptor,
                                                   convention);
            const double dn = safe_cosine_distance(bundles[i].noise, bundles[j].noise, convention);
            const double dp = safe_cosine_distance(bundles[i].pixels, bundles[j].pixels,
                                                   convention);
            const double arg = df * df / (bw.f[i] * bw.f[j]) + dn * dn / (bw.n[i] * bw.n[j]) +
                               dp * dp / (bw.p[i] * bw.p[j]);
            S(i, j) = S(j, i) = std::exp(-arg);
        }
    }
    return S;
}

Eigen::MatrixXd binarize_similarity(const Eigen::MatrixXd& S) {
    const int q = static_cast<int>(S.rows());
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(q, q);
    for (int i = 0; i < q; ++i) {
        const double med = row_median(S, i);
        for (int j = 0; j < q; ++j)
            if (S(i, j) > med || S(i, j) >= kDuplicateTie) B(i, j) = 1.0;
    }
    // Symmetrize: keep an edge seen from either row.
    for (int i = 0; i < q; ++i)
        for (int j = i + 1; j < q; ++j) {
            const double m = std::max(B(i, j), B(j, i));
            B(i, j) = B(j, i) = m;
        }
    return B;
}

Eigen::MatrixXd normalized_laplacian(const Eigen::MatrixXd& S_B) {
    const int q = static_cast<int>(S_B.rows());
    Eigen::MatrixXd A = S_B;
    for (int i = 0; i < q; ++i)
        if (A.row(i).sum() <= 0.0) A(i, i) = 1.0;  // isolated image keeps itself

    Eigen::VectorXd inv_sqrt_deg(q);
    for (int i = 0; i < q; ++i) inv_sqrt_deg(i) = 1.0 / std::sqrt(A.row(i).sum());
    Eigen::MatrixXd L = inv_sqrt_deg.asDiagonal() * A * inv_sqrt_deg.asDiagonal();
    // Force exact symmetry against rounding.
    L = 0.5 * (L + L.transpose()).eval();
    return L;
}

SpectralEmbedding spectral_embed(const Eigen::MatrixXd& normalized_laplacian, double eta,
                                 SpectrumConvention convention) {
    if (!std::isfinite(eta)) throw InvalidInputError("spectral_embed: eta must be finite");
    const int q = static_cast<int>(normalized_laplacian.rows());

    SpectralEmbedding out;
    out.laplacian =
        convention == SpectrumConvention::Standard
            ? Eigen::MatrixXd(Eigen::MatrixXd::Identity(q, q) - normalized_laplacian)
            : normalized_laplacian;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(out.laplacian);
    if (solver.info() != Eigen::Success)
        throw InternalError("spectral_embed: eigendecomposition failed");
    const Eigen::VectorXd& values = solver.eigenvalues();  // ascending

    int k = 0;
    while (k < q && values(k) < eta) ++k;
    if (k == 0) k = 1;  // nothing under the threshold: keep the smallest

    out.k = k;
    out.values = values.head(k);
    out.vectors = solver.eigenvectors().leftCols(k);
    out.embedding = out.vectors;
    for (int i = 0; i < q; ++i) {
        const double norm = out.embedding.row(i).norm();
        if (norm > 0.0) out.embedding.row(i) /= norm;
    }
    return out;
}

namespace {

double squared_distance(const Eigen::MatrixXd& rows, int i, const Eigen::MatrixXd& centers,
                        int c) {
    return (rows.row(i) - centers.row(c)).squaredNorm();
}

struct LloydResult {
    std::vector<int> assign;
    double inertia = std::numeric_limits<double>::infinity();
};

LloydResult run_lloyd(const Eigen::MatrixXd& rows, int k, Rng& rng, int max_iterations) {
    const int n = static_cast<int>(rows.rows());
    const int dim = static_cast<int>(rows.cols());

    // k-means++ seeding.
    Eigen::MatrixXd centers(k, dim);
    std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
    {
        const int first = static_cast<int>(rng.uniform_int(0, n - 1));
        centers.row(0) = rows.row(first);
        for (int c = 1; c < k; ++c) {
            double total = 0.0;
            for (int i = 0; i < n; ++i) {
                min_d2[i] = std::min(min_d2[i], squared_distance(rows, i, centers, c - 1));
                total += min_d2[i];
            }
            int chosen = n - 1;
            if (total > 0.0) {
                const double target = rng.uniform() * total;
                double acc = 0.0;
                for (int i = 0; i < n; ++i) {
                    acc += min_d2[i];
                    if (acc >= target) {
                        chosen = i;
                        break;
                    }
                }
            } else {
                chosen = static_cast<int>(rng.uniform_int(0, n - 1));
            }
            centers.row(c) = rows.row(chosen);
        }
    }

    std::vector<int> assign(n, -1);
    for (int iter = 0; iter < max_iterations; ++iter) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_d = squared_distance(rows, i, centers, 0);
            for (int c = 1; c < k; ++c) {
                const double d = squared_distance(rows, i, centers, c);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (assign[i] != best) {
                assign[i] = best;
                changed = true;
            }
        }
        if (!changed && iter > 0) break;

        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, dim);
        std::vector<int> counts(k, 0);
        for (int i = 0; i < n; ++i) {
            sums.row(assign[i]) += rows.row(i);
            ++counts[assign[i]];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                centers.row(c) = sums.row(c) / counts[c];
            } else {
                // Re-seed an empty cluster with the point farthest from
                // its current center.
                int far = 0;
                double far_d = -1.0;
                for (int i = 0; i < n; ++i) {
                    const double d = squared_distance(rows, i, centers, assign[i]);
                    if (d > far_d) {
                        far_d = d;
                        far = i;
                    }
                }
                centers.row(c) = rows.row(far);
            }
        }
    }

    LloydResult result;
    result.assign = assign;
    result.inertia = 0.0;
    for (int i = 0; i < n; ++i) result.inertia += squared_distance(rows, i, centers, assign[i]);
    return result;
}

}  // namespace

ClusterAssignment kmeans_rows(const Eigen::MatrixXd& rows, int k, Rng& rng,
                              const KMeansOptions& opts) {
    const int n = static_cast<int>(rows.rows());
    if (k < 1 || k > n) throw InvalidInputError("kmeans_rows: k must be in [1, Q]");

    LloydResult best;
    for (int r = 0; r < opts.restarts; ++r) {
        LloydResult cur = run_lloyd(rows, k, rng, opts.max_iterations);
        if (cur.inertia < best.inertia) best = cur;
    }

    // Renumber by first appearance; drop ids that ended up empty.
    std::map<int, int> remap;
    ClusterAssignment out;
    out.labels.resize(n);
    for (int i = 0; i < n; ++i) {
        auto [it, inserted] = remap.try_emplace(best.assign[i], static_cast<int>(remap.size()) + 1);
        out.labels[i] = it->second;
    }
    out.k = static_cast<int>(remap.size());
    return out;
}

ClusterAssignment cluster_bundles(const std::vector<FeatureBundle>& bundles,
                                  const ClusteringOptions& opts, Rng& rng) {
    const LocalBandwidths bw = opts.bandwidth == BandwidthMode::LocallyScaled
                                   ? compute_local_bandwidths(bundles)
                                   : compute_global_bandwidths(bundles, opts.cosine);
    const Eigen::MatrixXd S = build_similarity(bundles, bw, opts.cosine);
    const Eigen::MatrixXd S_B = binarize_similarity(S);
    const Eigen::MatrixXd L = normalized_laplacian(S_B);
    const SpectralEmbedding embed = spectral_embed(L, opts.eta, opts.spectrum);
    return kmeans_rows(embed.embedding, embed.k, rng, opts.kmeans);
}

ClusterAssignment cluster_images(const std::vector<Image>& images, const ClusteringOptions& opts,
                                 Rng& rng) {
    if (images.size() < 2) throw InvalidInputError("cluster_images needs at least two images");
    std::vector<NoiseResidual> enhanced;
    enhanced.reserve(images.size());
    for (const auto& img : images)
        enhanced.push_back(enhance_residual(extract_residual(img, opts.denoise),
                                            opts.enhance_alpha));
    const auto bundles = make_feature_bundles(images, enhanced);
    return cluster_bundles(bundles, opts, rng);
}

}  // namespace phylo
