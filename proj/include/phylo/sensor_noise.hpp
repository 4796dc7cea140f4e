#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phylo/image.hpp"

namespace phylo {

/// Zero-centered per-image noise residual, d x d row-major.
struct NoiseResidual {
    int side = 0;
    std::vector<double> values;

    double& at(int y, int x) { return values[static_cast<size_t>(y) * side + x]; }
    double at(int y, int x) const { return values[static_cast<size_t>(y) * side + x]; }
};

enum class DenoiserKind {
    WaveletWiener,  // 4-level Daubechies-8, per-subband adaptive Wiener
    SpatialWiener,  // 5x5 adaptive Wiener fallback
};

struct DenoiseOptions {
    DenoiserKind kind = DenoiserKind::WaveletWiener;
    double sigma0 = 5.0;  // assumed noise std-dev, intensity units
};

/// residual = img - denoise(img), mean-subtracted.
NoiseResidual extract_residual(const Image& img, const DenoiseOptions& opts = {});

/// The attenuation map applied per residual value: x * exp(-x^2 / (2 a^2)).
double enhance_coefficient(double x, double alpha);

/// Suppresses strong scene-correlated spikes while keeping weak noise;
/// output is re-centered to zero mean.
NoiseResidual enhance_residual(const NoiseResidual& res, double alpha);

/// Squared L2 distance, sum over (a - b)^2.
double residual_distance(const NoiseResidual& a, const NoiseResidual& b);

/// Symmetric pairwise distance matrix with a zero diagonal.
Eigen::MatrixXd residual_distance_matrix(const std::vector<NoiseResidual>& residuals);

/// Periodogram |DFT|^2 of the residual, n^2 values row-major.
std::vector<double> power_spectrum(const NoiseResidual& res);

/// Flat binary cache: magic "PRNU", version u8, side u16 LE, then side^2
/// little-endian float32 values row-major.
void write_residual_cache(const NoiseResidual& res, const std::string& path);
NoiseResidual read_residual_cache(const std::string& path);

namespace detail {
/// One level of the periodized orthogonal transform on a length-n signal
/// (n even): first half approximation, second half detail. Exposed for
/// tests of the reconstruction identity.
void dwt_step(const std::vector<double>& in, std::vector<double>& out);
void idwt_step(const std::vector<double>& in, std::vector<double>& out);
}  // namespace detail

}  // namespace phylo
