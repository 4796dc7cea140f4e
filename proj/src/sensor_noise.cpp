#include "phylo/sensor_noise.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "phylo/error.hpp"

namespace phylo {

namespace {

// Daubechies 8-tap analysis pair (4 vanishing moments), sum(h) = sqrt(2).
constexpr int kTaps = 8;
constexpr double kScaling[kTaps] = {
    0.23037781330885523,  0.7148465705525415,   0.6308807679295904,
    -0.02798376941698385, -0.18703481171888114, 0.030841381835986965,
    0.032883011666982945, -0.010597401784997278};

constexpr int kLevels = 4;
constexpr int kBlockMultiple = 1 << kLevels;

double wavelet_tap(int k) { return (k % 2 == 0 ? 1.0 : -1.0) * kScaling[kTaps - 1 - k]; }

}  // namespace

namespace detail {

void dwt_step(const std::vector<double>& in, std::vector<double>& out) {
    const int n = static_cast<int>(in.size());
    const int half = n / 2;
    out.assign(n, 0.0);
    for (int i = 0; i < half; ++i) {
        double a = 0.0, d = 0.0;
        for (int k = 0; k < kTaps; ++k) {
            const double x = in[(2 * i + k) % n];
            a += kScaling[k] * x;
            d += wavelet_tap(k) * x;
        }
        out[i] = a;
        out[half + i] = d;
    }
}

void idwt_step(const std::vector<double>& in, std::vector<double>& out) {
    const int n = static_cast<int>(in.size());
    const int half = n / 2;
    out.assign(n, 0.0);
    for (int i = 0; i < half; ++i) {
        for (int k = 0; k < kTaps; ++k) {
            out[(2 * i + k) % n] += kScaling[k] * in[i] + wavelet_tap(k) * in[half + i];
        }
    }
}

}  // namespace detail

namespace {

// In-place Mallat layout over the top-left s x s region of an n x n grid.
void dwt2_level(std::vector<double>& grid, int n, int s) {
    std::vector<double> line(s), coeffs;
    for (int y = 0; y < s; ++y) {
        for (int x = 0; x < s; ++x) line[x] = grid[static_cast<size_t>(y) * n + x];
        detail::dwt_step(line, coeffs);
        for (int x = 0; x < s; ++x) grid[static_cast<size_t>(y) * n + x] = coeffs[x];
    }
    for (int x = 0; x < s; ++x) {
        for (int y = 0; y < s; ++y) line[y] = grid[static_cast<size_t>(y) * n + x];
        detail::dwt_step(line, coeffs);
        for (int y = 0; y < s; ++y) grid[static_cast<size_t>(y) * n + x] = coeffs[y];
    }
}

void idwt2_level(std::vector<double>& grid, int n, int s) {
    std::vector<double> line(s), signal;
    for (int x = 0; x < s; ++x) {
        for (int y = 0; y < s; ++y) line[y] = grid[static_cast<size_t>(y) * n + x];
        detail::idwt_step(line, signal);
        for (int y = 0; y < s; ++y) grid[static_cast<size_t>(y) * n + x] = signal[y];
    }
    for (int y = 0; y < s; ++y) {
        for (int x = 0; x < s; ++x) line[x] = grid[static_cast<size_t>(y) * n + x];
        detail::idwt_step(line, signal);
        for (int x = 0; x < s; ++x) grid[static_cast<size_t>(y) * n + x] = signal[x];
    }
}

// Mean of c^2 over a w x w window with replicated borders, brute force on
// the (at most side/2 sized) subband.
void local_energy(const std::vector<double>& sub, int m, int w, std::vector<double>& out) {
    const int r = w / 2;
    out.assign(sub.size(), 0.0);
    for (int y = 0; y < m; ++y)
        for (int x = 0; x < m; ++x) {
            double acc = 0.0;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    const int yy = std::clamp(y + dy, 0, m - 1);
                    const int xx = std::clamp(x + dx, 0, m - 1);
                    const double c = sub[static_cast<size_t>(yy) * m + xx];
                    acc += c * c;
                }
            out[static_cast<size_t>(y) * m + x] = acc / (w * w);
        }
}

// Wiener-attenuates one detail subband in place. The signal variance is
// the minimum over window sizes {3,5,7,9} of max(0, localEnergy - n0).
void wiener_subband(std::vector<double>& grid, int n, int y0, int x0, int m, double n0) {
    std::vector<double> sub(static_cast<size_t>(m) * m);
    for (int y = 0; y < m; ++y)
        for (int x = 0; x < m; ++x)
            sub[static_cast<size_t>(y) * m + x] = grid[static_cast<size_t>(y0 + y) * n + (x0 + x)];

    std::vector<double> est(sub.size(), std::numeric_limits<double>::infinity());
    std::vector<double> energy;
    for (int w : {3, 5, 7, 9}) {
        local_energy(sub, m, w, energy);
        for (size_t i = 0; i < est.size(); ++i)
            est[i] = std::min(est[i], std::max(0.0, energy[i] - n0));
    }
    for (size_t i = 0; i < sub.size(); ++i) sub[i] *= est[i] / (est[i] + n0);

    for (int y = 0; y < m; ++y)
        for (int x = 0; x < m; ++x)
            grid[static_cast<size_t>(y0 + y) * n + (x0 + x)] = sub[static_cast<size_t>(y) * m + x];
}

std::vector<double> pad_replicate(const Image& img, int n) {
    std::vector<double> grid(static_cast<size_t>(n) * n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            grid[static_cast<size_t>(y) * n + x] =
                img.at(std::min(y, img.side - 1), std::min(x, img.side - 1));
    return grid;
}

Image denoise_wavelet(const Image& img, double sigma0) {
    const int n = (img.side + kBlockMultiple - 1) / kBlockMultiple * kBlockMultiple;
    std::vector<double> grid = pad_replicate(img, n);

    for (int level = 0; level < kLevels; ++level) dwt2_level(grid, n, n >> level);

    const double n0 = sigma0 * sigma0;
    for (int level = 0; level < kLevels; ++level) {
        const int s = n >> level;
        const int m = s / 2;
        wiener_subband(grid, n, 0, m, m, n0);  // HL
        wiener_subband(grid, n, m, 0, m, n0);  // LH
        wiener_subband(grid, n, m, m, m, n0);  // HH
        // approximation band stays untouched
    }

    for (int level = kLevels - 1; level >= 0; --level) idwt2_level(grid, n, n >> level);

    Image out(img.side);
    for (int y = 0; y < img.side; ++y)
        for (int x = 0; x < img.side; ++x) out.at(y, x) = grid[static_cast<size_t>(y) * n + x];
    return out;
}

Image denoise_spatial(const Image& img, double sigma0) {
    const int n = img.side;
    const int r = 2;  // 5x5
    const double n0 = sigma0 * sigma0;
    Image out(n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            double sum = 0.0, sum2 = 0.0;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    const double v =
                        img.at(std::clamp(y + dy, 0, n - 1), std::clamp(x + dx, 0, n - 1));
                    sum += v;
                    sum2 += v * v;
                }
            const double cnt = (2 * r + 1) * (2 * r + 1);
            const double mean = sum / cnt;
            const double var = std::max(0.0, sum2 / cnt - mean * mean);
            const double gain = std::max(var - n0, 0.0) / std::max(var, n0);
            out.at(y, x) = mean + gain * (img.at(y, x) - mean);
        }
    return out;
}

}  // namespace

NoiseResidual extract_residual(const Image& img, const DenoiseOptions& opts) {
    const Image denoised = opts.kind == DenoiserKind::WaveletWiener
                               ? denoise_wavelet(img, opts.sigma0)
                               : denoise_spatial(img, opts.sigma0);
    NoiseResidual res;
    res.side = img.side;
    res.values.resize(img.pixels.size());
    double mean = 0.0;
    for (size_t i = 0; i < res.values.size(); ++i) {
        res.values[i] = img.pixels[i] - denoised.pixels[i];
        mean += res.values[i];
    }
    mean /= static_cast<double>(res.values.size());
    for (double& v : res.values) v -= mean;
    return res;
}

double enhance_coefficient(double x, double alpha) {
    return x * std::exp(-x * x / (2.0 * alpha * alpha));
}

NoiseResidual enhance_residual(const NoiseResidual& res, double alpha) {
    if (!(alpha > 0.0)) throw InvalidInputError("enhance_residual: alpha must be positive");
    NoiseResidual out;
    out.side = res.side;
    out.values.resize(res.values.size());
    double mean = 0.0;
    for (size_t i = 0; i < res.values.size(); ++i) {
        out.values[i] = enhance_coefficient(res.values[i], alpha);
        mean += out.values[i];
    }
    mean /= static_cast<double>(out.values.size());
    for (double& v : out.values) v -= mean;
    return out;
}

double residual_distance(const NoiseResidual& a, const NoiseResidual& b) {
    if (a.side != b.side || a.values.size() != b.values.size())
        throw InvalidInputError("residual_distance: dimension mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i) {
        const double d = a.values[i] - b.values[i];
        acc += d * d;
    }
    return acc;
}

Eigen::MatrixXd residual_distance_matrix(const std::vector<NoiseResidual>& residuals) {
    const int n = static_cast<int>(residuals.size());
    Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double d = residual_distance(residuals[i], residuals[j]);
            dist(i, j) = d;
            dist(j, i) = d;
        }
    return dist;
}

std::vector<double> power_spectrum(const NoiseResidual& res) {
    const int n = res.side;
    using cd = std::complex<double>;
    // Separable naive DFT; residual grids are small.
    std::vector<cd> rows(static_cast<size_t>(n) * n);
    for (int y = 0; y < n; ++y)
        for (int u = 0; u < n; ++u) {
            cd acc = 0.0;
            for (int x = 0; x < n; ++x) {
                const double ang = -2.0 * M_PI * u * x / n;
                acc += res.at(y, x) * cd(std::cos(ang), std::sin(ang));
            }
            rows[static_cast<size_t>(y) * n + u] = acc;
        }
    std::vector<double> psd(static_cast<size_t>(n) * n);
    for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v) {
            cd acc = 0.0;
            for (int y = 0; y < n; ++y) {
                const double ang = -2.0 * M_PI * v * y / n;
                acc += rows[static_cast<size_t>(y) * n + u] * cd(std::cos(ang), std::sin(ang));
            }
            psd[static_cast<size_t>(v) * n + u] = std::norm(acc);
        }
    return psd;
}

void write_residual_cache(const NoiseResidual& res, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out.write("PRNU", 4);
    const unsigned char version = 1;
    out.put(static_cast<char>(version));
    const std::uint16_t side = static_cast<std::uint16_t>(res.side);
    const unsigned char side_le[2] = {static_cast<unsigned char>(side & 0xff),
                                      static_cast<unsigned char>(side >> 8)};
    out.write(reinterpret_cast<const char*>(side_le), 2);
    for (double v : res.values) {
        const float f = static_cast<float>(v);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        const unsigned char le[4] = {static_cast<unsigned char>(bits & 0xff),
                                     static_cast<unsigned char>((bits >> 8) & 0xff),
                                     static_cast<unsigned char>((bits >> 16) & 0xff),
                                     static_cast<unsigned char>((bits >> 24) & 0xff)};
        out.write(reinterpret_cast<const char*>(le), 4);
    }
    if (!out) throw IoError("short write to " + path);
}

NoiseResidual read_residual_cache(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "PRNU", 4) != 0)
        throw IoError(path + ": bad residual cache magic");
    const int version = in.get();
    if (version != 1) throw IoError(path + ": unsupported residual cache version");
    unsigned char side_le[2];
    in.read(reinterpret_cast<char*>(side_le), 2);
    const int side = side_le[0] | (side_le[1] << 8);
    if (!in || side <= 0) throw IoError(path + ": bad residual cache header");

    NoiseResidual res;
    res.side = side;
    res.values.resize(static_cast<size_t>(side) * side);
    for (double& v : res.values) {
        unsigned char le[4];
        in.read(reinterpret_cast<char*>(le), 4);
        if (!in) throw IoError(path + ": truncated residual cache");
        std::uint32_t bits = static_cast<std::uint32_t>(le[0]) |
                             (static_cast<std::uint32_t>(le[1]) << 8) |
                             (static_cast<std::uint32_t>(le[2]) << 16) |
                             (static_cast<std::uint32_t>(le[3]) << 24);
        float f;
        std::memcpy(&f, &bits, 4);
        v = f;
    }
    return res;
}

}  // namespace phylo
