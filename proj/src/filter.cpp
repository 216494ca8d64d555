#include "ndeflaw/filter.hpp"

#include <algorithm>
#include <cmath>

namespace nde {

GaussianKernel make_kernel(double fwhm) {
    if (fwhm <= 0) throw error("make_kernel: FWHM must be positive");
    GaussianKernel k;
    k.fwhm = fwhm;
    k.sigma = fwhm / kFwhmPerSigma;
    k.half_width = static_cast<int>(std::ceil(3.0 * k.sigma));
    const int s = 2 * k.half_width + 1;
    k.weights.resize(static_cast<std::size_t>(s) * s);
    double total = 0.0;
    for (int dv = -k.half_width; dv <= k.half_width; ++dv)
        for (int du = -k.half_width; du <= k.half_width; ++du) {
            double w = std::exp(-(du * du + dv * dv) / (2.0 * k.sigma * k.sigma));
            k.weights[static_cast<std::size_t>(dv + k.half_width) * s + (du + k.half_width)] = w;
            total += w;
        }
    for (double& w : k.weights) w /= total;
    return k;
}

namespace {

// Symmetric (half-sample) reflection: ..., 1, 0 | 0, 1, ..., n-1 | n-1, n-2, ...
inline int reflect(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -1 - i;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

}  // namespace

ImageGrid matched_filter(const ImageGrid& img, const GaussianKernel& kernel) {
    const int hw = kernel.half_width;
    if (hw >= std::min(img.n1(), img.n2()))
        throw error("matched_filter: kernel half-width exceeds image dimensions");
    std::vector<double> out(img.data().size());
    for (int v = 0; v < img.n2(); ++v) {
        for (int u = 0; u < img.n1(); ++u) {
            double acc = 0.0;
            for (int dv = -hw; dv <= hw; ++dv) {
                const int vv = reflect(v + dv, img.n2());
                for (int du = -hw; du <= hw; ++du) {
                    const int uu = reflect(u + du, img.n1());
                    acc += kernel.weight(du, dv) * img.at(uu, vv);
                }
            }
            out[static_cast<std::size_t>(v) * img.n1() + u] = acc;
        }
    }
    return ImageGrid(img.n1(), img.n2(), std::move(out));
}

}  // namespace nde
