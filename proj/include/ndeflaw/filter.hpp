#pragma once

#include <vector>

#include "ndeflaw/image.hpp"

namespace nde {

/// FWHM-to-sigma factor for a Gaussian profile.
inline constexpr double kFwhmPerSigma = 2.355;

/// Radially symmetric 2-D Gaussian kernel, truncated at 3 sigma and
/// renormalized to unit sum.
struct GaussianKernel {
    double fwhm = 0.0;
    double sigma = 0.0;
    int half_width = 0;
    std::vector<double> weights;  // (2*half_width+1)^2, row-major

    double weight(int du, int dv) const {
        int s = 2 * half_width + 1;
        return weights[static_cast<std::size_t>(dv + half_width) * s + (du + half_width)];
    }
};

GaussianKernel make_kernel(double fwhm);

/// Convolution with reflect (mirror) boundary handling; output dimensions
/// match the input.
ImageGrid matched_filter(const ImageGrid& img, const GaussianKernel& kernel);

}  // namespace nde
