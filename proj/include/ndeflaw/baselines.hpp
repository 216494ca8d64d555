#pragma once

#include <utility>
#include <vector>

#include "ndeflaw/extraction.hpp"

namespace nde {

/// Rectangle baseline: identical objective and schedule with rectangular
/// membership.
std::pair<Region, double> optimize_rectangle(const ImageGrid& img, Pixel center,
                                             const VolumeConfig& cfg);

/// Peak intensity of the raw, unfiltered image.
double peak_amplitude(const ImageGrid& raw_img);

/// (1 - PFA) quantile of raw noise peak amplitudes.
double calibrate_zth(const std::vector<double>& noise_peaks, double target_pfa);

}  // namespace nde
