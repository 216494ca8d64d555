#include "ndeflaw/baselines.hpp"

#include "ndeflaw/decision.hpp"
#include "ndeflaw/stats.hpp"

namespace nde {

std::pair<Region, double> optimize_rectangle(const ImageGrid& img, Pixel center,
                                             const VolumeConfig& cfg) {
    return optimize_region(img, center, cfg, Shape::Rectangle);
}

double peak_amplitude(const ImageGrid& raw_img) {
    return raw_img.max();
}

double calibrate_zth(const std::vector<double>& noise_peaks, double target_pfa) {
    if (noise_peaks.empty()) throw error("calibrate_zth: empty noise peak set");
    if (target_pfa <= 0 || target_pfa >= 1) throw error("calibrate_zth: PFA must be in (0,1)");
    return quantile(noise_peaks, 1.0 - target_pfa);
}

}  // namespace nde
