#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ndeflaw/extraction.hpp"
#include "ndeflaw/image.hpp"

namespace nde {

enum class Method { Ellipse, Rectangle, PeakAmp };

Method method_from_string(const std::string& s);
std::string method_name(Method m);

struct DetectionPolicy {
    double alpha = 2.5;
    double target_pfa = 0.03;
    bool calibrated = false;
};

struct Decision {
    double d_metric = 0.0;
    double e_th = 0.0;
    bool detected = false;
    bool log_domain = true;  // false when the linear-rule fallback was used
};

/// (1 - PFA) empirical quantile of noise SNRs (interpolated order statistics).
double calibrate_alpha(const std::vector<double>& noise_snrs, double target_pfa);

/// e_th = alpha * noise_peak + (1 - alpha) * noise_avg;
/// D = log10(signal_peak) - log10(e_th), detection when D > 0. Falls back to
/// the equivalent linear rule when either log operand is nonpositive.
Decision decide(const Indication& ind, double alpha);

struct PipelineConfig {
    double fwhm = 4.71;
    VolumeConfig volume;
    double rho = 0.9;
    double merge_distance = 10.0;
    double merge_snr = 2.5;
    Method method = Method::Ellipse;
};

/// Best indication (highest SNR) of one image under the full pipeline:
/// matched filter, candidate detection, paired-hotspot merge.
std::optional<Indication> best_indication(const ImageGrid& img, const PipelineConfig& cfg);

struct ClassifyRow {
    std::string specimen;
    std::optional<double> flaw_size;
    double d_metric = 0.0;
    double snr = 0.0;
    bool detected = false;
    bool ok = true;
    std::string error_message;
};

std::vector<ClassifyRow> classify_dataset(const std::vector<SpecimenRecord>& manifest,
                                          const DetectionPolicy& policy,
                                          const PipelineConfig& cfg);

}  // namespace nde
