#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ndeflaw/decision.hpp"
#include "ndeflaw/image.hpp"
#include "ndeflaw/nim.hpp"
#include "ndeflaw/rng.hpp"

namespace nde {

enum class NoiseSource { Synthetic, Resample };

struct SimConfig {
    std::uint64_t seed = 1;
    std::vector<double> sizes;        // mils; default 12 log-spaced in [20, 130]
    int replicates = 20;              // flawed images per size
    int experiments = 20;             // independent experiment repeats
    double gamma0 = -7.0;             // signal amplitude law intercept
    double gamma1 = 1.22;             // amplitude law slope
    double k = 0.0785;                // signature FWHM per mil
    NoiseSource noise_source = NoiseSource::Synthetic;
    std::string noise_pool_dir;       // resample mode
    double noise_sigma = 5e-6;        // white pixel-noise standard deviation
    double noise_band_sigma = 2.75e-6;  // per-row offset (horizontal banding) std dev
    double noise_hot_rate = 0.002;    // per-pixel probability of a hot-pixel spike
    double noise_hot_sigma = 1.5e-5;  // half-normal magnitude of hot-pixel spikes
    double noise_ar1 = 0.0;           // row-wise AR(1) coefficient, 0 = white
    int n_noise_images = 100;
    int image_n1 = 30;
    int image_n2 = 30;
    double target_pfa = 0.03;
    PipelineConfig pipeline;          // fwhm, lambda, rho, merge settings

    static SimConfig defaults();
    static SimConfig from_json(const std::string& text);
    std::string to_json() const;
};

struct MethodResult {
    std::string method;
    double threshold = 0.0;           // alpha for SNR methods, Z_th for PeakAmp
    std::vector<double> pod_curve;    // POD at each report size
    std::vector<double> a90s;         // one per experiment; NaN = not attained
    std::vector<std::string> fit_errors;
};

struct WilcoxonResult {
    double statistic = 0.0;
    double p_value = 1.0;
    bool exact = false;
    int n = 0;
};

struct ExperimentReport {
    SimConfig config;
    std::vector<double> report_sizes;
    std::vector<MethodResult> methods;  // ellipse, rectangle, peakamp
    std::map<std::string, WilcoxonResult> comparisons;
    std::string to_json() const;
};

ImageGrid inject_signal(const ImageGrid& noise_img, double size, double gamma0,
                        double gamma1, double k, std::optional<std::pair<double, double>> location,
                        Rng& rng);

ImageGrid make_noise(const SimConfig& cfg, Rng& rng);

ExperimentReport run_comparison(const SimConfig& cfg);

/// Paired two-sided Wilcoxon signed-rank test. Zero differences are dropped,
/// tied magnitudes mid-ranked; exact by sign enumeration for n <= 20, normal
/// approximation with continuity correction beyond.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace nde
