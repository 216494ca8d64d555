#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "ndeflaw/geometry.hpp"
#include "ndeflaw/image.hpp"

namespace nde {

struct VolumeConfig {
    double lambda = 100.0;       // penalty on negative corrected pixels, > 1
    double a_min = 1.0;          // search bounds for half-extents, pixels
    double a_max = 0.0;          // 0 = min(n1, n2) / 2 at run time
    int grid_points = 10;        // per axis in the (a, b, theta) start grid
    int short_runs = 5;          // best grid points promoted to short runs
    int short_iterations = 10;
    double tolerance = 1e-6;     // relative volume change at convergence
    int max_iterations = 200;
    bool use_median_bias = false;
    bool axis_aligned = false;   // fix theta = 0 (rectangle comparison mode)

    double effective_a_max(int n1, int n2) const;
};

struct Indication {
    RegionPair pair;
    double signal_peak = 0.0;    // bias-corrected peak inside the inner region
    double noise_peak = 0.0;     // bias-corrected peak over the annulus
    double noise_avg = 0.0;      // bias-corrected mean over the annulus
    double snr = 0.0;
    double amplitude = 0.0;      // center-pixel intensity of the candidate
    double scaled_amplitude = 0.0;
    double volume = 0.0;
    double clipped_fraction = 0.0;  // share of region pixels outside the image
    std::optional<std::pair<int, int>> merged_from;
};

/// Regularized region volume: bias-correct by the mean outside `inner`,
/// then sum corrected intensities inside, weighting nonpositive ones by
/// lambda.
double volume(const ImageGrid& img, const Region& inner, double lambda,
              bool use_median_bias = false);

/// Principled regularization weight for minimum detectable contrast xi:
/// xi / [phi(-xi) - xi * Phi(-xi)] + 1.
double lambda_xi(double xi);

/// Expected volume of a candidate region around a noise-free signature tau
/// under white noise of scale sigma.
double expected_volume(const ImageGrid& tau, double sigma, double lambda, const Region& inner);

/// Per-pixel contribution to the expected volume.
double expected_volume_term(double t, double sigma, double lambda);

std::pair<Region, double> optimize_ellipse(const ImageGrid& img, Pixel center,
                                           const VolumeConfig& cfg);
/// Same schedule with rectangle membership.
std::pair<Region, double> optimize_region(const ImageGrid& img, Pixel center,
                                          const VolumeConfig& cfg, Shape shape);

Indication extract_features(const ImageGrid& img, const RegionPair& pair,
                            bool use_median_bias = false);

/// Candidate centers: interior 3x3 local maxima, plateau ties resolved to the
/// lexicographically smallest pixel. Candidates below scaled amplitude rho
/// are dropped; survivors get an optimized region pair and features.
std::vector<Indication> detect_indications(const ImageGrid& img, const VolumeConfig& cfg,
                                           double rho, Shape shape = Shape::Ellipse);

std::vector<Pixel> local_maxima(const ImageGrid& img);

/// Paired-hotspot extension: nearby low-SNR indications are re-optimized
/// around their midpoint and replaced when the merged SNR beats both.
std::vector<Indication> merge_pairs(const ImageGrid& img, std::vector<Indication> indications,
                                    double closeness, double snr_threshold,
                                    const VolumeConfig& cfg, Shape shape = Shape::Ellipse);

std::string indication_to_json(const Indication& ind);

}  // namespace nde
