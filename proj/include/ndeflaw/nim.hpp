#pragma once

#include <functional>
#include <utility>
#include <vector>

namespace nde {

/// Noise-interference model: the observed response is the larger of a
/// size-dependent signal response and a pure-noise response.
struct NimParams {
    double beta0 = 0.0;   // intercept, response units
    double beta1 = 0.0;   // slope per log10 flaw size
    double mu_n = 0.0;    // noise response mean
    double sigma_s = 1.0;
    double sigma_n = 1.0;
};

struct PeakAmpParams {
    double gamma0 = 0.0;
    double gamma1 = 0.0;
    double kappa_s = 1.0;
    double nu_n = 0.0;
    double kappa_n = 1.0;
    double z_th = 1.0;  // detection threshold, raw amplitude units
};

struct FlawObs {
    double response = 0.0;  // D for SNR methods, log10 peak for PeakAmp
    double size = 0.0;      // mils
};

double nim_loglik(const NimParams& p, const std::vector<FlawObs>& flawed,
                  const std::vector<double>& noise);

struct NimFit {
    NimParams params;
    double loglik = 0.0;
    double init_loglik = 0.0;
};

NimFit fit_nim(const std::vector<FlawObs>& flawed, const std::vector<double>& noise);

/// POD(flaw) = 1 - Phi(-(b0 + b1 log10 flaw)/sigma_s) * Phi(-mu_n/sigma_n).
double pod(const NimParams& p, double flaw);

double pod_peakamp(const PeakAmpParams& p, double flaw);

/// Smallest size with POD >= 0.9 by bisection over the bracket. Throws when
/// 0.9 is not bracketed, reporting the attained POD range.
double a90(const std::function<double(double)>& pod_fn, double lo = 1.0, double hi = 1e4);

}  // namespace nde
