#include "ndeflaw/nim.hpp"

#include <algorithm>
#include <cmath>

#include "ndeflaw/image.hpp"
#include "ndeflaw/optim.hpp"
#include "ndeflaw/stats.hpp"

namespace nde {

double nim_loglik(const NimParams& p, const std::vector<FlawObs>& flawed,
                  const std::vector<double>& noise) {
    if (p.sigma_s <= 0 || p.sigma_n <= 0)
        throw error("nim_loglik: scale parameters must be positive");
    double ll = 0.0;
    for (const FlawObs& obs : flawed) {
        const double m = p.beta0 + p.beta1 * std::log10(obs.size);
        const double zs = (obs.response - m) / p.sigma_s;
        const double zn = (obs.response - p.mu_n) / p.sigma_n;
        // density of max(signal, noise): f_s(F_n) + F_s(f_n)
        const double dens = norm_pdf(zs) / p.sigma_s * norm_cdf(zn) +
                            norm_cdf(zs) * norm_pdf(zn) / p.sigma_n;
        ll += std::log(dens);
    }
    for (double d : noise) {
        const double zn = (d - p.mu_n) / p.sigma_n;
        ll += -0.5 * zn * zn - std::log(p.sigma_n * kSqrt2Pi);
    }
    if (!std::isfinite(ll)) throw error("nim_loglik: non-finite log-likelihood");
    return ll;
}

namespace {

double safe_loglik(const NimParams& p, const std::vector<FlawObs>& flawed,
                   const std::vector<double>& noise) {
    try {
        return nim_loglik(p, flawed, noise);
    } catch (const error&) {
        return -std::numeric_limits<double>::infinity();
    }
}

}  // namespace

NimFit fit_nim(const std::vector<FlawObs>& flawed, const std::vector<double>& noise) {
    if (noise.size() < 2) throw error("fit_nim: need at least 2 noise observations");
    {
        std::vector<double> sizes;
        for (const auto& o : flawed) sizes.push_back(o.size);
        std::sort(sizes.begin(), sizes.end());
        sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
        if (sizes.size() < 2) throw error("fit_nim: need at least 2 distinct flaw sizes");
    }

    NimParams init;
    init.mu_n = mean(noise);
    init.sigma_n = std::max(std::sqrt(variance(noise)), 1e-8);

    // Regress response on log10 size using flawed points clearly above the
    // noise floor; fall back to all flawed points when too few survive.
    const double floor90 = quantile(noise, 0.9);
    std::vector<FlawObs> high;
    for (const auto& o : flawed)
        if (o.response > floor90) high.push_back(o);
    if (high.size() < 3) high = flawed;
    {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (const auto& o : high) {
            const double x = std::log10(o.size);
            sx += x;
            sy += o.response;
            sxx += x * x;
            sxy += x * o.response;
        }
        const double n = static_cast<double>(high.size());
        const double den = n * sxx - sx * sx;
        init.beta1 = den != 0 ? (n * sxy - sx * sy) / den : 0.0;
        init.beta0 = (sy - init.beta1 * sx) / n;
        double rss = 0;
        for (const auto& o : high) {
            const double r = o.response - init.beta0 - init.beta1 * std::log10(o.size);
            rss += r * r;
        }
        init.sigma_s = std::max(std::sqrt(rss / std::max(n - 2.0, 1.0)), 1e-6);
    }

    auto pack = [](const NimParams& p) {
        return std::vector<double>{p.beta0, p.beta1, p.mu_n, std::log(p.sigma_s), std::log(p.sigma_n)};
    };
    auto unpack = [](const std::vector<double>& x) {
        NimParams p;
        p.beta0 = x[0];
        p.beta1 = x[1];
        p.mu_n = x[2];
        p.sigma_s = std::exp(x[3]);
        p.sigma_n = std::exp(x[4]);
        return p;
    };
    auto objective = [&](const std::vector<double>& x) {
        return -safe_loglik(unpack(x), flawed, noise);
    };

    const double init_ll = safe_loglik(init, flawed, noise);
    if (!std::isfinite(init_ll)) throw error("fit_nim: degenerate initialization");
    auto result = nelder_mead(objective, pack(init), {0.2, 0.2, 0.2, 0.3, 0.3}, 2000, 1e-12);
    // restart from the incumbent to escape simplex collapse
    result = nelder_mead(objective, result.x, {0.05, 0.05, 0.05, 0.1, 0.1}, 2000, 1e-12);

    NimFit fit;
    fit.init_loglik = init_ll;
    if (-result.value >= init_ll) {
        fit.params = unpack(result.x);
        fit.loglik = -result.value;
    } else {
        fit.params = init;
        fit.loglik = init_ll;
    }
    return fit;
}

double pod(const NimParams& p, double flaw) {
    if (flaw <= 0) throw error("pod: flaw size must be positive");
    const double s = norm_cdf(-(p.beta0 + p.beta1 * std::log10(flaw)) / p.sigma_s);
    const double n = norm_cdf(-p.mu_n / p.sigma_n);
    return 1.0 - s * n;
}

double pod_peakamp(const PeakAmpParams& p, double flaw) {
    if (flaw <= 0) throw error("pod_peakamp: flaw size must be positive");
    if (p.z_th <= 0) throw error("pod_peakamp: threshold must be positive");
    const double lt = std::log10(p.z_th);
    const double s = norm_cdf((lt - p.gamma0 - p.gamma1 * std::log10(flaw)) / p.kappa_s);
    const double n = norm_cdf((lt - p.nu_n) / p.kappa_n);
    return 1.0 - s * n;
}

double a90(const std::function<double(double)>& pod_fn, double lo, double hi) {
    const double target = 0.9;
    double plo = pod_fn(lo), phi = pod_fn(hi);
    if (plo >= target || phi < target)
        throw error("a90: POD 0.9 not bracketed (attained range [" + std::to_string(plo) +
                    ", " + std::to_string(phi) + "])");
    while ((hi - lo) / hi > 1e-4) {
        const double mid = std::sqrt(lo * hi);  // bisect in log scale
        if (pod_fn(mid) >= target) hi = mid;
        else lo = mid;
    }
    return hi;
}

}  // namespace nde
