// Acceptance gate: one self-contained check per shipping criterion.
// Usage: acceptance [criterion-number]; with no argument all criteria run.
// Each check prints exactly one "criterion N: PASS|FAIL" line.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "ndeflaw/baselines.hpp"
#include "ndeflaw/decision.hpp"
#include "ndeflaw/filter.hpp"
#include "ndeflaw/nim.hpp"
#include "ndeflaw/simkit.hpp"
#include "ndeflaw/stats.hpp"

using namespace nde;

namespace {

std::filesystem::path g_exe_dir;

double median(std::vector<double> xs) {
    return quantile(std::move(xs), 0.5);
}

// ---------------------------------------------------------------------------
// 1. Closed-form regularization weight anchors and root cross-check.
bool criterion1() {
    if (std::abs(lambda_xi(1.6449) - 79.73) > 0.05) return false;
    if (std::abs(lambda_xi(1.9600) - 208.49) > 0.2) return false;
    // the closed form solves xi [1 + (lambda-1) Phi(-xi)] = (lambda-1) phi(-xi)
    for (double xi : {0.5, 1.0, 2.0, 3.0}) {
        auto h = [xi](double lam) {
            return xi * (1.0 + (lam - 1.0) * norm_cdf(-xi)) - (lam - 1.0) * norm_pdf(-xi);
        };
        double lo = 1.0 + 1e-12, hi = 1e9;
        if (h(lo) <= 0.0 || h(hi) >= 0.0) return false;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (h(mid) > 0.0 ? lo : hi) = mid;
        }
        if (std::abs(lambda_xi(xi) - 0.5 * (lo + hi)) > 1e-6) return false;
        if (std::abs(h(lambda_xi(xi))) > 1e-9) return false;
    }
    return true;
}

// 2. Outer region area identity over random half-extents.
bool criterion2() {
    Rng rng(2);
    for (int i = 0; i < 10000; ++i) {
        const double a = rng.uniform(1e-9, 50.0);
        const double b = rng.uniform(1e-9, 50.0);
        const double d = equal_area_delta(a, b);
        if (std::abs((a + d) * (b + d) - 2.0 * a * b) > 1e-12 * std::max(1.0, 2.0 * a * b))
            return false;
    }
    return true;
}

// 3. Monte-Carlo mean of the region volume vs its closed-form expectation.
bool criterion3() {
    struct Config {
        double height;  // signature plateau level, 0 = all-noise
        double sigma;
        double lambda;
    };
    const std::vector<Config> configs = {
        {0.0, 1.0, 100.0}, {3.0, 1.0, 100.0}, {2.0, 0.5, 50.0},
        {5.0, 2.0, 2.0},   {1.0, 1.0, 200.0},
    };
    // Large image so the estimated background mean is a near-noiseless zero;
    // the plateau signature sits strictly inside the evaluated region.
    const int n = 41, c = 20, draws = 10000;
    const Region inner{Shape::Ellipse, static_cast<double>(c), static_cast<double>(c),
                       4.0, 3.0, 0.3};
    const Region core{Shape::Ellipse, static_cast<double>(c), static_cast<double>(c),
                      2.5, 1.8, 0.3};
    Rng root(3);
    for (std::size_t ci = 0; ci < configs.size(); ++ci) {
        const auto& cf = configs[ci];
        std::vector<double> tau(n * n, 0.0);
        for (int v = 0; v < n; ++v)
            for (int u = 0; u < n; ++u)
                if (core.contains(u, v)) tau[v * n + u] = cf.height;
        const ImageGrid tau_img(n, n, tau);
        const double expected = expected_volume(tau_img, cf.sigma, cf.lambda, inner);

        // all-noise case: verify the per-pixel closed form too
        if (cf.height == 0.0) {
            const double per_px = -(cf.lambda - 1.0) * cf.sigma / std::sqrt(2 * std::numbers::pi);
            const double npix = static_cast<double>(rasterize(inner, n, n).size());
            if (std::abs(expected - npix * per_px) > 1e-9 * std::abs(expected)) return false;
        }

        std::vector<double> vols;
        Rng rng = root.derive(ci);
        for (int d = 0; d < draws; ++d) {
            std::vector<double> data = tau;
            for (double& px : data) px += cf.sigma * rng.normal();
            vols.push_back(volume(ImageGrid(n, n, std::move(data)), inner, cf.lambda));
        }
        const double se = std::sqrt(variance(vols) / draws);
        if (std::abs(mean(vols) - expected) > 3.0 * se) return false;
    }
    return true;
}

// 4. The true-boundary region beats oversized, undersized and misaligned ones.
bool criterion4() {
    const int n = 30, c = 15, draws = 1000;
    const double a = 6.0, b = 3.0, theta = std::numbers::pi / 4, height = 2.0, lambda = 100.0;
    const Region truth{Shape::Ellipse, static_cast<double>(c), static_cast<double>(c), a, b, theta};
    const Region over{Shape::Ellipse, truth.cu, truth.cv, 1.5 * a, 1.5 * b, theta};
    const Region under{Shape::Ellipse, truth.cu, truth.cv, 0.5 * a, 0.5 * b, theta};
    const Region turned{Shape::Ellipse, truth.cu, truth.cv, a, b, theta + std::numbers::pi / 4};

    // plateau signature: height inside the true boundary, zero outside
    std::vector<double> tau(n * n, 0.0);
    for (int v = 0; v < n; ++v)
        for (int u = 0; u < n; ++u)
            if (truth.contains(u, v)) tau[v * n + u] = height;

    Rng rng(4);
    std::vector<std::vector<double>> gaps(3);
    for (int d = 0; d < draws; ++d) {
        std::vector<double> data = tau;
        for (double& px : data) px += rng.normal();
        const ImageGrid img(n, n, std::move(data));
        const double vt = volume(img, truth, lambda);
        gaps[0].push_back(vt - volume(img, over, lambda));
        gaps[1].push_back(vt - volume(img, under, lambda));
        gaps[2].push_back(vt - volume(img, turned, lambda));
    }
    for (const auto& g : gaps) {
        const double se = std::sqrt(variance(g) / draws);
        if (mean(g) <= 3.0 * se) return false;
    }
    return true;
}

// 5. The optimizer recovers a known elliptical boundary from noisy images.
bool criterion5() {
    const int n = 30, c = 15;
    const double a = 6.0, b = 3.0, theta = std::numbers::pi / 4;
    const Region truth{Shape::Ellipse, static_cast<double>(c), static_cast<double>(c), a, b, theta};
    Rng root(5);
    int hits = 0;
    for (int s = 0; s < 50; ++s) {
        Rng rng = root.derive(s);
        std::vector<double> data;
        for (int v = 0; v < n; ++v)
            for (int u = 0; u < n; ++u)
                data.push_back((truth.contains(u, v) ? 5.0 : 0.0) + rng.normal());
        VolumeConfig cfg;
        const auto [region, vol] = optimize_ellipse(ImageGrid(n, n, std::move(data)),
                                                    Pixel{c, c}, cfg);
        double dth = std::fmod(std::abs(region.theta - theta), std::numbers::pi);
        dth = std::min(dth, std::numbers::pi - dth);
        if (std::abs(region.a - a) <= 1.0 && std::abs(region.b - b) <= 1.0 &&
            dth <= 10.0 * std::numbers::pi / 180.0)
            ++hits;
    }
    return hits >= 45;
}

// 6. Stronger negative-pixel penalties never grow the fitted region.
bool criterion6() {
    std::vector<double> medians;
    for (double lam : {2.0, 100.0, 200.0}) {
        std::vector<double> counts;
        for (int s = 0; s < 20; ++s) {
            Rng rng(600 + s);
            const int n = 24, c = 12;
            std::vector<double> data;
            for (int v = 0; v < n; ++v)
                for (int u = 0; u < n; ++u) {
                    const double r2 = (u - c) * (u - c) + (v - c) * (v - c);
                    data.push_back(1.5 * std::exp(-r2 / 18.0) + rng.normal());
                }
            VolumeConfig cfg;
            cfg.lambda = lam;
            const auto [region, vol] = optimize_ellipse(ImageGrid(n, n, std::move(data)),
                                                        Pixel{c, c}, cfg);
            counts.push_back(static_cast<double>(rasterize(region, n, n).size()));
        }
        medians.push_back(median(counts));
    }
    return medians[0] >= medians[1] && medians[1] >= medians[2];
}

// 7. SNR > alpha, peak > threshold and D > 0 are the same rule.
bool criterion7() {
    Rng rng(7);
    for (int i = 0; i < 10000; ++i) {
        Indication ind;
        ind.noise_avg = rng.uniform(-2.0, 2.0);
        ind.noise_peak = ind.noise_avg + rng.uniform(1e-6, 3.0);
        ind.signal_peak = ind.noise_avg + rng.uniform(1e-6, 30.0);
        ind.snr = (ind.signal_peak - ind.noise_avg) / (ind.noise_peak - ind.noise_avg);
        const double alpha = rng.uniform(0.5, 5.0);
        const Decision dec = decide(ind, alpha);
        const bool by_snr = ind.snr > alpha;
        const bool by_peak = ind.signal_peak > alpha * ind.noise_peak +
                                              (1.0 - alpha) * ind.noise_avg;
        const bool by_d = dec.d_metric > 0.0;
        if (dec.detected != by_snr || by_snr != by_peak || by_peak != by_d) return false;
    }
    return true;
}

// 8. Calibrated thresholds hit the target false-alarm rate on noise.
bool criterion8() {
    SimConfig cfg = SimConfig::defaults();
    const int n_images = 500;
    const GaussianKernel kernel = make_kernel(cfg.pipeline.fwhm);
    const Rng root(8);

    std::vector<double> snr_e, snr_r, peaks;
    for (int i = 0; i < n_images; ++i) {
        Rng rng = root.derive(i);
        const ImageGrid noise = make_noise(cfg, rng);
        const ImageGrid filtered = matched_filter(noise, kernel);
        auto best = [&](Shape shape) -> double {
            auto inds = detect_indications(filtered, cfg.pipeline.volume, cfg.pipeline.rho, shape);
            inds = merge_pairs(filtered, std::move(inds), cfg.pipeline.merge_distance,
                               cfg.pipeline.merge_snr, cfg.pipeline.volume, shape);
            double s = -1e300;
            for (const auto& ind : inds) s = std::max(s, ind.snr);
            return s;  // -inf-like when no candidate: never detected
        };
        snr_e.push_back(best(Shape::Ellipse));
        snr_r.push_back(best(Shape::Rectangle));
        peaks.push_back(peak_amplitude(noise));
    }
    auto observed_pfa = [n_images](const std::vector<double>& scores, double threshold) {
        int fa = 0;
        for (double s : scores) fa += s > threshold;
        return static_cast<double>(fa) / n_images;
    };
    const double pfa_e = observed_pfa(snr_e, calibrate_alpha(snr_e, cfg.target_pfa));
    const double pfa_r = observed_pfa(snr_r, calibrate_alpha(snr_r, cfg.target_pfa));
    const double pfa_p = observed_pfa(peaks, calibrate_zth(peaks, cfg.target_pfa));
    for (double p : {pfa_e, pfa_r, pfa_p})
        if (std::abs(p - cfg.target_pfa) > 0.01) return false;
    return true;
}

// 9. Both closed-form detection probabilities match brute-force simulation.
bool criterion9() {
    Rng rng(9);
    const int draws = 100000;

    const NimParams np{-2.2, 1.5, -1.0, 0.5, 0.35};
    for (double size : {20.0, 50.0, 80.0}) {
        const double mu_s = np.beta0 + np.beta1 * std::log10(size);
        int hits = 0;
        for (int i = 0; i < draws; ++i) {
            const double s = mu_s + np.sigma_s * rng.normal();
            const double n = np.mu_n + np.sigma_n * rng.normal();
            if (std::max(s, n) > 0.0) ++hits;
        }
        const double mc = static_cast<double>(hits) / draws;
        const double se = std::sqrt(mc * (1.0 - mc) / draws);
        if (std::abs(pod(np, size) - mc) > 3.0 * se + 1e-9) return false;
    }

    PeakAmpParams pp;
    pp.gamma0 = -7.0;
    pp.gamma1 = 1.22;
    pp.kappa_s = 0.15;
    pp.nu_n = -5.0;
    pp.kappa_n = 0.1;
    pp.z_th = 2e-5;
    const double log_th = std::log10(pp.z_th);
    for (double size : {20.0, 50.0, 80.0}) {
        const double mu_s = pp.gamma0 + pp.gamma1 * std::log10(size);
        int hits = 0;
        for (int i = 0; i < draws; ++i) {
            const double s = mu_s + pp.kappa_s * rng.normal();
            const double n = pp.nu_n + pp.kappa_n * rng.normal();
            if (std::max(s, n) > log_th) ++hits;
        }
        const double mc = static_cast<double>(hits) / draws;
        const double se = std::sqrt(mc * (1.0 - mc) / draws);
        if (std::abs(pod_peakamp(pp, size) - mc) > 3.0 * se + 1e-9) return false;
    }
    return true;
}

// 10. Parametric bootstrap: the fitted parameters center on the truth.
bool criterion10() {
    const NimParams truth{-2.5, 1.6, -0.9, 0.45, 0.3};
    Rng root(10);
    const int seeds = 20, n_obs = 200;
    std::vector<std::vector<double>> est(5);
    for (int s = 0; s < seeds; ++s) {
        Rng rng = root.derive(s);
        std::vector<FlawObs> flawed;
        std::vector<double> noise;
        for (int i = 0; i < n_obs; ++i) {
            const double size = std::pow(10.0, rng.uniform(1.2, 2.1));
            const double sig = truth.beta0 + truth.beta1 * std::log10(size) +
                               truth.sigma_s * rng.normal();
            const double noi = truth.mu_n + truth.sigma_n * rng.normal();
            flawed.push_back({std::max(sig, noi), size});
        }
        for (int i = 0; i < n_obs; ++i) noise.push_back(truth.mu_n + truth.sigma_n * rng.normal());
        const NimFit fit = fit_nim(flawed, noise);
        est[0].push_back(fit.params.beta0);
        est[1].push_back(fit.params.beta1);
        est[2].push_back(fit.params.mu_n);
        est[3].push_back(fit.params.sigma_s);
        est[4].push_back(fit.params.sigma_n);
    }
    const double target[5] = {truth.beta0, truth.beta1, truth.mu_n, truth.sigma_s, truth.sigma_n};
    for (int p = 0; p < 5; ++p) {
        const double se = std::sqrt(variance(est[p]) / seeds);
        if (std::abs(mean(est[p]) - target[p]) > 3.0 * se) return false;
    }
    return true;
}

// 11. Full comparison at the default configuration: the elliptical method
//     yields the smallest a90, the raw-peak baseline the largest, and the
//     ellipse/rectangle gap is significant.
bool criterion11() {
    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentReport report = run_comparison(SimConfig::defaults());
    const auto elapsed = std::chrono::duration_cast<std::chrono::seconds>(
                             std::chrono::steady_clock::now() - t0).count();
    if (elapsed >= 20 * 60) return false;

    std::vector<double> a90_e, a90_r, a90_p;
    for (const auto& m : report.methods) {
        std::vector<double>* dst = nullptr;
        if (m.method == "ellipse") dst = &a90_e;
        else if (m.method == "rectangle") dst = &a90_r;
        else if (m.method == "peakamp") dst = &a90_p;
        for (double v : m.a90s)
            if (std::isfinite(v)) dst->push_back(v);
    }
    if (a90_e.empty() || a90_r.empty() || a90_p.empty()) return false;
    if (!(median(a90_e) <= median(a90_r) && median(a90_r) <= median(a90_p))) return false;

    const auto it = report.comparisons.find("ellipse_vs_rectangle");
    if (it == report.comparisons.end()) return false;
    return it->second.p_value < 0.05 && median(a90_e) < median(a90_r);
}

// 12. Two faint tips merge into one region whose SNR beats both tips.
bool criterion12() {
    // A crack heating along its length: a faint ridge between two hotter tips.
    Rng root(12);
    const GaussianKernel kernel = make_kernel(3.33);
    int ok = 0, total = 0;
    for (int s = 0; s < 20; ++s) {
        Rng rng = root.derive(s);
        const int n = 30;
        std::vector<double> data;
        for (int v = 0; v < n; ++v)
            for (int u = 0; u < n; ++u) {
                const double du = u < 12 ? 12.0 - u : (u > 18 ? u - 18.0 : 0.0);
                const double dv2 = (v - 15.0) * (v - 15.0);
                const double ridge = 0.5 * std::exp(-(du * du + dv2) / 4.0);
                const double t1 = std::exp(-((u - 12.0) * (u - 12.0) + dv2) / 4.0);
                const double t2 = 0.9 * std::exp(-((u - 18.0) * (u - 18.0) + dv2) / 4.0);
                data.push_back(std::max({ridge, t1, t2}) + 0.3 * rng.normal());
            }
        const ImageGrid filtered = matched_filter(ImageGrid(n, n, std::move(data)), kernel);
        VolumeConfig cfg;
        const auto inds = detect_indications(filtered, cfg, 0.4);
        // the candidate nearest each planted tip
        auto nearest = [&](double cu, double cv) -> const Indication* {
            const Indication* best = nullptr;
            double best_d = 9.0;
            for (const auto& ind : inds) {
                const double d = (ind.pair.inner.cu - cu) * (ind.pair.inner.cu - cu) +
                                 (ind.pair.inner.cv - cv) * (ind.pair.inner.cv - cv);
                if (d < best_d) { best_d = d; best = &ind; }
            }
            return best;
        };
        const Indication* t1 = nearest(12.0, 15.0);
        const Indication* t2 = nearest(18.0, 15.0);
        if (!t1 || !t2 || t1 == t2) continue;  // tips not resolved as two candidates
        if (t1->snr >= 2.5 || t2->snr >= 2.5) continue;  // not a faint pair
        ++total;
        const auto merged = merge_pairs(filtered, {*t1, *t2}, 10.0, 2.5, cfg);
        if (merged.size() == 1 && merged[0].merged_from &&
            merged[0].snr > t1->snr && merged[0].snr > t2->snr)
            ++ok;
    }
    return total >= 10 && ok * 10 >= total * 9;  // >= 90% of usable seeds
}

// 13. The convolution agrees with a naive double loop; an impulse returns
//     the kernel weights themselves.
bool criterion13() {
    const GaussianKernel k = make_kernel(4.71);
    auto reflect = [](int i, int n) {
        while (i < 0 || i >= n) {
            if (i < 0) i = -1 - i;
            if (i >= n) i = 2 * n - 1 - i;
        }
        return i;
    };
    Rng root(13);
    for (int t = 0; t < 10; ++t) {
        Rng rng = root.derive(t);
        const int n1 = 25, n2 = 18;
        std::vector<double> data;
        for (int i = 0; i < n1 * n2; ++i) data.push_back(rng.normal());
        const ImageGrid img(n1, n2, std::move(data));
        const ImageGrid fast = matched_filter(img, k);
        for (int v = 0; v < n2; ++v)
            for (int u = 0; u < n1; ++u) {
                double s = 0.0;
                for (int dv = -k.half_width; dv <= k.half_width; ++dv)
                    for (int du = -k.half_width; du <= k.half_width; ++du)
                        s += k.weight(du, dv) *
                             img.at(reflect(u + du, n1), reflect(v + dv, n2));
                if (std::abs(fast.at(u, v) - s) > 1e-10) return false;
            }
    }
    const int n = 31, c = 15;
    std::vector<double> impulse(n * n, 0.0);
    impulse[c * n + c] = 1.0;
    const ImageGrid resp = matched_filter(ImageGrid(n, n, std::move(impulse)), k);
    for (int dv = -k.half_width; dv <= k.half_width; ++dv)
        for (int du = -k.half_width; du <= k.half_width; ++du)
            if (resp.at(c + du, c + dv) != k.weight(du, dv)) return false;
    return true;
}

// 14. The simulate subcommand is byte-for-byte reproducible.
bool criterion14() {
    namespace fs = std::filesystem;
    const fs::path cli = g_exe_dir / ".." / "nde";
    const fs::path dir = fs::temp_directory_path() / "ndeflaw-accept14";
    fs::create_directories(dir);
    const fs::path cfg_path = dir / "sim.json";
    {
        SimConfig cfg = SimConfig::defaults();
        cfg.experiments = 2;
        cfg.replicates = 4;
        cfg.n_noise_images = 30;
        cfg.sizes = {40.0, 70.0, 110.0};
        std::ofstream(cfg_path) << cfg.to_json();
    }
    auto read_all = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    if (fs::exists(cli)) {
        for (const char* out : {"r1.json", "r2.json"}) {
            const std::string cmd = "\"" + cli.string() + "\" simulate --config \"" +
                                    cfg_path.string() + "\" --out \"" + (dir / out).string() +
                                    "\" > /dev/null 2>&1";
            if (std::system(cmd.c_str()) != 0) return false;
        }
        const std::string a = read_all(dir / "r1.json");
        const std::string b = read_all(dir / "r2.json");
        return !a.empty() && a == b;
    }
    // CLI not built in this configuration: check the underlying engine
    const SimConfig cfg = SimConfig::from_json(read_all(cfg_path));
    return run_comparison(cfg).to_json() == run_comparison(cfg).to_json();
}

struct Criterion {
    int number;
    const char* summary;
    std::function<bool()> run;
};

}  // namespace

int main(int argc, char** argv) {
    g_exe_dir = std::filesystem::absolute(std::filesystem::path(argv[0])).parent_path();

    const std::vector<Criterion> criteria = {
        {1, "regularization weight closed form", criterion1},
        {2, "outer region doubles the area", criterion2},
        {3, "expected volume matches Monte Carlo", criterion3},
        {4, "true boundary maximizes mean volume", criterion4},
        {5, "optimizer recovers a known ellipse", criterion5},
        {6, "penalty strength shrinks regions", criterion6},
        {7, "detection rules are equivalent", criterion7},
        {8, "calibration hits the target false-alarm rate", criterion8},
        {9, "detection probability matches simulation", criterion9},
        {10, "model fit recovers generating parameters", criterion10},
        {11, "method ordering over 20 experiments", criterion11},
        {12, "paired faint tips merge profitably", criterion12},
        {13, "filter matches the naive convolution", criterion13},
        {14, "simulation report is byte-identical across runs", criterion14},
    };

    int selected = 0;
    if (argc > 1) selected = std::atoi(argv[1]);

    bool all_ok = true;
    for (const auto& c : criteria) {
        if (selected != 0 && c.number != selected) continue;
        bool ok = false;
        try {
            ok = c.run();
        } catch (const std::exception& e) {
            std::cout << "criterion " << c.number << ": exception: " << e.what() << "\n";
        }
        std::cout << "criterion " << c.number << ": " << (ok ? "PASS" : "FAIL")
                  << " - " << c.summary << std::endl;
        all_ok = all_ok && ok;
    }
    return all_ok ? 0 : 1;
}
