#include "ndeflaw/simkit.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "ndeflaw/baselines.hpp"
#include "ndeflaw/filter.hpp"
#include "ndeflaw/stats.hpp"

namespace nde {

using json = nlohmann::ordered_json;

SimConfig SimConfig::defaults() {
    SimConfig cfg;
    const int n = 12;
    const double lo = std::log10(20.0), hi = std::log10(130.0);
    for (int i = 0; i < n; ++i)
        cfg.sizes.push_back(std::pow(10.0, lo + (hi - lo) * i / (n - 1)));
    return cfg;
}

SimConfig SimConfig::from_json(const std::string& text) {
    SimConfig cfg = defaults();
    json j = json::parse(text);
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("sizes")) cfg.sizes = j["sizes"].get<std::vector<double>>();
    if (j.contains("replicates")) cfg.replicates = j["replicates"].get<int>();
    if (j.contains("experiments")) cfg.experiments = j["experiments"].get<int>();
    if (j.contains("gamma0")) cfg.gamma0 = j["gamma0"].get<double>();
    if (j.contains("gamma1")) cfg.gamma1 = j["gamma1"].get<double>();
    if (j.contains("k")) cfg.k = j["k"].get<double>();
    if (j.contains("noise_source")) {
        const std::string s = j["noise_source"].get<std::string>();
        if (s == "synthetic") cfg.noise_source = NoiseSource::Synthetic;
        else if (s == "resample") cfg.noise_source = NoiseSource::Resample;
        else throw error("sim config: unknown noise_source '" + s + "'");
    }
    if (j.contains("noise_pool_dir")) cfg.noise_pool_dir = j["noise_pool_dir"].get<std::string>();
    if (j.contains("noise_sigma")) cfg.noise_sigma = j["noise_sigma"].get<double>();
    if (j.contains("noise_band_sigma")) cfg.noise_band_sigma = j["noise_band_sigma"].get<double>();
    if (j.contains("noise_hot_rate")) cfg.noise_hot_rate = j["noise_hot_rate"].get<double>();
    if (j.contains("noise_hot_sigma")) cfg.noise_hot_sigma = j["noise_hot_sigma"].get<double>();
    if (j.contains("noise_ar1")) cfg.noise_ar1 = j["noise_ar1"].get<double>();
    if (j.contains("n_noise_images")) cfg.n_noise_images = j["n_noise_images"].get<int>();
    if (j.contains("image_n1")) cfg.image_n1 = j["image_n1"].get<int>();
    if (j.contains("image_n2")) cfg.image_n2 = j["image_n2"].get<int>();
    if (j.contains("target_pfa")) cfg.target_pfa = j["target_pfa"].get<double>();
    if (j.contains("fwhm")) cfg.pipeline.fwhm = j["fwhm"].get<double>();
    if (j.contains("lambda")) cfg.pipeline.volume.lambda = j["lambda"].get<double>();
    if (j.contains("rho")) cfg.pipeline.rho = j["rho"].get<double>();
    if (j.contains("merge_distance")) cfg.pipeline.merge_distance = j["merge_distance"].get<double>();
    if (j.contains("merge_snr")) cfg.pipeline.merge_snr = j["merge_snr"].get<double>();
    for (double s : cfg.sizes)
        if (s <= 0) throw error("sim config: flaw sizes must be positive");
    if (cfg.replicates < 1 || cfg.experiments < 1 || cfg.n_noise_images < 1)
        throw error("sim config: counts must be positive");
    return cfg;
}

namespace {

json config_json(const SimConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["sizes"] = cfg.sizes;
    j["replicates"] = cfg.replicates;
    j["experiments"] = cfg.experiments;
    j["gamma0"] = cfg.gamma0;
    j["gamma1"] = cfg.gamma1;
    j["k"] = cfg.k;
    j["noise_source"] = cfg.noise_source == NoiseSource::Synthetic ? "synthetic" : "resample";
    j["noise_pool_dir"] = cfg.noise_pool_dir;
    j["noise_sigma"] = cfg.noise_sigma;
    j["noise_band_sigma"] = cfg.noise_band_sigma;
    j["noise_hot_rate"] = cfg.noise_hot_rate;
    j["noise_hot_sigma"] = cfg.noise_hot_sigma;
    j["noise_ar1"] = cfg.noise_ar1;
    j["n_noise_images"] = cfg.n_noise_images;
    j["image_n1"] = cfg.image_n1;
    j["image_n2"] = cfg.image_n2;
    j["target_pfa"] = cfg.target_pfa;
    j["fwhm"] = cfg.pipeline.fwhm;
    j["lambda"] = cfg.pipeline.volume.lambda;
    j["rho"] = cfg.pipeline.rho;
    j["merge_distance"] = cfg.pipeline.merge_distance;
    j["merge_snr"] = cfg.pipeline.merge_snr;
    return j;
}

}  // namespace

std::string SimConfig::to_json() const {
    return config_json(*this).dump(2);
}

ImageGrid inject_signal(const ImageGrid& noise_img, double size, double gamma0,
                        double gamma1, double k, std::optional<std::pair<double, double>> location,
                        Rng& rng) {
    if (size <= 0) throw error("inject_signal: flaw size must be positive");
    const double peak = std::pow(10.0, gamma0 + gamma1 * std::log10(size));
    const double fwhm = k * size;
    const double sigma = fwhm / kFwhmPerSigma;
    const double radius = 3.0 * sigma;

    double cu, cv;
    if (location) {
        cu = location->first;
        cv = location->second;
    } else {
        // uniform over the central half of the grid, clipped to where the
        // 3-sigma footprint fits
        auto band = [&](int n) {
            const double lo = std::max(n * 0.25, radius - 0.5);
            const double hi = std::min(n * 0.75, n - 0.5 - radius);
            if (hi < lo) throw error("inject_signal: signature footprint does not fit inside the image");
            return std::pair{lo, hi};
        };
        auto [ulo, uhi] = band(noise_img.n1());
        auto [vlo, vhi] = band(noise_img.n2());
        cu = rng.uniform(ulo, uhi);
        cv = rng.uniform(vlo, vhi);
    }
    if (cu - radius < -0.5 || cu + radius > noise_img.n1() - 0.5 ||
        cv - radius < -0.5 || cv + radius > noise_img.n2() - 0.5)
        throw error("inject_signal: signature footprint does not fit inside the image");

    std::vector<double> data = noise_img.data();
    for (int v = 0; v < noise_img.n2(); ++v)
        for (int u = 0; u < noise_img.n1(); ++u) {
            const double r2 = (u - cu) * (u - cu) + (v - cv) * (v - cv);
            data[static_cast<std::size_t>(v) * noise_img.n1() + u] +=
                peak * std::exp(-r2 / (2.0 * sigma * sigma));
        }
    return ImageGrid(noise_img.n1(), noise_img.n2(), std::move(data));
}

ImageGrid make_noise(const SimConfig& cfg, Rng& rng) {
    if (cfg.noise_source == NoiseSource::Resample) {
        std::vector<std::string> pool;
        for (const auto& entry : std::filesystem::directory_iterator(cfg.noise_pool_dir))
            if (entry.is_regular_file()) pool.push_back(entry.path().string());
        std::sort(pool.begin(), pool.end());
        if (pool.empty()) throw error("make_noise: empty noise pool directory " + cfg.noise_pool_dir);
        return load_image(pool[rng.below(pool.size())]);
    }
    std::vector<double> data(static_cast<std::size_t>(cfg.image_n1) * cfg.image_n2);
    const double rho = cfg.noise_ar1;
    for (int v = 0; v < cfg.image_n2; ++v) {
        double prev = 0.0;
        for (int u = 0; u < cfg.image_n1; ++u) {
            double x;
            if (rho != 0.0 && u > 0)
                x = rho * prev + std::sqrt(1.0 - rho * rho) * cfg.noise_sigma * rng.normal();
            else
                x = cfg.noise_sigma * rng.normal();
            data[static_cast<std::size_t>(v) * cfg.image_n1 + u] = x;
            prev = x;
        }
        if (cfg.noise_band_sigma > 0.0) {
            // Per-row offset emulating the horizontal banding typical of IR cameras.
            const double band = cfg.noise_band_sigma * rng.normal();
            for (int u = 0; u < cfg.image_n1; ++u)
                data[static_cast<std::size_t>(v) * cfg.image_n1 + u] += band;
        }
    }
    if (cfg.noise_hot_rate > 0.0 && cfg.noise_hot_sigma > 0.0) {
        // Sparse positive hot-pixel spikes, another common IR sensor artifact.
        for (double& px : data)
            if (rng.uniform() < cfg.noise_hot_rate)
                px += std::abs(cfg.noise_hot_sigma * rng.normal());
    }
    return ImageGrid(cfg.image_n1, cfg.image_n2, std::move(data));
}

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw error("wilcoxon: unequal sample lengths");
    std::vector<double> diffs;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        if (d != 0.0) diffs.push_back(d);
    }
    const int n = static_cast<int>(diffs.size());
    if (n == 0) throw error("wilcoxon: all paired differences are zero");
    if (n < 5) throw error("wilcoxon: need at least 5 nonzero differences");

    // midranks of |d|
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int i, int j) {
        return std::fabs(diffs[i]) < std::fabs(diffs[j]);
    });
    std::vector<double> rank(n);
    std::vector<int> tie_sizes;
    for (int i = 0; i < n;) {
        int j = i;
        while (j < n && std::fabs(diffs[order[j]]) == std::fabs(diffs[order[i]])) ++j;
        const double r = (i + j + 1) / 2.0;  // average of ranks i+1..j
        for (int t = i; t < j; ++t) rank[order[t]] = r;
        tie_sizes.push_back(j - i);
        i = j;
    }

    double w_plus = 0.0;
    for (int i = 0; i < n; ++i)
        if (diffs[i] > 0) w_plus += rank[i];

    WilcoxonResult res;
    res.statistic = w_plus;
    res.n = n;
    if (n <= 20) {
        // exact by enumerating all sign assignments
        const std::uint64_t total = 1ULL << n;
        std::uint64_t le = 0, ge = 0;
        const double eps = 1e-9;
        for (std::uint64_t mask = 0; mask < total; ++mask) {
            double s = 0.0;
            for (int i = 0; i < n; ++i)
                if (mask & (1ULL << i)) s += rank[i];
            if (s <= w_plus + eps) ++le;
            if (s >= w_plus - eps) ++ge;
        }
        const double p_le = static_cast<double>(le) / static_cast<double>(total);
        const double p_ge = static_cast<double>(ge) / static_cast<double>(total);
        res.p_value = std::min(1.0, 2.0 * std::min(p_le, p_ge));
        res.exact = true;
    } else {
        const double mu = n * (n + 1) / 4.0;
        double var = n * (n + 1) * (2.0 * n + 1) / 24.0;
        for (int t : tie_sizes) var -= (static_cast<double>(t) * t * t - t) / 48.0;
        double z;
        if (w_plus > mu) z = (w_plus - mu - 0.5) / std::sqrt(var);
        else if (w_plus < mu) z = (w_plus - mu + 0.5) / std::sqrt(var);
        else z = 0.0;
        res.p_value = std::min(1.0, 2.0 * norm_cdf(-std::fabs(z)));
        res.exact = false;
    }
    return res;
}

namespace {

std::optional<Indication> snr_indication(const ImageGrid& filtered, const PipelineConfig& cfg,
                                         Shape shape) {
    auto inds = detect_indications(filtered, cfg.volume, cfg.rho, shape);
    inds = merge_pairs(filtered, std::move(inds), cfg.merge_distance, cfg.merge_snr,
                       cfg.volume, shape);
    if (inds.empty()) return std::nullopt;
    return *std::max_element(inds.begin(), inds.end(), [](const auto& a, const auto& b) {
        return a.snr < b.snr;
    });
}

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

}  // namespace

ExperimentReport run_comparison(const SimConfig& cfg) {
    ExperimentReport report;
    report.config = cfg;

    // dense size grid for the reported POD curves
    {
        const double lo = std::log10(*std::min_element(cfg.sizes.begin(), cfg.sizes.end()) / 2.0);
        const double hi = std::log10(*std::max_element(cfg.sizes.begin(), cfg.sizes.end()) * 2.0);
        const int npts = 50;
        for (int i = 0; i < npts; ++i)
            report.report_sizes.push_back(std::pow(10.0, lo + (hi - lo) * i / (npts - 1)));
    }

    MethodResult ellipse{"ellipse", 0, {}, {}, {}};
    MethodResult rectangle{"rectangle", 0, {}, {}, {}};
    MethodResult peakamp{"peakamp", 0, {}, {}, {}};
    std::vector<std::vector<double>> curves_e, curves_r, curves_p;

    const Rng root(cfg.seed);
    const GaussianKernel kernel = make_kernel(cfg.pipeline.fwhm);

    for (int e = 0; e < cfg.experiments; ++e) {
        // --- calibration on a fresh noise set shared by all methods ---
        std::vector<double> snr_e, snr_r, peaks;
        std::vector<Indication> noise_ind_e, noise_ind_r;
        for (int i = 0; i < cfg.n_noise_images; ++i) {
            Rng rng = root.derive(e, 1000 + i);
            const ImageGrid noise = make_noise(cfg, rng);
            const ImageGrid filtered = matched_filter(noise, kernel);
            if (auto ind = snr_indication(filtered, cfg.pipeline, Shape::Ellipse)) {
                snr_e.push_back(ind->snr);
                noise_ind_e.push_back(*ind);
            }
            if (auto ind = snr_indication(filtered, cfg.pipeline, Shape::Rectangle)) {
                snr_r.push_back(ind->snr);
                noise_ind_r.push_back(*ind);
            }
            peaks.push_back(peak_amplitude(noise));
        }
        const double alpha_e = calibrate_alpha(snr_e, cfg.target_pfa);
        const double alpha_r = calibrate_alpha(snr_r, cfg.target_pfa);
        const double z_th = calibrate_zth(peaks, cfg.target_pfa);
        if (e == 0) {
            ellipse.threshold = alpha_e;
            rectangle.threshold = alpha_r;
            peakamp.threshold = z_th;
        }

        std::vector<double> noise_d_e, noise_d_r, noise_lp;
        for (const auto& ind : noise_ind_e) noise_d_e.push_back(decide(ind, alpha_e).d_metric);
        for (const auto& ind : noise_ind_r) noise_d_r.push_back(decide(ind, alpha_r).d_metric);
        for (double p : peaks)
            if (p > 0) noise_lp.push_back(std::log10(p));

        // --- flawed images, identical across methods ---
        std::vector<FlawObs> flawed_e, flawed_r, flawed_p;
        for (std::size_t si = 0; si < cfg.sizes.size(); ++si) {
            for (int r = 0; r < cfg.replicates; ++r) {
                Rng rng = root.derive(e, 2000 + si * cfg.replicates + r);
                const ImageGrid noise = make_noise(cfg, rng);
                const ImageGrid img =
                    inject_signal(noise, cfg.sizes[si], cfg.gamma0, cfg.gamma1, cfg.k,
                                  std::nullopt, rng);
                const ImageGrid filtered = matched_filter(img, kernel);
                if (auto ind = snr_indication(filtered, cfg.pipeline, Shape::Ellipse))
                    flawed_e.push_back({decide(*ind, alpha_e).d_metric, cfg.sizes[si]});
                if (auto ind = snr_indication(filtered, cfg.pipeline, Shape::Rectangle))
                    flawed_r.push_back({decide(*ind, alpha_r).d_metric, cfg.sizes[si]});
                const double p = peak_amplitude(img);
                if (p > 0) flawed_p.push_back({std::log10(p), cfg.sizes[si]});
            }
        }

        // --- NIM fit, POD curve, a90 per method ---
        auto run_method = [&](MethodResult& method, const std::vector<FlawObs>& flawed,
                              const std::vector<double>& noise_obs,
                              std::vector<std::vector<double>>& curves, bool is_peakamp,
                              double threshold) {
            try {
                const NimFit fit = fit_nim(flawed, noise_obs);
                std::function<double(double)> pod_fn;
                if (is_peakamp) {
                    PeakAmpParams pp{fit.params.beta0, fit.params.beta1, fit.params.sigma_s,
                                     fit.params.mu_n, fit.params.sigma_n, threshold};
                    pod_fn = [pp](double s) { return pod_peakamp(pp, s); };
                } else {
                    const NimParams np = fit.params;
                    pod_fn = [np](double s) { return pod(np, s); };
                }
                std::vector<double> curve;
                for (double s : report.report_sizes) curve.push_back(pod_fn(s));
                curves.push_back(std::move(curve));
                try {
                    method.a90s.push_back(a90(pod_fn));
                } catch (const error& err) {
                    method.a90s.push_back(nan());
                    method.fit_errors.push_back("experiment " + std::to_string(e) + ": " + err.what());
                }
            } catch (const std::exception& err) {
                method.a90s.push_back(nan());
                method.fit_errors.push_back("experiment " + std::to_string(e) + ": " + err.what());
            }
        };
        run_method(ellipse, flawed_e, noise_d_e, curves_e, false, 0.0);
        run_method(rectangle, flawed_r, noise_d_r, curves_r, false, 0.0);
        run_method(peakamp, flawed_p, noise_lp, curves_p, true, z_th);
    }

    // pointwise median POD across experiments
    auto median_curve = [&](const std::vector<std::vector<double>>& curves) {
        std::vector<double> out;
        if (curves.empty()) return out;
        for (std::size_t i = 0; i < report.report_sizes.size(); ++i) {
            std::vector<double> col;
            for (const auto& c : curves) col.push_back(c[i]);
            out.push_back(quantile(col, 0.5));
        }
        return out;
    };
    ellipse.pod_curve = median_curve(curves_e);
    rectangle.pod_curve = median_curve(curves_r);
    peakamp.pod_curve = median_curve(curves_p);

    auto paired_finite = [](const std::vector<double>& a, const std::vector<double>& b) {
        std::pair<std::vector<double>, std::vector<double>> out;
        for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i)
            if (std::isfinite(a[i]) && std::isfinite(b[i])) {
                out.first.push_back(a[i]);
                out.second.push_back(b[i]);
            }
        return out;
    };
    try {
        auto [a, b] = paired_finite(ellipse.a90s, rectangle.a90s);
        report.comparisons["ellipse_vs_rectangle"] = wilcoxon_signed_rank(a, b);
    } catch (const error&) {}
    try {
        auto [a, b] = paired_finite(rectangle.a90s, peakamp.a90s);
        report.comparisons["rectangle_vs_peakamp"] = wilcoxon_signed_rank(a, b);
    } catch (const error&) {}

    report.methods = {std::move(ellipse), std::move(rectangle), std::move(peakamp)};
    return report;
}

std::string ExperimentReport::to_json() const {
    json j;
    j["config"] = config_json(config);
    j["quantile_convention"] = "interpolated order statistics, h=(n-1)p";
    j["wilcoxon_convention"] = "zeros dropped, tied magnitudes midranked";
    j["calibration"] = "one threshold per experiment repeat, shared noise set across methods";
    j["report_sizes"] = report_sizes;
    json jm = json::array();
    for (const auto& m : methods) {
        json e;
        e["method"] = m.method;
        e["threshold"] = m.threshold;
        e["pod_curve"] = m.pod_curve;
        json a = json::array();
        for (double v : m.a90s) {
            if (std::isfinite(v)) a.push_back(v);
            else a.push_back(nullptr);
        }
        e["a90"] = a;
        e["fit_errors"] = m.fit_errors;
        jm.push_back(e);
    }
    j["methods"] = jm;
    json jc;
    for (const auto& [name, w] : comparisons) {
        jc[name] = {{"statistic", w.statistic}, {"p_value", w.p_value},
                    {"exact", w.exact}, {"n", w.n}};
    }
    j["comparisons"] = jc;
    return j.dump(2);
}

}  // namespace nde
