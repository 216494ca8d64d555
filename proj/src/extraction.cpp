#include "ndeflaw/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ndeflaw/optim.hpp"
#include "ndeflaw/stats.hpp"

namespace nde {

double VolumeConfig::effective_a_max(int n1, int n2) const {
    if (a_max > 0) return a_max;
    return std::min(n1, n2) / 2.0;
}

namespace {

constexpr double kDegenerate = -std::numeric_limits<double>::infinity();

double bias_outside(const ImageGrid& img, const Region& inner, bool use_median) {
    if (use_median) return estimate_bias_median(img, &inner);
    return estimate_bias(img, &inner);
}

// Volume of a rasterized candidate; -inf when the raster or its complement
// is empty (used as the reject value during optimization).
double volume_or_degenerate(const ImageGrid& img, const Region& inner, double lambda,
                            bool use_median) {
    const auto pixels = rasterize(inner, img.n1(), img.n2());
    const auto total = static_cast<std::size_t>(img.n1()) * img.n2();
    if (pixels.empty() || pixels.size() == total) return kDegenerate;

    double mu;
    if (use_median) {
        mu = estimate_bias_median(img, &inner);
    } else {
        double inner_sum = 0.0;
        for (const Pixel& p : pixels) inner_sum += img.at(p.u, p.v);
        mu = (img.sum() - inner_sum) / static_cast<double>(total - pixels.size());
    }
    double vol = 0.0;
    for (const Pixel& p : pixels) {
        const double yc = img.at(p.u, p.v) - mu;
        vol += yc > 0 ? yc : lambda * yc;
    }
    return vol;
}

}  // namespace

double volume(const ImageGrid& img, const Region& inner, double lambda, bool use_median_bias) {
    const double v = volume_or_degenerate(img, inner, lambda, use_median_bias);
    if (v == kDegenerate)
        throw error("volume: region rasterizes to an empty set or covers the whole image");
    return v;
}

double lambda_xi(double xi) {
    if (xi <= 0) throw error("lambda_xi: xi must be positive");
    return xi / (norm_pdf(xi) - xi * norm_cdf(-xi)) + 1.0;
}

double expected_volume_term(double t, double sigma, double lambda) {
    const double z = t / sigma;
    return t + (lambda - 1.0) * (t * norm_cdf(-z) - sigma * norm_pdf(z));
}

double expected_volume(const ImageGrid& tau, double sigma, double lambda, const Region& inner) {
    if (sigma <= 0) throw error("expected_volume: sigma must be positive");
    double total = 0.0;
    for (const Pixel& p : rasterize(inner, tau.n1(), tau.n2()))
        total += expected_volume_term(tau.at(p.u, p.v), sigma, lambda);
    return total;
}

namespace {

struct GridCandidate {
    double a, b, theta;
    double vol;
    int index;
};

}  // namespace

std::pair<Region, double> optimize_region(const ImageGrid& img, Pixel center,
                                          const VolumeConfig& cfg, Shape shape) {
    if (cfg.lambda <= 1.0) throw error("optimize_region: lambda must exceed 1");
    const double pi = std::numbers::pi;
    const double a_lo = std::max(cfg.a_min, 0.5);
    const double a_hi = cfg.effective_a_max(img.n1(), img.n2());
    if (a_hi <= a_lo) throw error("optimize_region: empty search interval for half-extents");
    const int g = cfg.grid_points;

    auto make_region = [&](double a, double b, double theta) {
        Region r;
        r.shape = shape;
        r.cu = center.u;
        r.cv = center.v;
        r.a = a;
        r.b = b;
        r.theta = cfg.axis_aligned ? 0.0 : theta;
        return r;
    };

    // Objective for the simplex runs; out-of-bound half-extents rejected.
    auto neg_volume = [&](const std::vector<double>& x) {
        const double a = x[0], b = x[1];
        if (a < a_lo || a > a_hi || b < a_lo || b > a_hi)
            return std::numeric_limits<double>::infinity();
        const double v = volume_or_degenerate(img, make_region(a, b, x[2]), cfg.lambda,
                                              cfg.use_median_bias);
        return v == kDegenerate ? std::numeric_limits<double>::infinity() : -v;
    };

    std::vector<GridCandidate> grid;
    int index = 0;
    const int theta_points = cfg.axis_aligned ? 1 : g;
    for (int ia = 0; ia < g; ++ia)
        for (int ib = 0; ib < g; ++ib)
            for (int it = 0; it < theta_points; ++it) {
                const double a = a_lo + (a_hi - a_lo) * ia / (g - 1);
                const double b = a_lo + (a_hi - a_lo) * ib / (g - 1);
                const double theta = pi * it / theta_points;
                const double v = volume_or_degenerate(img, make_region(a, b, theta), cfg.lambda,
                                                      cfg.use_median_bias);
                if (v != kDegenerate) grid.push_back({a, b, theta, v, index});
                ++index;
            }
    if (grid.empty()) throw error("optimize_region: all grid starting points are degenerate");

    std::stable_sort(grid.begin(), grid.end(), [](const GridCandidate& x, const GridCandidate& y) {
        if (x.vol != y.vol) return x.vol > y.vol;
        return x.index < y.index;
    });
    grid.resize(std::min<std::size_t>(grid.size(), cfg.short_runs));

    const std::vector<double> step = {1.0, 1.0, pi / 12.0};
    SimplexResult best;
    best.value = std::numeric_limits<double>::infinity();
    for (const GridCandidate& c : grid) {
        auto r = nelder_mead(neg_volume, {c.a, c.b, c.theta}, step, cfg.short_iterations, 0.0);
        if (r.value < best.value) best = r;
    }
    auto final = nelder_mead(neg_volume, best.x, step, cfg.max_iterations, cfg.tolerance);
    if (final.value > best.value) final = best;

    Region region = make_region(final.x[0], final.x[1], final.x[2]).canonical();
    return {region, -final.value};
}

std::pair<Region, double> optimize_ellipse(const ImageGrid& img, Pixel center,
                                           const VolumeConfig& cfg) {
    return optimize_region(img, center, cfg, Shape::Ellipse);
}

Indication extract_features(const ImageGrid& img, const RegionPair& pair, bool use_median_bias) {
    const auto inner_px = rasterize(pair.inner, img.n1(), img.n2());
    const auto annulus_px = rasterize_annulus(pair, img.n1(), img.n2());
    if (inner_px.empty() || annulus_px.empty())
        throw error("extract_features: inner region or annulus rasterizes to an empty set");

    const double mu = bias_outside(img, pair.inner, use_median_bias);
    Indication ind;
    ind.pair = pair;

    double peak = -std::numeric_limits<double>::infinity();
    for (const Pixel& p : inner_px) peak = std::max(peak, img.at(p.u, p.v) - mu);
    ind.signal_peak = peak;

    double e_sum = 0.0, e_max = -std::numeric_limits<double>::infinity();
    for (const Pixel& p : annulus_px) {
        const double e = img.at(p.u, p.v) - mu;
        e_sum += e;
        e_max = std::max(e_max, e);
    }
    ind.noise_avg = e_sum / static_cast<double>(annulus_px.size());
    ind.noise_peak = e_max;
    if (ind.noise_peak == ind.noise_avg)
        throw error("extract_features: constant annulus, SNR undefined");
    ind.snr = (ind.signal_peak - ind.noise_avg) / (ind.noise_peak - ind.noise_avg);

    // clipped fraction of the outer region against an unclipped raster
    Region centered = pair.outer;
    const double reach = std::max(centered.a, centered.b) + 2.0;
    centered.cu = reach + (pair.outer.cu - std::floor(pair.outer.cu));
    centered.cv = reach + (pair.outer.cv - std::floor(pair.outer.cv));
    const int span = static_cast<int>(std::ceil(2.0 * reach)) + 1;
    const std::size_t full = rasterize(centered, span, span).size();
    const std::size_t kept = inner_px.size() + annulus_px.size();
    ind.clipped_fraction = full > kept ? 1.0 - static_cast<double>(kept) / full : 0.0;
    return ind;
}

std::vector<Pixel> local_maxima(const ImageGrid& img) {
    if (img.n1() < 3 || img.n2() < 3)
        throw error("local_maxima: image must be at least 3x3");
    const int n1 = img.n1(), n2 = img.n2();
    std::vector<char> candidate(static_cast<std::size_t>(n1) * n2, 0);
    for (int v = 1; v < n2 - 1; ++v)
        for (int u = 1; u < n1 - 1; ++u) {
            const double c = img.at(u, v);
            bool ok = true;
            for (int dv = -1; dv <= 1 && ok; ++dv)
                for (int du = -1; du <= 1 && ok; ++du)
                    if ((du || dv) && img.at(u + du, v + dv) > c) ok = false;
            candidate[static_cast<std::size_t>(v) * n1 + u] = ok;
        }

    // Plateaus: keep only the lexicographically smallest pixel of each
    // 8-connected equal-valued candidate component.
    std::vector<char> visited(candidate.size(), 0);
    std::vector<Pixel> maxima;
    for (int v = 1; v < n2 - 1; ++v)
        for (int u = 1; u < n1 - 1; ++u) {
            const std::size_t idx = static_cast<std::size_t>(v) * n1 + u;
            if (!candidate[idx] || visited[idx]) continue;
            const double value = img.at(u, v);
            std::vector<Pixel> stack{{u, v}};
            visited[idx] = 1;
            Pixel smallest{u, v};
            while (!stack.empty()) {
                Pixel p = stack.back();
                stack.pop_back();
                if (p.u < smallest.u || (p.u == smallest.u && p.v < smallest.v)) smallest = p;
                for (int dv = -1; dv <= 1; ++dv)
                    for (int du = -1; du <= 1; ++du) {
                        if (!du && !dv) continue;
                        const int qu = p.u + du, qv = p.v + dv;
                        if (qu < 1 || qu >= n1 - 1 || qv < 1 || qv >= n2 - 1) continue;
                        const std::size_t qidx = static_cast<std::size_t>(qv) * n1 + qu;
                        if (candidate[qidx] && !visited[qidx] && img.at(qu, qv) == value) {
                            visited[qidx] = 1;
                            stack.push_back({qu, qv});
                        }
                    }
            }
            maxima.push_back(smallest);
        }
    std::sort(maxima.begin(), maxima.end(), [](const Pixel& a, const Pixel& b) {
        return a.u < b.u || (a.u == b.u && a.v < b.v);
    });
    return maxima;
}

std::vector<Indication> detect_indications(const ImageGrid& img, const VolumeConfig& cfg,
                                           double rho, Shape shape) {
    if (rho <= 0 || rho >= 1) throw error("detect_indications: rho must be in (0,1)");
    const auto centers = local_maxima(img);
    if (centers.empty()) return {};

    double max_amp = -std::numeric_limits<double>::infinity();
    for (const Pixel& c : centers) max_amp = std::max(max_amp, img.at(c.u, c.v));

    std::vector<Indication> out;
    for (const Pixel& c : centers) {
        const double amp = img.at(c.u, c.v);
        double scaled;
        if (max_amp > 0) scaled = amp / max_amp;
        else scaled = (amp == max_amp) ? 1.0 : 0.0;  // flat or negative image
        if (scaled < rho) continue;
        try {
            auto [region, vol] = optimize_region(img, c, cfg, shape);
            Indication ind = extract_features(img, make_outer(region), cfg.use_median_bias);
            ind.amplitude = amp;
            ind.scaled_amplitude = scaled;
            ind.volume = vol;
            out.push_back(std::move(ind));
        } catch (const error&) {
            // degenerate candidate, skip
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const Indication& x, const Indication& y) {
        return x.scaled_amplitude > y.scaled_amplitude;
    });
    return out;
}

std::vector<Indication> merge_pairs(const ImageGrid& img, std::vector<Indication> indications,
                                    double closeness, double snr_threshold,
                                    const VolumeConfig& cfg, Shape shape) {
    if (indications.size() < 2) return indications;
    std::vector<char> consumed(indications.size(), 0);
    std::vector<Indication> merged;
    for (std::size_t i = 0; i < indications.size(); ++i) {
        if (consumed[i]) continue;
        for (std::size_t j = i + 1; j < indications.size(); ++j) {
            if (consumed[j]) continue;
            const Region& ri = indications[i].pair.inner;
            const Region& rj = indications[j].pair.inner;
            const double dist = std::hypot(ri.cu - rj.cu, ri.cv - rj.cv);
            if (dist > closeness) continue;
            if (indications[i].snr >= snr_threshold || indications[j].snr >= snr_threshold)
                continue;
            Pixel mid{static_cast<int>(std::lround((ri.cu + rj.cu) / 2.0)),
                      static_cast<int>(std::lround((ri.cv + rj.cv) / 2.0))};
            VolumeConfig wide = cfg;
            wide.a_max = std::min(std::max(cfg.effective_a_max(img.n1(), img.n2()),
                                           dist / 2.0 + std::max(ri.a, rj.a) + 1.0),
                                  static_cast<double>(std::max(img.n1(), img.n2())));
            try {
                auto [region, vol] = optimize_region(img, mid, wide, shape);
                Indication ind = extract_features(img, make_outer(region), cfg.use_median_bias);
                if (ind.snr > indications[i].snr && ind.snr > indications[j].snr) {
                    ind.amplitude = std::max(indications[i].amplitude, indications[j].amplitude);
                    ind.scaled_amplitude =
                        std::max(indications[i].scaled_amplitude, indications[j].scaled_amplitude);
                    ind.volume = vol;
                    ind.merged_from = {static_cast<int>(i), static_cast<int>(j)};
                    merged.push_back(std::move(ind));
                    consumed[i] = consumed[j] = 1;
                    break;
                }
            } catch (const error&) {
                // merged candidate degenerate, keep originals
            }
        }
    }
    std::vector<Indication> out;
    for (std::size_t i = 0; i < indications.size(); ++i)
        if (!consumed[i]) out.push_back(std::move(indications[i]));
    for (auto& m : merged) out.push_back(std::move(m));
    std::stable_sort(out.begin(), out.end(), [](const Indication& x, const Indication& y) {
        return x.scaled_amplitude > y.scaled_amplitude;
    });
    return out;
}

std::string indication_to_json(const Indication& ind) {
    std::ostringstream out;
    out.precision(17);
    out << "{\"inner\":" << region_to_json(ind.pair.inner)
        << ",\"outer\":" << region_to_json(ind.pair.outer)
        << ",\"signal_peak\":" << ind.signal_peak
        << ",\"noise_peak\":" << ind.noise_peak
        << ",\"noise_avg\":" << ind.noise_avg
        << ",\"snr\":" << ind.snr
        << ",\"scaled_amplitude\":" << ind.scaled_amplitude
        << ",\"volume\":" << ind.volume
        << ",\"clipped_fraction\":" << ind.clipped_fraction;
    if (ind.merged_from)
        out << ",\"merged_from\":[" << ind.merged_from->first << "," << ind.merged_from->second << "]";
    out << "}";
    return out.str();
}

}  // namespace nde
