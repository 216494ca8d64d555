#include "ndeflaw/decision.hpp"

#include <algorithm>
#include <cmath>

#include "ndeflaw/filter.hpp"
#include "ndeflaw/stats.hpp"

namespace nde {

Method method_from_string(const std::string& s) {
    if (s == "ellipse") return Method::Ellipse;
    if (s == "rectangle") return Method::Rectangle;
    if (s == "peakamp") return Method::PeakAmp;
    throw error("unknown method '" + s + "' (expected ellipse|rectangle|peakamp)");
}

std::string method_name(Method m) {
    switch (m) {
        case Method::Ellipse: return "ellipse";
        case Method::Rectangle: return "rectangle";
        case Method::PeakAmp: return "peakamp";
    }
    return "?";
}

double calibrate_alpha(const std::vector<double>& noise_snrs, double target_pfa) {
    if (noise_snrs.empty()) throw error("calibrate_alpha: empty noise SNR set");
    if (target_pfa <= 0 || target_pfa >= 1) throw error("calibrate_alpha: PFA must be in (0,1)");
    return quantile(noise_snrs, 1.0 - target_pfa);
}

Decision decide(const Indication& ind, double alpha) {
    Decision d;
    d.e_th = alpha * ind.noise_peak + (1.0 - alpha) * ind.noise_avg;
    if (ind.signal_peak > 0 && d.e_th > 0) {
        d.d_metric = std::log10(ind.signal_peak) - std::log10(d.e_th);
        d.detected = d.d_metric > 0;
        d.log_domain = true;
    } else {
        d.d_metric = ind.signal_peak - d.e_th;
        d.detected = d.d_metric > 0;
        d.log_domain = false;
    }
    return d;
}

std::optional<Indication> best_indication(const ImageGrid& img, const PipelineConfig& cfg) {
    const ImageGrid* input = &img;
    ImageGrid filtered = ImageGrid::constant(1, 1, 0.0);
    if (cfg.method != Method::PeakAmp) {
        filtered = matched_filter(img, make_kernel(cfg.fwhm));
        input = &filtered;
    }
    const Shape shape = cfg.method == Method::Rectangle ? Shape::Rectangle : Shape::Ellipse;
    auto inds = detect_indications(*input, cfg.volume, cfg.rho, shape);
    inds = merge_pairs(*input, std::move(inds), cfg.merge_distance, cfg.merge_snr, cfg.volume, shape);
    if (inds.empty()) return std::nullopt;
    auto best = std::max_element(inds.begin(), inds.end(), [](const auto& x, const auto& y) {
        return x.snr < y.snr;
    });
    return *best;
}

std::vector<ClassifyRow> classify_dataset(const std::vector<SpecimenRecord>& manifest,
                                          const DetectionPolicy& policy,
                                          const PipelineConfig& cfg) {
    std::vector<ClassifyRow> rows;
    rows.reserve(manifest.size());
    for (const auto& rec : manifest) {
        ClassifyRow row;
        row.specimen = rec.image_path;
        row.flaw_size = rec.flaw_size;
        try {
            const ImageGrid img = load_image(rec.image_path);
            auto ind = best_indication(img, cfg);
            if (!ind) throw error("no indication found");
            const Decision d = decide(*ind, policy.alpha);
            row.d_metric = d.d_metric;
            row.snr = ind->snr;
            row.detected = d.detected;
        } catch (const std::exception& e) {
            row.ok = false;
            row.error_message = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace nde
