#include <cmath>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ndeflaw/baselines.hpp"
#include "ndeflaw/decision.hpp"
#include "ndeflaw/filter.hpp"
#include "ndeflaw/nim.hpp"
#include "ndeflaw/simkit.hpp"

using nlohmann::ordered_json;

namespace {

void add_pipeline_flags(CLI::App* cmd, nde::PipelineConfig& cfg, std::string& method) {
    cmd->add_option("--fwhm", cfg.fwhm, "Matched filter FWHM in pixels");
    cmd->add_option("--lambda", cfg.volume.lambda, "Regularization weight on negative pixels");
    cmd->add_option("--rho", cfg.rho, "Scaled-amplitude cutoff for candidate centers");
    cmd->add_option("--merge-distance", cfg.merge_distance, "Center closeness for hotspot merging");
    cmd->add_option("--merge-snr", cfg.merge_snr, "SNR ceiling below which merging is attempted");
    cmd->add_option("--method", method, "ellipse|rectangle|peakamp");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw nde::error(path + ": cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nde::NimParams params_from_json(const std::string& path) {
    auto j = ordered_json::parse(read_file(path));
    nde::NimParams p;
    p.beta0 = j.at("beta0").get<double>();
    p.beta1 = j.at("beta1").get<double>();
    p.mu_n = j.at("mu_n").get<double>();
    p.sigma_s = j.at("sigma_s").get<double>();
    p.sigma_n = j.at("sigma_n").get<double>();
    return p;
}

// rows of the classify CSV: specimen,flaw_size,D,snr,detected
void read_classify_csv(const std::string& path, std::vector<nde::FlawObs>& flawed,
                       std::vector<double>& noise) {
    std::ifstream in(path);
    if (!in) throw nde::error(path + ": cannot open file");
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::string cur;
        for (char c : line) {
            if (c == ',') { f.push_back(cur); cur.clear(); }
            else if (c != '\r') cur.push_back(c);
        }
        f.push_back(cur);
        if (f.size() < 5) throw nde::error(path + ": malformed classify row '" + line + "'");
        const double d = std::stod(f[2]);
        if (f[1].empty()) noise.push_back(d);
        else flawed.push_back({d, std::stod(f[1])});
    }
}

void write_overlay(const nde::ImageGrid& img, const std::vector<nde::Indication>& inds,
                   const std::string& path) {
    // grayscale stretch with ellipse outlines burned to white
    double lo = img.data()[0], hi = img.data()[0];
    for (double v : img.data()) { lo = std::min(lo, v); hi = std::max(hi, v); }
    const double span = hi > lo ? hi - lo : 1.0;
    std::vector<int> gray(img.data().size());
    for (std::size_t i = 0; i < gray.size(); ++i)
        gray[i] = static_cast<int>(std::lround(254.0 * (img.data()[i] - lo) / span));
    auto near_boundary = [](const nde::Region& r, int u, int v) {
        nde::Region grown = r, shrunk = r;
        grown.a += 0.5; grown.b += 0.5;
        shrunk.a = std::max(r.a - 0.5, 0.01);
        shrunk.b = std::max(r.b - 0.5, 0.01);
        return grown.contains(u, v) && !shrunk.contains(u, v);
    };
    for (int v = 0; v < img.n2(); ++v)
        for (int u = 0; u < img.n1(); ++u)
            for (const auto& ind : inds)
                if (near_boundary(ind.pair.inner, u, v) || near_boundary(ind.pair.outer, u, v))
                    gray[static_cast<std::size_t>(v) * img.n1() + u] = 255;
    std::ofstream out(path);
    out << "P2\n" << img.n1() << " " << img.n2() << "\n255\n";
    for (int v = 0; v < img.n2(); ++v) {
        for (int u = 0; u < img.n1(); ++u)
            out << gray[static_cast<std::size_t>(v) * img.n1() + u]
                << (u + 1 == img.n1() ? '\n' : ' ');
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Automated flaw detection in NDE images"};
    app.require_subcommand(1);

    // --- filter ---
    std::string f_image, f_out;
    double f_fwhm = 4.71;
    auto* cmd_filter = app.add_subcommand("filter", "Matched-filter an image");
    cmd_filter->add_option("--image", f_image, "Input image")->required();
    cmd_filter->add_option("--fwhm", f_fwhm, "Gaussian FWHM in pixels");
    cmd_filter->add_option("--out", f_out, "Output matrix-text image")->required();

    // --- extract ---
    std::string x_image, x_overlay, x_method = "ellipse";
    bool x_no_filter = false;
    nde::PipelineConfig x_cfg;
    auto* cmd_extract = app.add_subcommand("extract", "Detect indications and emit features");
    cmd_extract->add_option("--image", x_image, "Input image")->required();
    add_pipeline_flags(cmd_extract, x_cfg, x_method);
    cmd_extract->add_flag("--no-filter", x_no_filter, "Skip matched filtering");
    cmd_extract->add_option("--overlay", x_overlay, "Write a PGM overlay with region outlines");

    // --- calibrate ---
    std::string c_manifest, c_method = "ellipse";
    double c_pfa = 0.03;
    nde::PipelineConfig c_cfg;
    auto* cmd_cal = app.add_subcommand("calibrate", "Calibrate the detection threshold to a PFA");
    cmd_cal->add_option("--manifest", c_manifest, "Noise manifest CSV")->required();
    cmd_cal->add_option("--pfa", c_pfa, "Target probability of false alarm");
    add_pipeline_flags(cmd_cal, c_cfg, c_method);

    // --- classify ---
    std::string l_manifest, l_method = "ellipse", l_out;
    double l_alpha = 2.5;
    nde::PipelineConfig l_cfg;
    auto* cmd_cls = app.add_subcommand("classify", "Classify a manifest of specimens");
    cmd_cls->add_option("--manifest", l_manifest, "Manifest CSV")->required();
    cmd_cls->add_option("--alpha", l_alpha, "Detection threshold (alpha, or Z_th for peakamp)");
    cmd_cls->add_option("--out", l_out, "Output CSV (default stdout)");
    add_pipeline_flags(cmd_cls, l_cfg, l_method);

    // --- fit-nim ---
    std::string n_input, n_out;
    auto* cmd_fit = app.add_subcommand("fit-nim", "Fit the noise-interference model");
    cmd_fit->add_option("--input", n_input, "Classify CSV")->required();
    cmd_fit->add_option("--out", n_out, "Fitted parameter JSON (default stdout)");

    // --- pod ---
    std::string p_params, p_grid = "10:200:50", p_out;
    auto* cmd_pod = app.add_subcommand("pod", "Evaluate the POD curve on a size grid");
    cmd_pod->add_option("--params", p_params, "Fitted parameter JSON")->required();
    cmd_pod->add_option("--size-grid", p_grid, "lo:hi:n (log-spaced)");
    cmd_pod->add_option("--out", p_out, "Output CSV (default stdout)");

    // --- a90 ---
    std::string a_params, a_bracket = "1:10000";
    auto* cmd_a90 = app.add_subcommand("a90", "Size at which POD reaches 0.9");
    cmd_a90->add_option("--params", a_params, "Fitted parameter JSON")->required();
    cmd_a90->add_option("--bracket", a_bracket, "lo:hi search bracket in mils");

    // --- simulate ---
    std::string s_config, s_out = "report.json";
    auto* cmd_sim = app.add_subcommand("simulate", "Run the seeded method-comparison experiment");
    cmd_sim->add_option("--config", s_config, "SimConfig JSON (defaults when omitted)");
    cmd_sim->add_option("--out", s_out, "Report JSON path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*cmd_filter) {
            auto img = nde::load_image(f_image);
            nde::save_image(nde::matched_filter(img, nde::make_kernel(f_fwhm)), f_out);
        } else if (*cmd_extract) {
            x_cfg.method = nde::method_from_string(x_method);
            auto raw = nde::load_image(x_image);
            const nde::ImageGrid img = x_no_filter
                ? raw
                : nde::matched_filter(raw, nde::make_kernel(x_cfg.fwhm));
            const auto shape = x_cfg.method == nde::Method::Rectangle ? nde::Shape::Rectangle
                                                                      : nde::Shape::Ellipse;
            auto inds = nde::detect_indications(img, x_cfg.volume, x_cfg.rho, shape);
            inds = nde::merge_pairs(img, std::move(inds), x_cfg.merge_distance, x_cfg.merge_snr,
                                    x_cfg.volume, shape);
            std::cout << "[";
            for (std::size_t i = 0; i < inds.size(); ++i)
                std::cout << (i ? "," : "") << nde::indication_to_json(inds[i]);
            std::cout << "]\n";
            if (!x_overlay.empty()) write_overlay(img, inds, x_overlay);
        } else if (*cmd_cal) {
            c_cfg.method = nde::method_from_string(c_method);
            auto manifest = nde::load_manifest(c_manifest);
            std::vector<double> responses;
            for (const auto& rec : manifest) {
                auto img = nde::load_image(rec.image_path);
                if (c_cfg.method == nde::Method::PeakAmp) {
                    responses.push_back(nde::peak_amplitude(img));
                } else if (auto ind = nde::best_indication(img, c_cfg)) {
                    responses.push_back(ind->snr);
                }
            }
            const double threshold = c_cfg.method == nde::Method::PeakAmp
                ? nde::calibrate_zth(responses, c_pfa)
                : nde::calibrate_alpha(responses, c_pfa);
            ordered_json j;
            j["method"] = c_method;
            j["target_pfa"] = c_pfa;
            j[c_cfg.method == nde::Method::PeakAmp ? "z_th" : "alpha"] = threshold;
            j["n_noise"] = responses.size();
            j["quantile_convention"] = "interpolated order statistics, h=(n-1)p";
            std::cout << j.dump(2) << "\n";
        } else if (*cmd_cls) {
            l_cfg.method = nde::method_from_string(l_method);
            auto manifest = nde::load_manifest(l_manifest);
            nde::DetectionPolicy policy;
            policy.alpha = l_alpha;
            std::ostringstream csv;
            csv.precision(12);
            csv << "specimen,flaw_size,D,snr,detected\n";
            if (l_cfg.method == nde::Method::PeakAmp) {
                for (const auto& rec : manifest) {
                    const double peak = nde::peak_amplitude(nde::load_image(rec.image_path));
                    const double d = peak > 0 && l_alpha > 0
                        ? std::log10(peak) - std::log10(l_alpha)
                        : peak - l_alpha;
                    csv << rec.image_path << ",";
                    if (rec.flaw_size) csv << *rec.flaw_size;
                    csv << "," << d << "," << peak << "," << (peak > l_alpha) << "\n";
                }
            } else {
                for (const auto& row : nde::classify_dataset(manifest, policy, l_cfg)) {
                    csv << row.specimen << ",";
                    if (row.flaw_size) csv << *row.flaw_size;
                    if (row.ok) csv << "," << row.d_metric << "," << row.snr << "," << row.detected << "\n";
                    else csv << ",,,error\n";
                }
            }
            if (l_out.empty()) std::cout << csv.str();
            else std::ofstream(l_out) << csv.str();
        } else if (*cmd_fit) {
            std::vector<nde::FlawObs> flawed;
            std::vector<double> noise;
            read_classify_csv(n_input, flawed, noise);
            const auto fit = nde::fit_nim(flawed, noise);
            ordered_json j;
            j["beta0"] = fit.params.beta0;
            j["beta1"] = fit.params.beta1;
            j["mu_n"] = fit.params.mu_n;
            j["sigma_s"] = fit.params.sigma_s;
            j["sigma_n"] = fit.params.sigma_n;
            j["loglik"] = fit.loglik;
            // residuals for external normality diagnostics
            ordered_json rs = ordered_json::array(), rn = ordered_json::array();
            for (const auto& o : flawed)
                rs.push_back(o.response - fit.params.beta0 - fit.params.beta1 * std::log10(o.size));
            for (double d : noise) rn.push_back(d - fit.params.mu_n);
            j["signal_residuals"] = rs;
            j["noise_residuals"] = rn;
            if (n_out.empty()) std::cout << j.dump(2) << "\n";
            else std::ofstream(n_out) << j.dump(2) << "\n";
        } else if (*cmd_pod) {
            const auto params = params_from_json(p_params);
            double lo, hi;
            int npts;
            if (std::sscanf(p_grid.c_str(), "%lf:%lf:%d", &lo, &hi, &npts) != 3 || npts < 2)
                throw nde::error("--size-grid must be lo:hi:n");
            std::ostringstream csv;
            csv.precision(12);
            csv << "size,pod\n";
            for (int i = 0; i < npts; ++i) {
                const double s = std::pow(10.0, std::log10(lo) +
                                          (std::log10(hi) - std::log10(lo)) * i / (npts - 1));
                csv << s << "," << nde::pod(params, s) << "\n";
            }
            if (p_out.empty()) std::cout << csv.str();
            else std::ofstream(p_out) << csv.str();
        } else if (*cmd_a90) {
            const auto params = params_from_json(a_params);
            double lo, hi;
            if (std::sscanf(a_bracket.c_str(), "%lf:%lf", &lo, &hi) != 2)
                throw nde::error("--bracket must be lo:hi");
            std::cout << nde::a90([&](double s) { return nde::pod(params, s); }, lo, hi) << "\n";
        } else if (*cmd_sim) {
            nde::SimConfig cfg = s_config.empty() ? nde::SimConfig::defaults()
                                                  : nde::SimConfig::from_json(read_file(s_config));
            const auto report = nde::run_comparison(cfg);
            std::ofstream(s_out) << report.to_json() << "\n";
            // per-curve CSVs next to the report
            const std::string stem = s_out.size() > 5 && s_out.ends_with(".json")
                ? s_out.substr(0, s_out.size() - 5) : s_out;
            for (const auto& m : report.methods) {
                std::ofstream csv(stem + "_" + m.method + "_pod.csv");
                csv.precision(12);
                csv << "size,pod\n";
                for (std::size_t i = 0; i < m.pod_curve.size(); ++i)
                    csv << report.report_sizes[i] << "," << m.pod_curve[i] << "\n";
            }
            std::cerr << "report written to " << s_out << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
