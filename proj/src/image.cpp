#include "ndeflaw/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ndeflaw/geometry.hpp"

namespace nde {

ImageGrid::ImageGrid(int n1, int n2, std::vector<double> data)
    : n1_(n1), n2_(n2), data_(std::move(data)) {
    if (n1_ <= 0 || n2_ <= 0)
        throw error("ImageGrid: dimensions must be positive");
    if (data_.size() != static_cast<std::size_t>(n1_) * static_cast<std::size_t>(n2_))
        throw error("ImageGrid: data length does not match dimensions");
    for (double v : data_)
        if (!std::isfinite(v)) throw error("ImageGrid: non-finite intensity");
}

ImageGrid ImageGrid::constant(int n1, int n2, double value) {
    return ImageGrid(n1, n2, std::vector<double>(static_cast<std::size_t>(n1) * n2, value));
}

double ImageGrid::sum() const {
    double s = 0.0;
    for (double v : data_) s += v;
    return s;
}

double ImageGrid::max() const {
    return *std::max_element(data_.begin(), data_.end());
}

namespace {

ImageGrid load_matrix_text(std::istream& in, const std::string& path) {
    std::vector<double> data;
    int n1 = -1;
    int n2 = 0;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        for (char& c : line)
            if (c == ',') c = ' ';
        std::istringstream row(line);
        std::vector<double> vals;
        std::string tok;
        while (row >> tok) {
            try {
                std::size_t pos = 0;
                double v = std::stod(tok, &pos);
                if (pos != tok.size()) throw std::invalid_argument(tok);
                vals.push_back(v);
            } catch (const std::exception&) {
                throw error(path + ": line " + std::to_string(lineno) +
                            ": cannot parse value '" + tok + "'");
            }
        }
        if (vals.empty()) continue;  // blank line
        if (n1 < 0) n1 = static_cast<int>(vals.size());
        else if (static_cast<int>(vals.size()) != n1)
            throw error(path + ": line " + std::to_string(lineno) + ": ragged row (" +
                        std::to_string(vals.size()) + " values, expected " + std::to_string(n1) + ")");
        data.insert(data.end(), vals.begin(), vals.end());
        ++n2;
    }
    if (n1 <= 0 || n2 <= 0) throw error(path + ": empty image");
    for (double v : data)
        if (!std::isfinite(v)) throw error(path + ": non-finite intensity value");
    return ImageGrid(n1, n2, std::move(data));
}

// PGM P2 (ascii) and P5 (binary), comments allowed in the header.
ImageGrid load_pgm(std::istream& in, const std::string& path) {
    auto next_token = [&]() -> std::string {
        std::string tok;
        int c;
        while ((c = in.get()) != EOF) {
            if (c == '#') {
                while ((c = in.get()) != EOF && c != '\n') {}
                continue;
            }
            if (std::isspace(c)) {
                if (!tok.empty()) break;
                continue;
            }
            tok.push_back(static_cast<char>(c));
        }
        if (tok.empty()) throw error(path + ": truncated PGM header");
        return tok;
    };
    std::string magic = next_token();
    if (magic != "P2" && magic != "P5") throw error(path + ": not a PGM file (magic " + magic + ")");
    int n1 = std::stoi(next_token());
    int n2 = std::stoi(next_token());
    int maxval = std::stoi(next_token());
    if (n1 <= 0 || n2 <= 0 || maxval <= 0 || maxval > 65535)
        throw error(path + ": invalid PGM header");
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(n1) * n2);
    if (magic == "P2") {
        long long v;
        for (long long i = 0; i < static_cast<long long>(n1) * n2; ++i) {
            if (!(in >> v)) throw error(path + ": truncated P2 pixel data at sample " + std::to_string(i));
            data.push_back(static_cast<double>(v));
        }
    } else {
        const int bytes = maxval > 255 ? 2 : 1;
        for (long long i = 0; i < static_cast<long long>(n1) * n2; ++i) {
            int hi = in.get();
            if (hi == EOF) throw error(path + ": truncated P5 pixel data at byte offset " +
                                       std::to_string(i * bytes));
            long long v = hi;
            if (bytes == 2) {
                int lo = in.get();
                if (lo == EOF) throw error(path + ": truncated P5 pixel data");
                v = (v << 8) | lo;
            }
            data.push_back(static_cast<double>(v));
        }
    }
    return ImageGrid(n1, n2, std::move(data));
}

}  // namespace

ImageGrid load_image(const std::string& path, ImageFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error(path + ": cannot open file");
    return format == ImageFormat::Pgm ? load_pgm(in, path) : load_matrix_text(in, path);
}

ImageGrid load_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error(path + ": cannot open file");
    int c0 = in.peek();
    if (c0 == 'P') return load_pgm(in, path);
    return load_matrix_text(in, path);
}

void save_image(const ImageGrid& img, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw error(path + ": cannot open file for writing");
    out.precision(17);
    for (int v = 0; v < img.n2(); ++v) {
        for (int u = 0; u < img.n1(); ++u) {
            if (u) out << ' ';
            out << img.at(u, v);
        }
        out << '\n';
    }
}

namespace {

// RFC-4180 style field splitting, quotes honored.
std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') { cur.push_back('"'); ++i; }
                else quoted = false;
            } else cur.push_back(c);
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace

std::vector<SpecimenRecord> load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw error(path + ": cannot open manifest");
    std::string line;
    if (!std::getline(in, line)) throw error(path + ": empty manifest");
    auto header = split_csv(line);
    if (header.size() < 3 || header[0] != "image" || header[1] != "flaw_size" || header[2] != "flawed")
        throw error(path + ": manifest header must be 'image,flaw_size,flawed'");
    std::vector<SpecimenRecord> records;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto f = split_csv(line);
        if (f.size() < 3)
            throw error(path + ": line " + std::to_string(lineno) + ": expected 3 fields");
        SpecimenRecord rec;
        rec.image_path = f[0];
        std::string flag = f[2];
        std::transform(flag.begin(), flag.end(), flag.begin(), ::tolower);
        rec.is_flawed = (flag == "true" || flag == "1" || flag == "yes");
        if (!f[1].empty()) {
            double size = std::stod(f[1]);
            if (size <= 0)
                throw error(path + ": line " + std::to_string(lineno) + ": flaw_size must be positive");
            rec.flaw_size = size;
        }
        if (rec.is_flawed != rec.flaw_size.has_value())
            throw error(path + ": line " + std::to_string(lineno) +
                        ": inconsistent record (flawed flag vs flaw_size presence)");
        records.push_back(std::move(rec));
    }
    return records;
}

namespace {

template <typename Reduce>
double bias_over_complement(const ImageGrid& img, const Region* exclude, Reduce reduce) {
    std::vector<double> outside;
    outside.reserve(img.data().size());
    for (int v = 0; v < img.n2(); ++v)
        for (int u = 0; u < img.n1(); ++u)
            if (!exclude || !exclude->contains(u, v)) outside.push_back(img.at(u, v));
    if (outside.empty()) throw error("estimate_bias: region covers the whole image");
    return reduce(outside);
}

}  // namespace

double estimate_bias(const ImageGrid& img, const Region* exclude) {
    return bias_over_complement(img, exclude, [](std::vector<double>& xs) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s / static_cast<double>(xs.size());
    });
}

double estimate_bias_median(const ImageGrid& img, const Region* exclude) {
    return bias_over_complement(img, exclude, [](std::vector<double>& xs) {
        std::sort(xs.begin(), xs.end());
        std::size_t n = xs.size();
        return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
    });
}

}  // namespace nde
