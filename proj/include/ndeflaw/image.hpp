#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nde {

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Immutable n1 x n2 grid of pixel intensities, row-major. (u, v) indexes
/// column u in [0, n1) and row v in [0, n2).
class ImageGrid {
  public:
    ImageGrid(int n1, int n2, std::vector<double> data);
    static ImageGrid constant(int n1, int n2, double value);

    int n1() const { return n1_; }
    int n2() const { return n2_; }
    double at(int u, int v) const { return data_[static_cast<std::size_t>(v) * n1_ + u]; }
    const std::vector<double>& data() const { return data_; }

    double sum() const;
    double max() const;

  private:
    int n1_, n2_;
    std::vector<double> data_;
};

enum class ImageFormat { MatrixText, Pgm };

ImageGrid load_image(const std::string& path, ImageFormat format);
/// Auto-detects PGM by magic number, otherwise matrix-text.
ImageGrid load_image(const std::string& path);
void save_image(const ImageGrid& img, const std::string& path);

struct SpecimenRecord {
    std::string image_path;
    std::optional<double> flaw_size;  // mils
    bool is_flawed = false;
};

std::vector<SpecimenRecord> load_manifest(const std::string& path);

struct Region;  // geometry.hpp

/// Mean intensity over pixels outside `exclude` (all pixels when absent).
double estimate_bias(const ImageGrid& img, const Region* exclude = nullptr);
/// Median variant, selectable from configuration.
double estimate_bias_median(const ImageGrid& img, const Region* exclude = nullptr);

}  // namespace nde
