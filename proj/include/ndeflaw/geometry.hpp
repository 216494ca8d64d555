#pragma once

#include <string>
#include <vector>

#include "ndeflaw/image.hpp"

namespace nde {

enum class Shape { Ellipse, Rectangle };

struct Pixel {
    int u = 0;
    int v = 0;
};

/// Parametric region: center (cu, cv), half-extents a >= b > 0 along the
/// principal axes, orientation theta in [0, pi) against the horizontal.
struct Region {
    Shape shape = Shape::Ellipse;
    double cu = 0.0, cv = 0.0;
    double a = 1.0, b = 1.0;
    double theta = 0.0;

    /// Swaps axes if needed so a >= b and folds theta into [0, pi).
    Region canonical() const;
    bool contains(int u, int v) const;
};

std::vector<Pixel> rasterize(const Region& region, int n1, int n2);

/// Annulus width giving the outer region twice the inner continuous area:
/// delta = [-(a+b) + sqrt(a^2 + b^2 + 6ab)] / 2.
double equal_area_delta(double a, double b);

struct RegionPair {
    Region inner;
    Region outer;
    double delta = 0.0;
};

RegionPair make_outer(const Region& inner);

/// Pixels of the outer region not in the inner region.
std::vector<Pixel> rasterize_annulus(const RegionPair& pair, int n1, int n2);

std::string region_to_json(const Region& r);

}  // namespace nde
