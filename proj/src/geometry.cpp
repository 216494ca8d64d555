#include "ndeflaw/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace nde {

namespace {

double fold_theta(double theta) {
    const double pi = std::numbers::pi;
    theta = std::fmod(theta, pi);
    if (theta < 0) theta += pi;
    if (theta >= pi) theta -= pi;
    return theta;
}

}  // namespace

Region Region::canonical() const {
    Region r = *this;
    const double pi = std::numbers::pi;
    if (r.b > r.a) {
        std::swap(r.a, r.b);
        r.theta += pi / 2;
    }
    r.theta = fold_theta(r.theta);
    return r;
}

bool Region::contains(int u, int v) const {
    const double du = static_cast<double>(u) - cu;
    const double dv = static_cast<double>(v) - cv;
    const double c = std::cos(theta), s = std::sin(theta);
    const double x = c * du + s * dv;   // along the major axis
    const double y = -s * du + c * dv;  // along the minor axis
    if (shape == Shape::Ellipse)
        return (x / a) * (x / a) + (y / b) * (y / b) <= 1.0;
    return std::fabs(x) <= a && std::fabs(y) <= b;
}

std::vector<Pixel> rasterize(const Region& region, int n1, int n2) {
    const double reach = std::max(region.a, region.b) + 1.0;
    const int u_lo = std::max(0, static_cast<int>(std::floor(region.cu - reach)));
    const int u_hi = std::min(n1 - 1, static_cast<int>(std::ceil(region.cu + reach)));
    const int v_lo = std::max(0, static_cast<int>(std::floor(region.cv - reach)));
    const int v_hi = std::min(n2 - 1, static_cast<int>(std::ceil(region.cv + reach)));
    std::vector<Pixel> pixels;
    for (int v = v_lo; v <= v_hi; ++v)
        for (int u = u_lo; u <= u_hi; ++u)
            if (region.contains(u, v)) pixels.push_back({u, v});
    return pixels;
}

double equal_area_delta(double a, double b) {
    if (a <= 0 || b <= 0) throw error("equal_area_delta: half-extents must be positive");
    return 0.5 * (-(a + b) + std::sqrt(a * a + b * b + 6.0 * a * b));
}

RegionPair make_outer(const Region& inner) {
    RegionPair pair;
    pair.inner = inner;
    pair.delta = equal_area_delta(inner.a, inner.b);
    pair.outer = inner;
    pair.outer.a = inner.a + pair.delta;
    pair.outer.b = inner.b + pair.delta;
    return pair;
}

std::vector<Pixel> rasterize_annulus(const RegionPair& pair, int n1, int n2) {
    std::vector<Pixel> annulus;
    for (const Pixel& p : rasterize(pair.outer, n1, n2))
        if (!pair.inner.contains(p.u, p.v)) annulus.push_back(p);
    return annulus;
}

std::string region_to_json(const Region& r) {
    std::ostringstream out;
    out.precision(17);
    out << "{\"shape\":\"" << (r.shape == Shape::Ellipse ? "ellipse" : "rectangle")
        << "\",\"cu\":" << r.cu << ",\"cv\":" << r.cv << ",\"a\":" << r.a
        << ",\"b\":" << r.b << ",\"theta\":" << r.theta << "}";
    return out.str();
}

}  // namespace nde
