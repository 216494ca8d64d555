#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ndeflaw/geometry.hpp"
#include "ndeflaw/rng.hpp"

using namespace nde;

TEST_CASE("ellipse membership is exact on axis-aligned cases") {
    Region e{Shape::Ellipse, 10.0, 10.0, 4.0, 2.0, 0.0};
    CHECK(e.contains(10, 10));
    CHECK(e.contains(14, 10));   // on the boundary
    CHECK_FALSE(e.contains(15, 10));
    CHECK(e.contains(10, 12));
    CHECK_FALSE(e.contains(10, 13));
    CHECK_FALSE(e.contains(13, 12));  // inside the bounding box, outside the ellipse
}

TEST_CASE("rectangle membership rotates with theta") {
    Region r{Shape::Rectangle, 0.0, 0.0, 4.0, 1.0, 0.0};
    CHECK(r.contains(4, 0));
    CHECK_FALSE(r.contains(0, 2));
    Region rot{Shape::Rectangle, 0.0, 0.0, 4.0, 1.0, std::numbers::pi / 2};
    CHECK(rot.contains(0, 4));
    CHECK_FALSE(rot.contains(2, 0));
}

TEST_CASE("canonical form orders the axes and folds theta") {
    Region r{Shape::Ellipse, 5.0, 5.0, 2.0, 6.0, 0.2};
    const Region c = r.canonical();
    CHECK(c.a == doctest::Approx(6.0));
    CHECK(c.b == doctest::Approx(2.0));
    CHECK(c.theta == doctest::Approx(0.2 + std::numbers::pi / 2));
    CHECK(c.theta >= 0.0);
    CHECK(c.theta < std::numbers::pi);
    // membership is unchanged by canonicalization
    for (int u = 0; u < 12; ++u)
        for (int v = 0; v < 12; ++v) CHECK(r.contains(u, v) == c.contains(u, v));
}

TEST_CASE("equal-area annulus width doubles the region area exactly") {
    CHECK(equal_area_delta(4.0, 2.0) == doctest::Approx(1.1231056).epsilon(1e-6));
    Rng rng(2024);
    for (int i = 0; i < 10000; ++i) {
        const double a = rng.uniform(1e-3, 50.0);
        const double b = rng.uniform(1e-3, 50.0);
        const double d = equal_area_delta(a, b);
        CHECK((a + d) * (b + d) == doctest::Approx(2.0 * a * b).epsilon(1e-12));
    }
}

TEST_CASE("outer region shares center and orientation with the inner") {
    Region inner{Shape::Ellipse, 12.0, 9.0, 5.0, 3.0, 0.7};
    const RegionPair p = make_outer(inner);
    CHECK(p.outer.cu == inner.cu);
    CHECK(p.outer.cv == inner.cv);
    CHECK(p.outer.theta == inner.theta);
    CHECK(p.outer.a == doctest::Approx(inner.a + p.delta));
    CHECK(p.outer.b == doctest::Approx(inner.b + p.delta));
}

TEST_CASE("rasterized pixel counts approximate the continuous areas") {
    Region inner{Shape::Ellipse, 40.0, 40.0, 12.0, 8.0, 0.5};
    const RegionPair p = make_outer(inner);
    const auto in_px = rasterize(inner, 80, 80);
    const auto ann_px = rasterize_annulus(p, 80, 80);
    const double area = std::numbers::pi * inner.a * inner.b;
    CHECK(std::abs(static_cast<double>(in_px.size()) - area) / area < 0.05);
    // annulus area equals the inner area by construction
    CHECK(std::abs(static_cast<double>(ann_px.size()) - area) / area < 0.05);
    // disjointness
    for (const Pixel& px : ann_px) CHECK_FALSE(inner.contains(px.u, px.v));
}

TEST_CASE("rasterization clips to the image bounds") {
    Region r{Shape::Ellipse, 0.0, 0.0, 5.0, 5.0, 0.0};
    for (const Pixel& px : rasterize(r, 10, 10)) {
        CHECK(px.u >= 0);
        CHECK(px.v >= 0);
    }
    // fully outside
    Region out{Shape::Ellipse, -20.0, -20.0, 3.0, 3.0, 0.0};
    CHECK(rasterize(out, 10, 10).empty());
}
