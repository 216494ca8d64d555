#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "ndeflaw/geometry.hpp"
#include "ndeflaw/image.hpp"

using namespace nde;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("ndeflaw-test-" + std::to_string(
                    std::hash<std::string>{}(fs::current_path().string()) % 100000));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name, const std::string& content) const {
        const auto p = path / name;
        std::ofstream out(p, std::ios::binary);
        out << content;
        return p.string();
    }
};

}  // namespace

TEST_CASE("matrix text images accept space and comma separators") {
    TempDir tmp;
    const auto space = tmp.file("a.txt", "1 2 3\n4 5 6\n");
    const auto comma = tmp.file("b.txt", "1,2,3\n\n4, 5 ,6\n");
    const ImageGrid a = load_image(space);
    const ImageGrid b = load_image(comma);
    CHECK(a.n1() == 3);
    CHECK(a.n2() == 2);
    CHECK(a.at(2, 1) == 6.0);
    CHECK(a.data() == b.data());
}

TEST_CASE("ragged and non-numeric files are rejected with location info") {
    TempDir tmp;
    const auto ragged = tmp.file("r.txt", "1 2 3\n4 5\n");
    const auto junk = tmp.file("j.txt", "1 2\nx 4\n");
    CHECK_THROWS_WITH_AS(load_image(ragged), doctest::Contains("line 2"), error);
    CHECK_THROWS_AS(load_image(junk), error);
    CHECK_THROWS_AS(load_image((tmp.path / "missing.txt").string()), error);
}

TEST_CASE("pgm variants load with auto-detection") {
    TempDir tmp;
    const auto p2 = tmp.file("a.pgm", "P2\n# comment\n3 2\n255\n0 10 20\n30 40 50\n");
    const ImageGrid a = load_image(p2);
    CHECK(a.n1() == 3);
    CHECK(a.n2() == 2);
    CHECK(a.at(1, 1) == 40.0);

    std::string p5 = "P5\n2 2\n255\n";
    p5 += '\x01';
    p5 += '\x02';
    p5 += '\x03';
    p5 += '\xff';
    const auto bin = tmp.file("b.pgm", p5);
    const ImageGrid b = load_image(bin);
    CHECK(b.at(0, 0) == 1.0);
    CHECK(b.at(1, 1) == 255.0);

    const auto trunc = tmp.file("t.pgm", "P2\n3 2\n255\n0 10\n");
    CHECK_THROWS_AS(load_image(trunc), error);
}

TEST_CASE("save and load round-trips at full precision") {
    TempDir tmp;
    const ImageGrid img(2, 2, {1.25e-6, -3.0, 0.1234567890123456, 42.0});
    const auto p = (tmp.path / "x.txt").string();
    save_image(img, p);
    const ImageGrid back = load_image(p);
    for (std::size_t i = 0; i < img.data().size(); ++i)
        CHECK(back.data()[i] == doctest::Approx(img.data()[i]).epsilon(1e-15));
}

TEST_CASE("manifest parsing enforces the flawed/flaw_size consistency rule") {
    TempDir tmp;
    const auto good = tmp.file("m.csv",
                               "image,flaw_size,flawed\n"
                               "img1.txt,40.5,true\n"
                               "\"img with,comma.txt\",,false\n");
    const auto recs = load_manifest(good);
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].flaw_size.value() == doctest::Approx(40.5));
    CHECK(recs[0].is_flawed);
    CHECK(recs[1].image_path == "img with,comma.txt");
    CHECK_FALSE(recs[1].flaw_size.has_value());

    const auto bad = tmp.file("bad.csv", "image,flaw_size,flawed\nimg.txt,40.5,false\n");
    CHECK_THROWS_AS(load_manifest(bad), error);
    const auto badhdr = tmp.file("hdr.csv", "file,size,flag\nimg.txt,40.5,true\n");
    CHECK_THROWS_AS(load_manifest(badhdr), error);
}

TEST_CASE("bias estimate excludes the given region") {
    // 4x4 image: background 2.0, one bright region pixel
    ImageGrid img(4, 4, {2, 2, 2, 2, 2, 100, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2});
    CHECK(estimate_bias(img) == doctest::Approx((15 * 2.0 + 100) / 16.0));
    Region r{Shape::Ellipse, 1.0, 1.0, 0.8, 0.8, 0.0};
    CHECK(estimate_bias(img, &r) == doctest::Approx(2.0));
    CHECK(estimate_bias_median(img) == doctest::Approx(2.0));

    Region all{Shape::Rectangle, 1.5, 1.5, 10, 10, 0.0};
    CHECK_THROWS_AS(estimate_bias(img, &all), error);
}

TEST_CASE("non-finite pixels are rejected on construction") {
    CHECK_THROWS_AS(ImageGrid(2, 1, std::vector<double>{1.0, std::nan("")}), error);
    CHECK_THROWS_AS(ImageGrid(0, 1, std::vector<double>{}), error);
}
