#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "blpr/eval.hpp"
#include "blpr/io.hpp"
#include "blpr/synth.hpp"

using namespace blpr;
using namespace blpr::synth;
namespace fs = std::filesystem;

TEST_CASE("random plate specs follow the national format") {
    std::set<std::string> seen;
    for (int i = 0; i < 50; ++i) {
        const PlateSpec s = random_plate_spec(i);
        CHECK(s.digits.size() >= 3);
        CHECK(s.digits.size() <= 4);
        CHECK(s.letters.size() == 3);
        for (char c : s.digits) CHECK((c >= '0' && c <= '9'));
        for (char c : s.letters) CHECK((c >= 'A' && c <= 'Z'));
        CHECK((s.department >= 'A' && s.department <= 'Z'));
        CHECK(s.text() == s.digits + s.letters);
        seen.insert(s.text());
    }
    CHECK(seen.size() > 40);  // seeds actually vary the content
    // same seed, same plate
    CHECK(random_plate_spec(123).text() == random_plate_spec(123).text());
}

TEST_CASE("render_plate produces the canonical canvas with char boxes") {
    PlateSpec spec;
    spec.digits = "1234";
    spec.letters = "ABC";
    spec.department = 'L';
    const RenderedPlate p = render_plate(spec);
    CHECK(p.image.width() == kPlateWidth);
    CHECK(p.image.height() == kPlateHeight);
    CHECK(p.image.channels() == 3);
    REQUIRE(p.char_boxes.size() == 7);
    // boxes are ordered left to right and inside the plate
    for (std::size_t i = 0; i < p.char_boxes.size(); ++i) {
        const BBox& b = p.char_boxes[i];
        CHECK(b.x0 >= 0);
        CHECK(b.x1 <= kPlateWidth);
        if (i > 0) CHECK(b.x0 > p.char_boxes[i - 1].x0);
    }
    // department box sits in the top-right corner zone used by assembly
    const BBox& d = p.department_box;
    CHECK((d.x0 + d.x1) / 2 > 0.85 * kPlateWidth);
    CHECK((d.y0 + d.y1) / 2 < 0.40 * kPlateHeight);

    PlateSpec bad = spec;
    bad.letters = "AB";
    CHECK_THROWS(render_plate(bad));
}

TEST_CASE("angle categories follow the viewpoint thresholds") {
    CHECK(angle_category(90, 90) == AngleCategory::Normal);
    CHECK(angle_category(100, 90) == AngleCategory::Normal);   // max dev 10
    CHECK(angle_category(101, 90) == AngleCategory::Tilted);
    CHECK(angle_category(90, 125) == AngleCategory::Tilted);   // dev 35
    CHECK(angle_category(90, 126) == AngleCategory::Steep);
    CHECK(angle_category(30, 90) == AngleCategory::Steep);
    CHECK(std::string(to_string(AngleCategory::Steep)) == "Steep");
}

TEST_CASE("frontal scene: corners match a pure scale+offset projection") {
    PlateSpec spec;
    spec.digits = "123";
    spec.letters = "XYZ";
    const RenderedPlate plate = render_plate(spec);
    SceneSpec ss;  // frontal defaults
    const auto scene = compose_scene(plate, spec, ss);
    REQUIRE(scene.has_value());
    // frontal view: corners form an axis-aligned rectangle centered in canvas
    const auto& c = scene->gt.plate_corners;
    CHECK(c[0].y == doctest::Approx(c[1].y));
    CHECK(c[0].x == doctest::Approx(c[3].x));
    const double cx = (c[0].x + c[2].x) / 2;
    CHECK(cx == doctest::Approx(ss.canvas_w / 2.0).epsilon(0.01));
    // homography maps plate corners onto gt corners
    const Point2 tl = scene->plate_to_scene.apply({0, 0});
    CHECK(tl.x == doctest::Approx(c[0].x).epsilon(1e-6));
    CHECK(tl.y == doctest::Approx(c[0].y).epsilon(1e-6));
}

TEST_CASE("yaw shrinks one side: scene geometry responds to angles") {
    PlateSpec spec;
    spec.digits = "555";
    spec.letters = "AAA";
    const RenderedPlate plate = render_plate(spec);
    SceneSpec ss;
    ss.h_angle = 130.0;
    const auto scene = compose_scene(plate, spec, ss);
    REQUIRE(scene.has_value());
    const auto& c = scene->gt.plate_corners;
    const double left_h = c[3].y - c[0].y;
    const double right_h = c[2].y - c[1].y;
    CHECK(left_h != doctest::Approx(right_h).epsilon(0.01));
}

TEST_CASE("out-of-range angles are rejected") {
    PlateSpec spec;
    spec.digits = "111";
    spec.letters = "AAA";
    const RenderedPlate plate = render_plate(spec);
    SceneSpec ss;
    ss.h_angle = 20.0;
    CHECK_THROWS(compose_scene(plate, spec, ss));
    ss.h_angle = 90.0;
    ss.v_angle = 80.0;
    CHECK_THROWS(compose_scene(plate, spec, ss));
}

TEST_CASE("illumination gain drives the category label") {
    PlateSpec spec;
    spec.digits = "222";
    spec.letters = "BBB";
    const RenderedPlate plate = render_plate(spec);
    SceneSpec dark;
    dark.illumination_gain = 0.2;
    const auto low = compose_scene(plate, spec, dark);
    REQUIRE(low.has_value());
    CHECK(low->gt.illum_cat == IllumCategory::Low);

    SceneSpec bright;
    bright.illumination_gain = 1.0;
    const auto high = compose_scene(plate, spec, bright);
    REQUIRE(high.has_value());
    CHECK(high->gt.illum_cat == IllumCategory::High);  // white plate dominates
}

TEST_CASE("same seed reproduces identical noisy scenes") {
    PlateSpec spec;
    spec.digits = "333";
    spec.letters = "CCC";
    const RenderedPlate plate = render_plate(spec);
    SceneSpec ss;
    ss.noise.gaussian_sigma = 8.0;
    ss.noise.salt_pepper_p = 0.01;
    ss.seed = 42;
    const auto a = compose_scene(plate, spec, ss);
    const auto b = compose_scene(plate, spec, ss);
    REQUIRE(a.has_value());
    REQUIRE(b.has_value());
    CHECK(a->image == b->image);
    ss.seed = 43;
    const auto c = compose_scene(plate, spec, ss);
    CHECK(!(a->image == c->image));
}

TEST_CASE("generate_corpus writes images, manifest and detections") {
    const std::string dir = "/tmp/blpr_test_corpus";
    fs::remove_all(dir);
    CorpusOptions opts;
    opts.n = 5;
    opts.seed = 9;
    opts.out_dir = dir;
    opts.far_frac = 1.0;  // everything labeled far for the exclusion tests
    const auto entries = generate_corpus(opts);
    REQUIRE(entries.size() == 5);
    for (const auto& e : entries) {
        CHECK(fs::exists(fs::path(dir) / e.image));
        CHECK(e.distance == "far");
        const ImageBuffer img = read_png((fs::path(dir) / e.image).string());
        CHECK(img.width() == 640);
    }
    // manifest is loadable by the eval module and consistent
    const auto records = eval::load_manifest(dir + "/manifest.jsonl");
    REQUIRE(records.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(records[i].plate == entries[i].gt.text);
        CHECK(records[i].distance == "far");
    }
    // detections sidecar has matching lines
    std::ifstream det(dir + "/detections.jsonl");
    int lines = 0;
    std::string line;
    while (std::getline(det, line))
        if (!line.empty()) {
            const auto j = nlohmann::json::parse(line);
            CHECK(j.contains("cars"));
            CHECK(j.contains("plates"));
            ++lines;
        }
    CHECK(lines == 5);
    fs::remove_all(dir);
}

TEST_CASE("corpus generation is reproducible from the seed") {
    CorpusOptions opts;
    opts.n = 3;
    opts.seed = 31337;
    opts.out_dir = "/tmp/blpr_test_corpus_a";
    fs::remove_all(opts.out_dir);
    const auto a = generate_corpus(opts);
    opts.out_dir = "/tmp/blpr_test_corpus_b";
    fs::remove_all(opts.out_dir);
    const auto b = generate_corpus(opts);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].gt.text == b[i].gt.text);
        const ImageBuffer ia = read_png("/tmp/blpr_test_corpus_a/" + a[i].image);
        const ImageBuffer ib = read_png("/tmp/blpr_test_corpus_b/" + b[i].image);
        CHECK(ia == ib);
    }
    fs::remove_all("/tmp/blpr_test_corpus_a");
    fs::remove_all("/tmp/blpr_test_corpus_b");
}
