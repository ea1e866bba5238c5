#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "blpr/detection.hpp"
#include "blpr/geometry.hpp"
#include "blpr/image.hpp"

namespace blpr::synth {

constexpr int kPlateWidth = 440;
constexpr int kPlateHeight = 140;

struct PlateSpec {
    std::string digits;   // 3-4 of [0-9]
    std::string letters;  // 3 of [A-Z]
    char department = 'L';
    std::uint64_t seed = 0;

    std::string text() const { return digits + letters; }  // no department
};

// Random spec matching the national plate format.
PlateSpec random_plate_spec(std::uint64_t seed);

struct NoiseSpec {
    double gaussian_sigma = 0.0;
    double salt_pepper_p = 0.0;
    int blur_radius = 0;
};

struct SceneSpec {
    double h_angle = 90.0;  // degrees, [30, 150]
    double v_angle = 90.0;  // degrees, [90, 150]
    double illumination_gain = 1.0;
    NoiseSpec noise;
    int canvas_w = 640;
    int canvas_h = 480;
    std::uint8_t background = 96;
    double z_scale = 1.0;  // <1 moves the camera closer (stronger perspective)
    std::uint64_t seed = 0;
};

enum class AngleCategory { Normal, Tilted, Steep };
enum class IllumCategory { Low, Medium, High };
const char* to_string(AngleCategory c);
const char* to_string(IllumCategory c);
AngleCategory angle_category(double h_angle, double v_angle);

struct GroundTruth {
    std::string text;
    std::array<Point2, 4> plate_corners{};  // scene coordinates, TL TR BR BL
    std::vector<BBox> char_boxes;           // plate-local, main line only
    AngleCategory angle_cat = AngleCategory::Normal;
    IllumCategory illum_cat = IllumCategory::Medium;
};

struct RenderedPlate {
    ImageBuffer image;  // flat 440x140 plate
    std::vector<BBox> char_boxes;
    BBox bolivia_box;
    BBox department_box;
};

RenderedPlate render_plate(const PlateSpec& spec);

struct Scene {
    ImageBuffer image;
    GroundTruth gt;
    Homography plate_to_scene;
};

// Pinhole projection of the flat plate; empty when a corner lands behind
// the camera (caller resamples the angles).
std::optional<Scene> compose_scene(const RenderedPlate& plate, const PlateSpec& spec,
                                   const SceneSpec& scene);

struct CorpusOptions {
    int n = 100;
    std::uint64_t seed = 0;
    std::string out_dir;
    double h_angle_min = 90.0, h_angle_max = 90.0;
    double v_angle_min = 90.0, v_angle_max = 90.0;
    double gain_min = 1.0, gain_max = 1.0;
    NoiseSpec noise;
    double far_frac = 0.0;  // fraction labeled "far" for exclusion tests
};

struct CorpusEntry {
    std::string image;  // path relative to out_dir
    PlateSpec spec;
    GroundTruth gt;
    BBox plate_box;  // scene-coordinate bounding box
    std::string distance;
};

// Writes images/, manifest.jsonl and detections.jsonl under out_dir;
// reproducible from the seed.
std::vector<CorpusEntry> generate_corpus(const CorpusOptions& opts);

} // namespace blpr::synth
