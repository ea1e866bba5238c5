#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "blpr/image.hpp"

namespace blpr {

struct BBox {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    double area() const { return std::max(0.0, width()) * std::max(0.0, height()); }
};

double intersection_area(const BBox& a, const BBox& b);

struct Detection {
    std::string label;
    BBox box;
    double confidence = 0.0;
};

struct FrameDetections {
    std::vector<Detection> cars;
    std::vector<Detection> plates;
};

// Abstracts the trained car/plate detector. Implementations must be safe to
// call from multiple workers. `name` identifies the frame for annotation- or
// path-keyed backends.
class DetectorPort {
public:
    virtual ~DetectorPort() = default;
    virtual FrameDetections detect(const ImageBuffer& frame, const std::string& name,
                                   double conf_threshold) = 0;
};

// Keeps plate p iff at least `inside_frac` of its area intersects some car box.
std::vector<Detection> validate_plates(const std::vector<Detection>& plates,
                                       const std::vector<Detection>& cars,
                                       double inside_frac = 0.9);

// Highest confidence wins; ties keep the earlier entry.
std::optional<Detection> best_box(const std::vector<Detection>& plates);

// Box expanded by `pad` on all sides, clamped to the frame. Throws on a
// degenerate post-clamp box.
ImageBuffer crop_padded(const ImageBuffer& frame, const Detection& box, int pad);

// Ground-truth boxes from a JSONL sidecar, perturbed by uniform jitter and
// dropped at `drop_rate`, with synthetic confidences. Deterministic per image
// name under a fixed seed, independent of call order.
class FixtureDetector : public DetectorPort {
public:
    FixtureDetector(const std::string& sidecar_path, double jitter_px = 0.0,
                    double drop_rate = 0.0, std::uint64_t seed = 0);

    FrameDetections detect(const ImageBuffer& frame, const std::string& name,
                           double conf_threshold) override;

    bool has_frame(const std::string& name) const;

private:
    struct Record {
        std::vector<BBox> cars;
        std::vector<BBox> plates;
    };
    std::vector<std::pair<std::string, Record>> records_;
    double jitter_px_;
    double drop_rate_;
    std::uint64_t seed_;
};

// Spawns an external recognizer and speaks line-delimited JSON over stdio:
//   request:  {"image": <path>, "conf_threshold": <t>}
//   response: {"cars": [[x0,y0,x1,y1,conf],...], "plates": [[...],...]}
class StdioDetectorAdapter : public DetectorPort {
public:
    explicit StdioDetectorAdapter(const std::string& command);
    ~StdioDetectorAdapter() override;

    FrameDetections detect(const ImageBuffer& frame, const std::string& name,
                           double conf_threshold) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

std::uint64_t fnv1a(const std::string& s);

} // namespace blpr
