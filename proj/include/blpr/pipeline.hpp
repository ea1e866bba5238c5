#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "blpr/config.hpp"
#include "blpr/detection.hpp"
#include "blpr/photometric.hpp"
#include "blpr/reading.hpp"
#include "blpr/rectify.hpp"
#include "blpr/vlm.hpp"

namespace blpr {

enum class ReadingRoute { FastPath, VlmFallback, VlmForced, Null };
const char* to_string(ReadingRoute r);

struct PlateReading {
    std::string text;
    ReadingRoute route = ReadingRoute::Null;
    std::optional<AssembledText> assembled;
    std::optional<VlmResult> vlm;
    GammaDecision gamma;
    std::optional<RectifyRoute> rectify_route;
    std::map<std::string, double> timings;  // keys: detect/rectify/photometric/ocr/vlm/total
    Detection source_box;
};

// Runs one already-cropped ROI through rectify -> photometric -> OCR ->
// tripwire -> optional fallback. Shared by the frame path and the
// single-stage debug commands.
PlateReading process_roi(const ImageBuffer& roi, RecognizerPort& recognizer,
                         VlmPort* vlm, const PipelineConfig& cfg,
                         const std::string& debug_dir = "");

// Full frame path; empty optional iff no validated plate.
std::optional<PlateReading> process_frame(const ImageBuffer& frame, const std::string& name,
                                          DetectorPort& detector, RecognizerPort& recognizer,
                                          VlmPort* vlm, const PipelineConfig& cfg,
                                          const std::string& debug_dir = "");

// Every validated plate, in detector order.
std::vector<PlateReading> process_frame_all(const ImageBuffer& frame, const std::string& name,
                                            DetectorPort& detector, RecognizerPort& recognizer,
                                            VlmPort* vlm, const PipelineConfig& cfg);

struct BatchItem {
    std::string image_path;
    std::string name;
};

struct BatchResult {
    std::optional<PlateReading> reading;
    bool error = false;
    std::string error_msg;
};

// Frame-level parallelism; results come back in manifest order regardless of
// worker count. Ports must be concurrency-safe.
std::vector<BatchResult> process_batch(const std::vector<BatchItem>& items,
                                       DetectorPort& detector, RecognizerPort& recognizer,
                                       VlmPort* vlm, const PipelineConfig& cfg, int workers);

nlohmann::json reading_to_json(const PlateReading& r, bool include_timings = true);
nlohmann::json batch_result_to_json(const BatchResult& r, const std::string& name,
                                    bool include_timings = true);

} // namespace blpr
