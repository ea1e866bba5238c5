#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>

#include "blpr/config.hpp"
#include "blpr/image.hpp"

namespace blpr {

struct VlmResult {
    std::string raw_text;
    std::string sanitized;  // over [0-9A-Z]
    double latency_ms = 0.0;
    bool failed = false;
    std::string fail_reason;
};

// Uppercase, strip the literal "BOLIVIA", drop everything outside [0-9A-Z],
// then prefer the first digit{3,4}letter{3} run (tolerating a trailing
// department letter).
std::string sanitize(const std::string& raw);

class VlmPort {
public:
    virtual ~VlmPort() = default;
    virtual VlmResult query(const ImageBuffer& roi, const VlmConfig& cfg) = 0;
};

// JPEG-encodes the ROI and POSTs
//   {"model": ..., "prompt": ..., "images": [<base64>], "stream": false}
// expecting {"response": <text>}. Transport failures come back as failed
// results; the pipeline degrades instead of aborting.
class HttpVlmClient : public VlmPort {
public:
    VlmResult query(const ImageBuffer& roi, const VlmConfig& cfg) override;
};

// Deterministic in-process stand-in: canned responses keyed by image content
// hash, with an optional default. Counts queries so tests can assert call
// budgets.
class MockVlm : public VlmPort {
public:
    void add_response(std::uint64_t image_hash, std::string response);
    void set_default_response(std::string response);
    void set_responder(std::function<std::string(std::uint64_t)> fn);
    VlmResult query(const ImageBuffer& roi, const VlmConfig& cfg) override;
    int call_count() const { return calls_.load(); }

private:
    std::unordered_map<std::uint64_t, std::string> canned_;
    std::string default_response_;
    std::function<std::string(std::uint64_t)> responder_;
    std::atomic<int> calls_{0};
};

std::uint64_t image_hash(const ImageBuffer& img);

std::string base64_encode(const std::uint8_t* data, std::size_t n);

} // namespace blpr
