#include "blpr/detection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <random>
#include <stdexcept>

#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

namespace blpr {

using json = nlohmann::json;

double intersection_area(const BBox& a, const BBox& b) {
    const double w = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
    const double h = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
    return (w > 0 && h > 0) ? w * h : 0.0;
}

std::vector<Detection> validate_plates(const std::vector<Detection>& plates,
                                       const std::vector<Detection>& cars,
                                       double inside_frac) {
    std::vector<Detection> out;
    for (const Detection& p : plates) {
        const double pa = p.box.area();
        if (pa <= 0.0) continue;
        for (const Detection& c : cars) {
            if (intersection_area(p.box, c.box) / pa >= inside_frac) {
                out.push_back(p);
                break;
            }
        }
    }
    return out;
}

std::optional<Detection> best_box(const std::vector<Detection>& plates) {
    if (plates.empty()) return std::nullopt;
    const Detection* best = &plates[0];
    for (const Detection& p : plates)
        if (p.confidence > best->confidence) best = &p;
    return *best;
}

ImageBuffer crop_padded(const ImageBuffer& frame, const Detection& det, int pad) {
    if (pad < 0) throw std::invalid_argument("crop_padded: pad must be >= 0");
    const int x0 = std::max(0, static_cast<int>(std::floor(det.box.x0)) - pad);
    const int y0 = std::max(0, static_cast<int>(std::floor(det.box.y0)) - pad);
    const int x1 = std::min(frame.width(), static_cast<int>(std::ceil(det.box.x1)) + pad);
    const int y1 = std::min(frame.height(), static_cast<int>(std::ceil(det.box.y1)) + pad);
    if (x1 <= x0 || y1 <= y0) throw std::invalid_argument("crop_padded: degenerate box");
    ImageBuffer out(x1 - x0, y1 - y0, frame.channels());
    for (int y = y0; y < y1; ++y) {
        const std::uint8_t* src = frame.row(y) + static_cast<std::size_t>(x0) * frame.channels();
        std::copy_n(src, static_cast<std::size_t>(x1 - x0) * frame.channels(), out.row(y - y0));
    }
    return out;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// ---------------------------------------------------------------------------
// FixtureDetector

namespace {

std::vector<BBox> parse_boxes(const json& arr) {
    std::vector<BBox> out;
    for (const auto& b : arr) {
        if (b.size() < 4) throw std::runtime_error("sidecar: box needs 4 coordinates");
        out.push_back({b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()});
    }
    return out;
}

} // namespace

FixtureDetector::FixtureDetector(const std::string& sidecar_path, double jitter_px,
                                 double drop_rate, std::uint64_t seed)
    : jitter_px_(jitter_px), drop_rate_(drop_rate), seed_(seed) {
    std::ifstream in(sidecar_path);
    if (!in) throw std::runtime_error("FixtureDetector: cannot open " + sidecar_path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        Record rec;
        rec.cars = parse_boxes(j.at("cars"));
        rec.plates = parse_boxes(j.at("plates"));
        records_.emplace_back(j.at("image").get<std::string>(), std::move(rec));
    }
}

namespace {

std::string basename_of(const std::string& path) {
    const auto slash = path.find_last_of('/');
    return slash == std::string::npos ? path : path.substr(slash + 1);
}

} // namespace

bool FixtureDetector::has_frame(const std::string& name) const {
    for (const auto& [n, _] : records_)
        if (n == name || basename_of(n) == name) return true;
    return false;
}

FrameDetections FixtureDetector::detect(const ImageBuffer& frame, const std::string& name,
                                        double conf_threshold) {
    const Record* rec = nullptr;
    for (const auto& [n, r] : records_) {
        if (n == name) {
            rec = &r;
            break;
        }
    }
    // Callers that only know the file name (e.g. single-frame runs) still
    // match a sidecar keyed by relative path.
    if (!rec) {
        for (const auto& [n, r] : records_) {
            if (basename_of(n) == name) {
                rec = &r;
                break;
            }
        }
    }
    if (!rec) throw std::runtime_error("FixtureDetector: no annotation for frame '" + name + "'");

    // Per-frame RNG so results do not depend on call order across workers.
    std::mt19937_64 rng(seed_ ^ fnv1a(name));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> jitter(-jitter_px_, jitter_px_);
    std::uniform_real_distribution<double> conf(conf_threshold, 1.0);

    auto emit = [&](const std::vector<BBox>& boxes, const std::string& label,
                    std::vector<Detection>& out) {
        for (const BBox& b : boxes) {
            const bool dropped = unit(rng) < drop_rate_;
            BBox jb = b;
            if (jitter_px_ > 0.0) {
                jb.x0 += jitter(rng); jb.y0 += jitter(rng);
                jb.x1 += jitter(rng); jb.y1 += jitter(rng);
            }
            const double c = conf(rng);
            if (dropped) continue;  // RNG draws happen either way, keeping streams aligned
            jb.x0 = std::clamp(jb.x0, 0.0, static_cast<double>(frame.width()));
            jb.x1 = std::clamp(jb.x1, 0.0, static_cast<double>(frame.width()));
            jb.y0 = std::clamp(jb.y0, 0.0, static_cast<double>(frame.height()));
            jb.y1 = std::clamp(jb.y1, 0.0, static_cast<double>(frame.height()));
            if (jb.x1 <= jb.x0 || jb.y1 <= jb.y0) continue;
            out.push_back({label, jb, c});
        }
    };

    FrameDetections dets;
    emit(rec->cars, "car", dets.cars);
    emit(rec->plates, "plate", dets.plates);
    return dets;
}

// ---------------------------------------------------------------------------
// StdioDetectorAdapter

struct StdioDetectorAdapter::Impl {
    pid_t pid = -1;
    FILE* to_child = nullptr;
    FILE* from_child = nullptr;
    std::mutex mu;

    ~Impl() {
        if (to_child) fclose(to_child);
        if (from_child) fclose(from_child);
        if (pid > 0) {
            int status = 0;
            waitpid(pid, &status, 0);
        }
    }
};

StdioDetectorAdapter::StdioDetectorAdapter(const std::string& command)
    : impl_(std::make_unique<Impl>()) {
    int in_pipe[2], out_pipe[2];
    if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0)
        throw std::runtime_error("StdioDetectorAdapter: pipe failed");
    const pid_t pid = fork();
    if (pid < 0) throw std::runtime_error("StdioDetectorAdapter: fork failed");
    if (pid == 0) {
        dup2(in_pipe[0], STDIN_FILENO);
        dup2(out_pipe[1], STDOUT_FILENO);
        close(in_pipe[0]); close(in_pipe[1]);
        close(out_pipe[0]); close(out_pipe[1]);
        execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);
    impl_->pid = pid;
    impl_->to_child = fdopen(in_pipe[1], "w");
    impl_->from_child = fdopen(out_pipe[0], "r");
    if (!impl_->to_child || !impl_->from_child)
        throw std::runtime_error("StdioDetectorAdapter: fdopen failed");
}

StdioDetectorAdapter::~StdioDetectorAdapter() = default;

FrameDetections StdioDetectorAdapter::detect(const ImageBuffer&, const std::string& name,
                                             double conf_threshold) {
    std::lock_guard<std::mutex> lock(impl_->mu);  // single child, serialized requests
    const json req = {{"image", name}, {"conf_threshold", conf_threshold}};
    const std::string line = req.dump() + "\n";
    if (fputs(line.c_str(), impl_->to_child) == EOF || fflush(impl_->to_child) != 0)
        throw std::runtime_error("StdioDetectorAdapter: write failed");

    std::string resp;
    int c;
    while ((c = fgetc(impl_->from_child)) != EOF && c != '\n') resp.push_back(static_cast<char>(c));
    if (resp.empty()) throw std::runtime_error("StdioDetectorAdapter: no response");

    const json j = json::parse(resp);
    auto parse = [&](const char* key, const std::string& label) {
        std::vector<Detection> out;
        for (const auto& b : j.at(key)) {
            Detection d;
            d.label = label;
            d.box = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
            d.confidence = b.size() > 4 ? b[4].get<double>() : 1.0;
            if (d.confidence >= conf_threshold) out.push_back(d);
        }
        return out;
    };
    return {parse("cars", "car"), parse("plates", "plate")};
}

} // namespace blpr
