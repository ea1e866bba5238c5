#include "blpr/vlm.hpp"

#include <cctype>
#include <chrono>
#include <regex>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "blpr/io.hpp"

namespace blpr {

using json = nlohmann::json;

std::string sanitize(const std::string& raw) {
    std::string upper;
    upper.reserve(raw.size());
    for (char c : raw) upper += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));

    for (std::size_t pos; (pos = upper.find("BOLIVIA")) != std::string::npos;)
        upper.erase(pos, 7);

    std::string stripped;
    for (char c : upper)
        if ((c >= '0' && c <= '9') || (c >= 'A' && c <= 'Z')) stripped += c;

    static const std::regex plate_re("[0-9]{3,4}[A-Z]{3}");
    std::smatch m;
    if (std::regex_search(stripped, m, plate_re)) {
        const std::string match = m.str();
        // A trailing 4th letter right after the match is a department code;
        // the regex already stops before it, so the match itself is the plate.
        return match;
    }
    return stripped;
}

std::uint64_t image_hash(const ImageBuffer& img) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](std::uint64_t v) {
        h ^= v;
        h *= 1099511628211ull;
    };
    mix(static_cast<std::uint64_t>(img.width()));
    mix(static_cast<std::uint64_t>(img.height()));
    mix(static_cast<std::uint64_t>(img.channels()));
    for (std::size_t i = 0; i < img.size(); ++i) mix(img.data()[i]);
    return h;
}

std::string base64_encode(const std::uint8_t* data, std::size_t n) {
    static const char* tbl = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((n + 2) / 3 * 4);
    for (std::size_t i = 0; i < n; i += 3) {
        std::uint32_t v = static_cast<std::uint32_t>(data[i]) << 16;
        if (i + 1 < n) v |= static_cast<std::uint32_t>(data[i + 1]) << 8;
        if (i + 2 < n) v |= data[i + 2];
        out += tbl[(v >> 18) & 63];
        out += tbl[(v >> 12) & 63];
        out += i + 1 < n ? tbl[(v >> 6) & 63] : '=';
        out += i + 2 < n ? tbl[v & 63] : '=';
    }
    return out;
}

VlmResult HttpVlmClient::query(const ImageBuffer& roi, const VlmConfig& cfg) {
    VlmResult res;
    const auto t0 = std::chrono::steady_clock::now();
    auto finish = [&]() {
        res.latency_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - t0).count();
        return res;
    };

    std::string host, path;
    int port = 80;
    {
        std::string url = cfg.endpoint;
        const std::string scheme = "http://";
        if (url.rfind(scheme, 0) != 0) {
            res.failed = true;
            res.fail_reason = "unsupported endpoint scheme";
            return finish();
        }
        url = url.substr(scheme.size());
        const auto slash = url.find('/');
        path = slash == std::string::npos ? "/" : url.substr(slash);
        std::string hostport = url.substr(0, slash);
        const auto colon = hostport.find(':');
        if (colon != std::string::npos) {
            host = hostport.substr(0, colon);
            port = std::stoi(hostport.substr(colon + 1));
        } else {
            host = hostport;
        }
    }

    const std::vector<std::uint8_t> jpeg = encode_jpeg(roi, cfg.jpeg_quality);
    const json body = {{"model", cfg.model},
                       {"prompt", cfg.prompt},
                       {"images", {base64_encode(jpeg.data(), jpeg.size())}},
                       {"stream", false}};

    httplib::Client client(host, port);
    client.set_connection_timeout(0, cfg.timeout_ms * 1000);
    client.set_read_timeout(cfg.timeout_ms / 1000, (cfg.timeout_ms % 1000) * 1000);
    client.set_write_timeout(cfg.timeout_ms / 1000, (cfg.timeout_ms % 1000) * 1000);

    const httplib::Result r = client.Post(path, body.dump(), "application/json");
    if (!r) {
        res.failed = true;
        res.fail_reason = r.error() == httplib::Error::ConnectionTimeout ||
                          r.error() == httplib::Error::Read ? "timeout" : "connection";
        return finish();
    }
    if (r->status != 200) {
        res.failed = true;
        res.fail_reason = "http " + std::to_string(r->status);
        return finish();
    }
    try {
        const json resp = json::parse(r->body);
        res.raw_text = resp.at("response").get<std::string>();
    } catch (const std::exception&) {
        res.failed = true;
        res.fail_reason = "malformed response";
        return finish();
    }
    res.sanitized = sanitize(res.raw_text);
    return finish();
}

void MockVlm::add_response(std::uint64_t hash, std::string response) {
    canned_[hash] = std::move(response);
}
void MockVlm::set_default_response(std::string response) {
    default_response_ = std::move(response);
}
void MockVlm::set_responder(std::function<std::string(std::uint64_t)> fn) {
    responder_ = std::move(fn);
}

VlmResult MockVlm::query(const ImageBuffer& roi, const VlmConfig&) {
    ++calls_;
    VlmResult res;
    const std::uint64_t h = image_hash(roi);
    if (const auto it = canned_.find(h); it != canned_.end()) {
        res.raw_text = it->second;
    } else if (responder_) {
        res.raw_text = responder_(h);
    } else if (!default_response_.empty()) {
        res.raw_text = default_response_;
    } else {
        res.failed = true;
        res.fail_reason = "no canned response";
        return res;
    }
    res.sanitized = sanitize(res.raw_text);
    return res;
}

} // namespace blpr
