#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace blpr {

// Owned 8-bit raster, row-major, interleaved channels (1 = gray, 3 = RGB).
class ImageBuffer {
public:
    ImageBuffer() = default;
    ImageBuffer(int width, int height, int channels, std::uint8_t fill = 0)
        : width_(width), height_(height), channels_(channels),
          data_(static_cast<std::size_t>(width) * height * channels, fill) {
        if (width < 1 || height < 1 || (channels != 1 && channels != 3))
            throw std::invalid_argument("ImageBuffer: bad dimensions");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    bool empty() const { return data_.empty(); }
    std::size_t size() const { return data_.size(); }

    std::uint8_t* data() { return data_.data(); }
    const std::uint8_t* data() const { return data_.data(); }
    std::uint8_t* row(int y) { return data_.data() + static_cast<std::size_t>(y) * width_ * channels_; }
    const std::uint8_t* row(int y) const { return data_.data() + static_cast<std::size_t>(y) * width_ * channels_; }

    std::uint8_t& at(int x, int y, int c = 0) {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }
    std::uint8_t at(int x, int y, int c = 0) const {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }

    bool in_bounds(int x, int y) const {
        return x >= 0 && x < width_ && y >= 0 && y < height_;
    }

    friend bool operator==(const ImageBuffer& a, const ImageBuffer& b) {
        return a.width_ == b.width_ && a.height_ == b.height_ &&
               a.channels_ == b.channels_ && a.data_ == b.data_;
    }

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<std::uint8_t> data_;
};

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

inline bool operator==(const Point2& a, const Point2& b) { return a.x == b.x && a.y == b.y; }

// Closed boundary; first/last adjacency is implied.
struct Contour {
    std::vector<Point2> points;
};

} // namespace blpr
