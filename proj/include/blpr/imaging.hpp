#pragma once

#include <cstdint>
#include <vector>

#include "blpr/geometry.hpp"
#include "blpr/image.hpp"

namespace blpr {

ImageBuffer to_grayscale(const ImageBuffer& img);  // throws on 1-channel input

// Tile-local histogram equalization with clipping and bilinear blending.
// Falls back to global equalization when tiles do not fit the image.
ImageBuffer clahe(const ImageBuffer& gray, int tiles = 8, double clip = 2.0);

// Gaussian 5x5 (sigma 1.4), Sobel, non-maximum suppression, hysteresis.
// Output pixels are 0 or 255.
ImageBuffer canny(const ImageBuffer& gray, int low = 50, int high = 150);

// Outer boundaries of 8-connected foreground components (Moore tracing).
std::vector<Contour> find_contours(const ImageBuffer& binary);

// Douglas-Peucker on a closed polyline.
Contour approx_poly(const Contour& contour, double epsilon);

ImageBuffer morph_close(const ImageBuffer& binary, int kernel_w, int kernel_h);
ImageBuffer morph_dilate(const ImageBuffer& binary, int kernel_w, int kernel_h);
ImageBuffer morph_erode(const ImageBuffer& binary, int kernel_w, int kernel_h);

// Simplified non-local means: 7x7 patches, 21x21 search window, h = 10.
// Per-offset integral images keep it tractable on ROI-sized inputs.
ImageBuffer denoise(const ImageBuffer& img);

// Inverse mapping with bilinear interpolation; out-of-bounds samples are 0.
// `h` maps input coordinates to output coordinates.
ImageBuffer warp_perspective(const ImageBuffer& img, const Homography& h,
                             int out_w, int out_h);

struct ValueStats {
    double mean = 0.0;
    double stddev = 0.0;
};

// Stats of the HSV Value channel, V = max(R, G, B).
ValueStats rgb_to_hsv_value_stats(const ImageBuffer& img);

// Replaces V with 255*(V/255)^gamma; hue and saturation are preserved by
// scaling all channels with the common factor V'/V.
ImageBuffer apply_gamma_to_value(const ImageBuffer& img, double gamma);

int otsu_threshold(const ImageBuffer& gray);
// foreground = 255 where pixel < thresh (dark_foreground) or >= thresh.
ImageBuffer binarize(const ImageBuffer& gray, int thresh, bool dark_foreground = false);

struct Component {
    int area = 0;
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // inclusive bounds
    std::vector<int> pixels;             // flat indices y * width + x
    int width() const { return x1 - x0 + 1; }
    int height() const { return y1 - y0 + 1; }
};

std::vector<Component> connected_components(const ImageBuffer& binary);

ImageBuffer global_equalize(const ImageBuffer& gray, double clip);

} // namespace blpr
