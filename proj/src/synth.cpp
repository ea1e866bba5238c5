#include "blpr/synth.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "blpr/font.hpp"
#include "blpr/imaging.hpp"
#include "blpr/io.hpp"
#include "blpr/kernels.hpp"

namespace blpr::synth {

using json = nlohmann::json;

const char* to_string(AngleCategory c) {
    switch (c) {
        case AngleCategory::Normal: return "Normal";
        case AngleCategory::Tilted: return "Tilted";
        default: return "Steep";
    }
}
const char* to_string(IllumCategory c) {
    switch (c) {
        case IllumCategory::Low: return "Low";
        case IllumCategory::Medium: return "Medium";
        default: return "High";
    }
}

AngleCategory angle_category(double h_angle, double v_angle) {
    const double d = std::max(std::abs(h_angle - 90.0), std::abs(v_angle - 90.0));
    if (d <= 10.0) return AngleCategory::Normal;
    if (d <= 35.0) return AngleCategory::Tilted;
    return AngleCategory::Steep;
}

PlateSpec random_plate_spec(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> digit('0', '9');
    std::uniform_int_distribution<int> letter('A', 'Z');
    std::uniform_int_distribution<int> n_digits(3, 4);
    PlateSpec spec;
    spec.seed = seed;
    const int nd = n_digits(rng);
    for (int i = 0; i < nd; ++i) spec.digits += static_cast<char>(digit(rng));
    for (int i = 0; i < 3; ++i) spec.letters += static_cast<char>(letter(rng));
    spec.department = static_cast<char>(letter(rng));
    return spec;
}

namespace {

void fill_rect(ImageBuffer& img, int x0, int y0, int x1, int y1,
               std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    for (int y = std::max(0, y0); y < std::min(img.height(), y1); ++y)
        for (int x = std::max(0, x0); x < std::min(img.width(), x1); ++x) {
            img.at(x, y, 0) = r;
            img.at(x, y, 1) = g;
            img.at(x, y, 2) = b;
        }
}

} // namespace

RenderedPlate render_plate(const PlateSpec& spec) {
    if (spec.digits.size() < 3 || spec.digits.size() > 4 || spec.letters.size() != 3)
        throw std::invalid_argument("render_plate: spec must be 3-4 digits + 3 letters");

    RenderedPlate out;
    out.image = ImageBuffer(kPlateWidth, kPlateHeight, 3, 255);
    ImageBuffer& img = out.image;

    // Dark blue frame so the quad extractor has a strong outer edge.
    const std::uint8_t br = 10, bg = 10, bb = 110;
    fill_rect(img, 2, 2, kPlateWidth - 2, 6, br, bg, bb);
    fill_rect(img, 2, kPlateHeight - 6, kPlateWidth - 2, kPlateHeight - 2, br, bg, bb);
    fill_rect(img, 2, 2, 6, kPlateHeight - 2, br, bg, bb);
    fill_rect(img, kPlateWidth - 6, 2, kPlateWidth - 2, kPlateHeight - 2, br, bg, bb);

    const std::uint8_t gr = 0, gg = 0, gb = 150;  // glyph blue

    // Header word, small, top-center.
    {
        const int scale = 2;
        const int w = font::text_width(7, scale);
        int x = (kPlateWidth - w) / 2;
        const int y = 10;
        out.bolivia_box = {static_cast<double>(x), static_cast<double>(y),
                           static_cast<double>(x + w), static_cast<double>(y + 7 * scale)};
        for (char c : std::string("BOLIVIA")) {
            font::draw_glyph(img, c, x, y, scale, gr, gg, gb);
            x += (font::kGlyphCols + 1) * scale;
        }
    }

    // Department code, top-right.
    {
        const int scale = 7;
        const int w = font::kGlyphCols * scale, h = font::kGlyphRows * scale;
        // keep a gap above the main line so the glyphs stay separate components
        const int x = kPlateWidth - w - 12, y = 4;
        font::draw_glyph(img, spec.department, x, y, scale, gr, gg, gb);
        out.department_box = {static_cast<double>(x), static_cast<double>(y),
                              static_cast<double>(x + w), static_cast<double>(y + h)};
    }

    // Main line, centered.
    {
        const int scale = 10;
        const std::string text = spec.text();
        const int n = static_cast<int>(text.size());
        const int gw = font::kGlyphCols * scale, gh = font::kGlyphRows * scale;
        const int spacing = 8;
        const int total = n * gw + (n - 1) * spacing;
        int x = (kPlateWidth - total) / 2;
        const int y = 58;
        for (char c : text) {
            font::draw_glyph(img, c, x, y, scale, gr, gg, gb);
            out.char_boxes.push_back({static_cast<double>(x), static_cast<double>(y),
                                      static_cast<double>(x + gw), static_cast<double>(y + gh)});
            x += gw + spacing;
        }
    }
    return out;
}

std::optional<Scene> compose_scene(const RenderedPlate& plate, const PlateSpec& spec,
                                   const SceneSpec& scene) {
    if (scene.h_angle < 30.0 || scene.h_angle > 150.0 || scene.v_angle < 90.0 ||
        scene.v_angle > 150.0)
        throw std::invalid_argument("compose_scene: angles outside the supported ranges");

    const double yaw = (scene.h_angle - 90.0) * M_PI / 180.0;
    const double pitch = (scene.v_angle - 90.0) * M_PI / 180.0;
    const double f = 1.2 * scene.canvas_w;
    const double z0 = scene.z_scale * 2.2 * f * kPlateWidth / (0.55 * scene.canvas_w * 2.0);

    const double cy_ = std::cos(yaw), sy_ = std::sin(yaw);
    const double cp = std::cos(pitch), sp = std::sin(pitch);

    auto project = [&](double px, double py) -> std::optional<Point2> {
        // plate-local -> centered 3D
        const double X = px - kPlateWidth / 2.0;
        const double Y = py - kPlateHeight / 2.0;
        // yaw about the vertical axis, then pitch about the horizontal axis
        const double x1 = cy_ * X;
        const double z1 = -sy_ * X;
        const double y2 = cp * Y - sp * z1;
        const double z2 = sp * Y + cp * z1;
        const double zc = z2 + z0;
        if (zc < 1e-3) return std::nullopt;
        return Point2{f * x1 / zc + scene.canvas_w / 2.0, f * y2 / zc + scene.canvas_h / 2.0};
    };

    const std::array<Point2, 4> plate_corners = {{{0, 0},
                                                  {kPlateWidth, 0},
                                                  {kPlateWidth, kPlateHeight},
                                                  {0, kPlateHeight}}};
    std::array<Point2, 4> projected{};
    for (int i = 0; i < 4; ++i) {
        const auto p = project(plate_corners[i].x, plate_corners[i].y);
        if (!p) return std::nullopt;
        projected[i] = *p;
    }

    Homography h;
    try {
        h = estimate_homography(plate_corners, projected);
    } catch (const std::exception&) {
        return std::nullopt;
    }

    Scene out;
    out.plate_to_scene = h;
    out.gt.text = spec.text();
    out.gt.plate_corners = projected;
    out.gt.char_boxes = plate.char_boxes;
    out.gt.angle_cat = angle_category(scene.h_angle, scene.v_angle);

    // Paste via mask compositing.
    const ImageBuffer warped = warp_perspective(plate.image, h, scene.canvas_w, scene.canvas_h);
    ImageBuffer mask_src(kPlateWidth, kPlateHeight, 1, 255);
    const ImageBuffer mask = warp_perspective(mask_src, h, scene.canvas_w, scene.canvas_h);
    ImageBuffer canvas(scene.canvas_w, scene.canvas_h, 3, scene.background);
    for (int y = 0; y < canvas.height(); ++y)
        for (int x = 0; x < canvas.width(); ++x)
            if (mask.at(x, y) > 128)
                for (int c = 0; c < 3; ++c) canvas.at(x, y, c) = warped.at(x, y, c);

    // Illumination gain, clipped.
    if (scene.illumination_gain != 1.0) {
        kernels::scale_u8(canvas.data(), static_cast<float>(scene.illumination_gain),
                          canvas.data(), canvas.size());
    }

    std::mt19937_64 rng(scene.seed ^ 0x9e3779b97f4a7c15ull);
    if (scene.noise.gaussian_sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, scene.noise.gaussian_sigma);
        for (std::size_t i = 0; i < canvas.size(); ++i) {
            const double v = canvas.data()[i] + noise(rng);
            canvas.data()[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0l, 255l));
        }
    }
    if (scene.noise.salt_pepper_p > 0.0) {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const std::size_t n_px = static_cast<std::size_t>(canvas.width()) * canvas.height();
        for (std::size_t i = 0; i < n_px; ++i) {
            const double u = unit(rng);
            if (u < scene.noise.salt_pepper_p) {
                const std::uint8_t v = u < scene.noise.salt_pepper_p / 2 ? 0 : 255;
                for (int c = 0; c < canvas.channels(); ++c)
                    canvas.data()[i * canvas.channels() + c] = v;
            }
        }
    }
    if (scene.noise.blur_radius > 0) {
        // box blur per channel
        const int r = scene.noise.blur_radius;
        ImageBuffer tmp = canvas;
        for (int y = 0; y < canvas.height(); ++y)
            for (int x = 0; x < canvas.width(); ++x)
                for (int c = 0; c < canvas.channels(); ++c) {
                    int sum = 0, cnt = 0;
                    for (int dy = -r; dy <= r; ++dy)
                        for (int dx = -r; dx <= r; ++dx) {
                            const int nx = x + dx, ny = y + dy;
                            if (nx < 0 || nx >= canvas.width() || ny < 0 || ny >= canvas.height())
                                continue;
                            sum += tmp.at(nx, ny, c);
                            ++cnt;
                        }
                    canvas.at(x, y, c) = static_cast<std::uint8_t>(sum / cnt);
                }
    }

    // Illumination category from measured plate-region Value mean.
    {
        double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
        for (const Point2& p : projected) {
            x0 = std::min(x0, p.x); y0 = std::min(y0, p.y);
            x1 = std::max(x1, p.x); y1 = std::max(y1, p.y);
        }
        const int px0 = std::clamp(static_cast<int>(x0), 0, canvas.width() - 1);
        const int py0 = std::clamp(static_cast<int>(y0), 0, canvas.height() - 1);
        const int px1 = std::clamp(static_cast<int>(x1), px0 + 1, canvas.width());
        const int py1 = std::clamp(static_cast<int>(y1), py0 + 1, canvas.height());
        double sum = 0.0;
        long cnt = 0;
        for (int y = py0; y < py1; ++y)
            for (int x = px0; x < px1; ++x) {
                sum += std::max({canvas.at(x, y, 0), canvas.at(x, y, 1), canvas.at(x, y, 2)});
                ++cnt;
            }
        const double mu = cnt ? sum / cnt : 0.0;
        out.gt.illum_cat = mu < 80.0 ? IllumCategory::Low
                          : mu > 160.0 ? IllumCategory::High
                                       : IllumCategory::Medium;
    }

    out.image = std::move(canvas);
    return out;
}

std::vector<CorpusEntry> generate_corpus(const CorpusOptions& opts) {
    if (opts.n < 1) throw std::invalid_argument("generate_corpus: n must be >= 1");
    if (opts.out_dir.empty()) throw std::invalid_argument("generate_corpus: out_dir required");
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(opts.out_dir) / "images");

    std::vector<CorpusEntry> entries(static_cast<std::size_t>(opts.n));
    std::vector<std::string> errors(static_cast<std::size_t>(opts.n));

    auto make_item = [&](int i) {
        const std::uint64_t item_seed =
            opts.seed ^ (0xa0761d6478bd642full * static_cast<std::uint64_t>(i + 1));
        std::mt19937_64 rng(item_seed);
        const PlateSpec spec = random_plate_spec(rng());
        const RenderedPlate plate = render_plate(spec);

        std::uniform_real_distribution<double> h_dist(opts.h_angle_min, opts.h_angle_max);
        std::uniform_real_distribution<double> v_dist(opts.v_angle_min, opts.v_angle_max);
        std::uniform_real_distribution<double> gain(opts.gain_min, opts.gain_max);
        std::uniform_real_distribution<double> unit(0.0, 1.0);

        std::optional<Scene> scene;
        SceneSpec ss;
        for (int attempt = 0; attempt < 32 && !scene; ++attempt) {
            ss = SceneSpec{};
            ss.h_angle = h_dist(rng);
            ss.v_angle = v_dist(rng);
            ss.illumination_gain = gain(rng);
            ss.noise = opts.noise;
            ss.seed = rng();
            scene = compose_scene(plate, spec, ss);
        }
        if (!scene) throw std::runtime_error("generate_corpus: could not place plate");

        char namebuf[64];
        std::snprintf(namebuf, sizeof(namebuf), "images/plate_%05d.png", i);
        write_png((fs::path(opts.out_dir) / namebuf).string(), scene->image);

        CorpusEntry e;
        e.image = namebuf;
        e.spec = spec;
        e.gt = scene->gt;
        double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
        for (const Point2& p : scene->gt.plate_corners) {
            x0 = std::min(x0, p.x); y0 = std::min(y0, p.y);
            x1 = std::max(x1, p.x); y1 = std::max(y1, p.y);
        }
        e.plate_box = {x0, y0, x1, y1};
        e.distance = unit(rng) < opts.far_frac ? "far" : "normal";
        entries[static_cast<std::size_t>(i)] = std::move(e);
    };

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const int workers = static_cast<int>(std::min<unsigned>(hw, 8));
    std::atomic<int> next{0};
    auto run = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= opts.n) return;
            try {
                make_item(i);
            } catch (const std::exception& e) {
                errors[static_cast<std::size_t>(i)] = e.what();
            }
        }
    };
    if (workers == 1 || opts.n < 4) {
        run();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < workers; ++i) pool.emplace_back(run);
        for (auto& t : pool) t.join();
    }
    for (const std::string& e : errors)
        if (!e.empty()) throw std::runtime_error(e);

    // Manifest and detection sidecar, single-threaded in index order.
    std::ofstream manifest(fs::path(opts.out_dir) / "manifest.jsonl");
    std::ofstream sidecar(fs::path(opts.out_dir) / "detections.jsonl");
    for (const CorpusEntry& e : entries) {
        json corners = json::array();
        for (const Point2& p : e.gt.plate_corners) corners.push_back({p.x, p.y});
        const json m = {{"image", e.image},
                        {"plate", e.gt.text},
                        {"lux", 1000.0},  // gain proxy; scaled below
                        {"distance", e.distance},
                        {"angle", to_string(e.gt.angle_cat)},
                        {"illumination", to_string(e.gt.illum_cat)},
                        {"corners", corners}};
        manifest << m.dump() << "\n";

        // Car box: plate box inflated so the plate passes Inside().
        const double mx = 40.0, my = 40.0;
        const json d = {
            {"image", e.image},
            {"cars", {{e.plate_box.x0 - mx, e.plate_box.y0 - my, e.plate_box.x1 + mx,
                       e.plate_box.y1 + my}}},
            {"plates", {{e.plate_box.x0, e.plate_box.y0, e.plate_box.x1, e.plate_box.y1}}}};
        sidecar << d.dump() << "\n";
    }
    return entries;
}

} // namespace blpr::synth
