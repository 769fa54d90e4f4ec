#include "dataset.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "core/parallel.h"
#include "core/rng.h"
#include "image/color.h"
#include "image/png_io.h"

namespace fs = std::filesystem;

namespace canonify {
namespace {

constexpr int kCanvas = 96;
constexpr std::uint64_t kShapesKey = 0x73686170;  // stream tags
constexpr std::uint64_t kLabelsKey = 0x6c61626c;
constexpr std::uint64_t kSplitKey = 0x73706c74;

struct Vec2 {
    double x, y;
};

// Point-in-polygon by crossing number.
bool in_polygon(const std::vector<Vec2>& poly, double px, double py) {
    bool inside = false;
    for (size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[j];
        if ((a.y > py) != (b.y > py) &&
            px < (b.x - a.x) * (py - a.y) / (b.y - a.y) + a.x) {
            inside = !inside;
        }
    }
    return inside;
}

std::vector<Vec2> regular_polygon(double cx, double cy, double r, int n, double start_deg) {
    std::vector<Vec2> poly(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double a = (start_deg + 360.0 * i / n) * 3.14159265358979323846 / 180.0;
        // Image y grows downward; negate so "up" is visually up.
        poly[static_cast<size_t>(i)] = {cx + r * std::cos(a), cy - r * std::sin(a)};
    }
    return poly;
}

std::vector<Vec2> star_polygon(double cx, double cy, double r_outer, double r_inner) {
    std::vector<Vec2> poly(10);
    for (int i = 0; i < 10; ++i) {
        const double r = i % 2 == 0 ? r_outer : r_inner;
        const double a = (90.0 + 36.0 * i) * 3.14159265358979323846 / 180.0;
        poly[static_cast<size_t>(i)] = {cx + r * std::cos(a), cy - r * std::sin(a)};
    }
    return poly;
}

struct ShapeSpec {
    int kind = 0;       // 0 circle, 1 square, 2 triangle, 3 star
    bool ring = false;  // hollow variant
    double cx = 0, cy = 0, r = 0;
    std::vector<Vec2> outer, inner;

    bool inside_scaled(double px, double py, double scale) const {
        switch (kind) {
            case 0: {
                const double dx = px - cx, dy = py - cy, rr = r * scale;
                return dx * dx + dy * dy <= rr * rr;
            }
            case 1: {
                const double half = 0.8 * r * scale;
                return std::abs(px - cx) <= half && std::abs(py - cy) <= half;
            }
            case 2:
                return in_polygon(scale == 1.0 ? outer : inner, px, py);
            default:
                return in_polygon(scale == 1.0 ? outer : inner, px, py);
        }
    }

    bool covered(double px, double py) const {
        if (!inside_scaled(px, py, 1.0)) return false;
        if (!ring) return true;
        return !inside_scaled(px, py, 0.6);
    }
};

void hsv_px(real h, real s, real v, std::uint8_t* out) {
    real r, g, b;
    hsv_to_rgb(h, s, v, r, g, b);
    out[0] = static_cast<std::uint8_t>(std::lround(std::clamp(r, real(0), real(1)) * 255));
    out[1] = static_cast<std::uint8_t>(std::lround(std::clamp(g, real(0), real(1)) * 255));
    out[2] = static_cast<std::uint8_t>(std::lround(std::clamp(b, real(0), real(1)) * 255));
}

ImageU8 render_shape(int label, RngStream& rng) {
    ShapeSpec spec;
    spec.kind = label / 2;
    spec.ring = label % 2 == 1;

    // Background sits in a fixed mid-brightness band; the foreground is
    // well-separated in hue and brighter.
    const real bg_h = rng.uniform();
    const real bg_s = rng.uniform(real(0.2), real(0.5));
    const real bg_v = rng.uniform(real(0.40), real(0.60));
    real fg_h = bg_h + rng.uniform(real(0.25), real(0.75));
    if (fg_h >= 1) fg_h -= 1;
    const real fg_s = rng.uniform(real(0.6), real(1.0));
    const real fg_v = rng.uniform(real(0.70), real(1.0));

    spec.cx = rng.uniform(real(0.36), real(0.64)) * kCanvas;
    spec.cy = rng.uniform(real(0.36), real(0.64)) * kCanvas;
    spec.r = rng.uniform(real(0.14), real(0.21)) * kCanvas;

    if (spec.kind == 2) {
        spec.outer = regular_polygon(spec.cx, spec.cy, spec.r, 3, 90);
        spec.inner = regular_polygon(spec.cx, spec.cy, spec.r * 0.6, 3, 90);
    } else if (spec.kind == 3) {
        spec.outer = star_polygon(spec.cx, spec.cy, spec.r, spec.r * 0.45);
        spec.inner = star_polygon(spec.cx, spec.cy, spec.r * 0.6, spec.r * 0.27);
    }

    std::uint8_t bg[3], fg[3];
    hsv_px(bg_h, bg_s, bg_v, bg);
    hsv_px(fg_h, fg_s, fg_v, fg);

    ImageU8 img(kCanvas, kCanvas);
    const double pad = spec.r * 1.1 + 1;
    const int x_lo = std::max(0, static_cast<int>(spec.cx - pad));
    const int x_hi = std::min(kCanvas, static_cast<int>(spec.cx + pad) + 1);
    const int y_lo = std::max(0, static_cast<int>(spec.cy - pad));
    const int y_hi = std::min(kCanvas, static_cast<int>(spec.cy + pad) + 1);

    for (int y = 0; y < kCanvas; ++y) {
        for (int x = 0; x < kCanvas; ++x) {
            std::uint8_t* p = img.px(y, x);
            int hits = 0;
            if (y >= y_lo && y < y_hi && x >= x_lo && x < x_hi) {
                // 3x3 coverage supersampling.
                for (int sy = 0; sy < 3; ++sy) {
                    for (int sx = 0; sx < 3; ++sx) {
                        if (spec.covered(x + (sx + 0.5) / 3.0, y + (sy + 0.5) / 3.0)) ++hits;
                    }
                }
            }
            if (hits == 0) {
                p[0] = bg[0], p[1] = bg[1], p[2] = bg[2];
            } else if (hits == 9) {
                p[0] = fg[0], p[1] = fg[1], p[2] = fg[2];
            } else {
                for (int ch = 0; ch < 3; ++ch) {
                    p[ch] = static_cast<std::uint8_t>(
                        std::lround(bg[ch] + (fg[ch] - bg[ch]) * hits / 9.0));
                }
            }
        }
    }
    return img;
}

std::vector<int> stratified_labels(int count, int classes, std::uint64_t seed) {
    std::vector<int> labels(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) labels[static_cast<size_t>(i)] = i % classes;
    RngStream rng(seed, kLabelsKey);
    rng.shuffle(labels);
    return labels;
}

void split_dataset(Dataset& ds, std::uint64_t seed) {
    std::vector<int> idx(ds.items.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    RngStream rng(seed, kSplitKey);
    rng.shuffle(idx);
    const size_t val = std::max<size_t>(1, idx.size() / 10);
    ds.val_indices.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(val));
    ds.train_indices.assign(idx.begin() + static_cast<std::ptrdiff_t>(val), idx.end());
    std::sort(ds.val_indices.begin(), ds.val_indices.end());
    std::sort(ds.train_indices.begin(), ds.train_indices.end());
}

}  // namespace

Dataset make_shapes_dataset(int count, std::uint64_t seed) {
    if (count < 2) throw std::invalid_argument("shapes dataset: need at least 2 samples");
    Dataset ds;
    ds.class_names = {"circle_solid", "circle_ring",   "square_solid",   "square_ring",
                      "triangle_solid", "triangle_ring", "star_solid",     "star_ring"};
    const auto labels = stratified_labels(count, ds.num_classes(), seed);
    ds.items.resize(static_cast<size_t>(count));
    parallel_for_each(count, [&](std::int64_t i) {
        RngStream rng(seed, kShapesKey, static_cast<std::uint64_t>(i));
        ds.items[static_cast<size_t>(i)].label = labels[static_cast<size_t>(i)];
        ds.items[static_cast<size_t>(i)].image = render_shape(labels[static_cast<size_t>(i)], rng);
    });
    split_dataset(ds, seed);
    return ds;
}

Dataset load_folder_dataset(const std::string& dir, std::uint64_t seed) {
    if (!fs::is_directory(dir)) throw std::runtime_error("dataset: not a directory: " + dir);
    Dataset ds;

    const fs::path manifest = fs::path(dir) / "labels.csv";
    std::vector<std::pair<std::string, int>> entries;
    if (fs::exists(manifest)) {
        std::ifstream in(manifest);
        if (!in) throw std::runtime_error("dataset: cannot read " + manifest.string());
        std::string line;
        int max_label = -1;
        bool first = true;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            if (first && line.rfind("path,", 0) == 0) {
                first = false;
                continue;
            }
            first = false;
            const auto comma = line.find_last_of(',');
            if (comma == std::string::npos) {
                throw std::runtime_error("dataset: malformed manifest line: " + line);
            }
            const int label = std::stoi(line.substr(comma + 1));
            entries.emplace_back((fs::path(dir) / line.substr(0, comma)).string(), label);
            max_label = std::max(max_label, label);
        }
        for (int i = 0; i <= max_label; ++i) ds.class_names.push_back("class_" + std::to_string(i));
    } else {
        std::vector<std::string> class_dirs;
        for (const auto& e : fs::directory_iterator(dir)) {
            if (e.is_directory()) class_dirs.push_back(e.path().filename().string());
        }
        std::sort(class_dirs.begin(), class_dirs.end());
        for (size_t li = 0; li < class_dirs.size(); ++li) {
            std::vector<std::string> files;
            for (const auto& e : fs::directory_iterator(fs::path(dir) / class_dirs[li])) {
                if (e.path().extension() == ".png") files.push_back(e.path().string());
            }
            std::sort(files.begin(), files.end());
            for (auto& f : files) entries.emplace_back(std::move(f), static_cast<int>(li));
        }
        ds.class_names = std::move(class_dirs);
    }

    if (ds.class_names.size() < 2) {
        throw std::runtime_error("dataset: need at least 2 classes in " + dir);
    }
    for (auto& [path, label] : entries) {
        ds.items.push_back({load_png(path), label});
    }
    if (ds.items.empty()) throw std::runtime_error("dataset: no images found in " + dir);
    split_dataset(ds, seed);
    return ds;
}

}  // namespace canonify
