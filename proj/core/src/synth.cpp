#include <algorithm>
#include <array>
#include <cmath>

#include "plgan/dataio.hpp"
#include "plgan/rng.hpp"

namespace plgan {

namespace {

// Smooth low-frequency texture: random values on a coarse grid, bilinearly
// upsampled, plus faint per-pixel noise.
Tensor textured_background(int size, Rng& rng) {
    constexpr int kCell = 16;
    const int grid = size / kCell + 2;
    std::vector<float> node(static_cast<std::size_t>(3) * grid * grid);
    const float base = static_cast<float>(rng.uniform(-0.35, 0.35));
    std::array<float, 3> tint{};
    for (auto& t : tint) t = static_cast<float>(rng.uniform(-0.08, 0.08));
    for (int c = 0; c < 3; ++c)
        for (int g = 0; g < grid * grid; ++g)
            node[static_cast<std::size_t>(c) * grid * grid + g] =
                base + tint[static_cast<std::size_t>(c)] +
                static_cast<float>(rng.uniform(-0.18, 0.18));

    Tensor bg({3, size, size});
    for (int i = 0; i < size; ++i) {
        const float gi = static_cast<float>(i) / kCell;
        const int i0 = static_cast<int>(gi);
        const float fi = gi - i0;
        for (int j = 0; j < size; ++j) {
            const float gj = static_cast<float>(j) / kCell;
            const int j0 = static_cast<int>(gj);
            const float fj = gj - j0;
            for (int c = 0; c < 3; ++c) {
                const float* n = node.data() + static_cast<std::size_t>(c) * grid * grid;
                const float top = n[i0 * grid + j0] * (1 - fj) + n[i0 * grid + j0 + 1] * fj;
                const float bot =
                    n[(i0 + 1) * grid + j0] * (1 - fj) + n[(i0 + 1) * grid + j0 + 1] * fj;
                bg.at(c, i, j) = top * (1 - fi) + bot * fi;
            }
        }
    }
    for (std::int64_t k = 0; k < bg.numel(); ++k)
        bg[k] = std::clamp(bg[k] + static_cast<float>(rng.uniform(-0.03, 0.03)), -1.0f, 1.0f);
    return bg;
}

struct Point {
    double x, y;
};

// Distance field of one quadratic Bezier stroke, approximated by splatting
// densely sampled curve points into a local window.
void stroke_distance(const Point& a, const Point& ctrl, const Point& b, int size, double radius,
                     std::vector<float>& dist) {
    const double approx_len = std::hypot(b.x - a.x, b.y - a.y) * 1.3 + 1.0;
    const int steps = std::max(8, static_cast<int>(approx_len / 0.3));
    const int win = static_cast<int>(std::ceil(radius)) + 1;
    for (int s = 0; s <= steps; ++s) {
        const double t = static_cast<double>(s) / steps;
        const double u = 1.0 - t;
        const double px = u * u * a.x + 2 * u * t * ctrl.x + t * t * b.x;
        const double py = u * u * a.y + 2 * u * t * ctrl.y + t * t * b.y;
        const int ci = static_cast<int>(std::floor(py));
        const int cj = static_cast<int>(std::floor(px));
        for (int i = std::max(0, ci - win); i <= std::min(size - 1, ci + win); ++i)
            for (int j = std::max(0, cj - win); j <= std::min(size - 1, cj + win); ++j) {
                const double d = std::hypot(j + 0.5 - px, i + 0.5 - py);
                auto& cell = dist[static_cast<std::size_t>(i) * size + j];
                cell = std::min(cell, static_cast<float>(d));
            }
    }
}

// Endpoints on opposite image borders so strokes span the frame.
void pick_endpoints(int size, Rng& rng, Point& a, Point& b) {
    const double s = static_cast<double>(size);
    if (rng.uniform() < 0.5) {
        a = {rng.uniform(0.0, s), 0.0};
        b = {rng.uniform(0.0, s), s};
    } else {
        a = {0.0, rng.uniform(0.0, s)};
        b = {s, rng.uniform(0.0, s)};
    }
}

} // namespace

std::vector<Sample> synth_thin_lines(int n_images, int size, int line_width_px,
                                     std::uint64_t seed, std::vector<double>* mask_ratios) {
    if (n_images < 0) throw ConfigError("synth_thin_lines: n_images must be >= 0");
    if (size <= 0) throw ConfigError("synth_thin_lines: size must be positive");
    if (line_width_px < 1) throw ConfigError("synth_thin_lines: line_width_px must be >= 1");

    Rng rng(seed);
    std::vector<Sample> samples;
    samples.reserve(static_cast<std::size_t>(n_images));
    if (mask_ratios) mask_ratios->clear();

    const double half_w = line_width_px / 2.0;
    const double radius = half_w + 1.5;
    const std::size_t total_px = static_cast<std::size_t>(size) * size;

    for (int n = 0; n < n_images; ++n) {
        Sample sample;
        sample.id = "synth_" + std::to_string(n);
        sample.image = textured_background(size, rng);
        sample.mask = Tensor::zeros({size, size});

        const double target = rng.uniform(0.012, 0.026);
        const float shift =
            static_cast<float>((rng.uniform() < 0.7 ? -1.0 : 1.0) * rng.uniform(0.18, 0.38));
        std::vector<float> dist;
        std::size_t on_px = 0;
        std::size_t last_added = 0;
        for (int k = 0; k < 4; ++k) {
            const double ratio = static_cast<double>(on_px) / static_cast<double>(total_px);
            if (k > 0 && ratio >= target) break;
            const double est_next = static_cast<double>(last_added) / static_cast<double>(total_px);
            if (k > 0 && ratio + est_next > 0.031) break;

            Point a, b, ctrl;
            pick_endpoints(size, rng, a, b);
            const double mx = (a.x + b.x) / 2, my = (a.y + b.y) / 2;
            const double len = std::hypot(b.x - a.x, b.y - a.y);
            const double nx = -(b.y - a.y) / len, ny = (b.x - a.x) / len;
            const double bow = rng.uniform(-0.1, 0.1) * len;
            ctrl = {mx + nx * bow, my + ny * bow};

            dist.assign(total_px, 1e9f);
            stroke_distance(a, ctrl, b, size, radius, dist);

            last_added = 0;
            for (int i = 0; i < size; ++i)
                for (int j = 0; j < size; ++j) {
                    const double d = dist[static_cast<std::size_t>(i) * size + j];
                    const double cov = std::clamp(0.5 + (half_w - d), 0.0, 1.0);
                    if (cov <= 0.0) continue;
                    const float c = static_cast<float>(cov);
                    for (int ch = 0; ch < 3; ++ch) {
                        const float bgv = sample.image.at(ch, i, j);
                        sample.image.at(ch, i, j) =
                            std::clamp(bgv * (1 - c) + (bgv + shift) * c, -1.0f, 1.0f);
                    }
                    if (cov >= 0.5 && sample.mask.at(i, j) == 0.0f) {
                        sample.mask.at(i, j) = 1.0f;
                        ++last_added;
                        ++on_px;
                    }
                }
        }

        sample.pl_highlighted = make_pl_highlighted(sample.image, sample.mask);
        if (mask_ratios) mask_ratios->push_back(mask_ratio(sample.mask));
        samples.push_back(std::move(sample));
    }
    return samples;
}

} // namespace plgan
