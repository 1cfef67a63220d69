#include "driftlab/corruptions.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "driftlab/errors.hpp"
#include "driftlab/rng.hpp"

namespace driftlab {

namespace {

constexpr std::array<double, 6> kNoiseSigma = {0.0, 0.05, 0.10, 0.18, 0.26, 0.38};
constexpr std::array<double, 6> kBrightnessShift = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
constexpr std::array<double, 6> kContrastScale = {1.0, 0.75, 0.6, 0.45, 0.3, 0.2};
constexpr std::array<int, 6> kBlurKernel = {1, 3, 3, 5, 5, 7};
constexpr std::array<int, 6> kBlurPasses = {1, 1, 2, 2, 3, 3};

constexpr double kOcclusionFill = 0.12;

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

double lerp_table(const std::array<double, 6>& table, double alpha) {
    double pos = alpha * 5.0;
    if (pos <= 0.0) return table[0];
    if (pos >= 5.0) return table[5];
    int i = static_cast<int>(pos);
    double f = pos - i;
    return table[static_cast<size_t>(i)] * (1.0 - f) + table[static_cast<size_t>(i) + 1] * f;
}

// One clamp-to-edge box filter pass with an odd kernel, horizontal then
// vertical so the 2D box stays separable.
void box_blur_pass(std::vector<double>& img, int h, int w, int kernel) {
    int half = kernel / 2;
    std::vector<double> tmp(img.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int d = -half; d <= half; ++d) {
                int xx = std::clamp(x + d, 0, w - 1);
                acc += img[static_cast<size_t>(y) * w + xx];
            }
            tmp[static_cast<size_t>(y) * w + x] = acc / kernel;
        }
    }
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) {
            double acc = 0.0;
            for (int d = -half; d <= half; ++d) {
                int yy = std::clamp(y + d, 0, h - 1);
                acc += tmp[static_cast<size_t>(yy) * w + x];
            }
            img[static_cast<size_t>(y) * w + x] = acc / kernel;
        }
    }
}

}  // namespace

const char* corruption_kind_name(CorruptionKind kind) {
    switch (kind) {
        case CorruptionKind::gaussian_noise: return "gaussian_noise";
        case CorruptionKind::brightness: return "brightness";
        case CorruptionKind::contrast: return "contrast";
        case CorruptionKind::box_blur: return "box_blur";
        case CorruptionKind::occlusion_overlay: return "occlusion_overlay";
    }
    throw ConfigError("unhandled corruption kind");
}

CorruptionKind corruption_kind_from_name(const std::string& name) {
    if (name == "gaussian_noise") return CorruptionKind::gaussian_noise;
    if (name == "brightness") return CorruptionKind::brightness;
    if (name == "contrast") return CorruptionKind::contrast;
    if (name == "box_blur") return CorruptionKind::box_blur;
    if (name == "occlusion_overlay") return CorruptionKind::occlusion_overlay;
    throw ConfigError("unknown corruption kind: " + name);
}

double CorruptionSpec::alpha() const {
    if (coverage >= 0.0) return std::min(coverage, 1.0);
    return static_cast<double>(severity_level) / 5.0;
}

void CorruptionSpec::validate() const {
    if (severity_level < 0 || severity_level > 5)
        throw ConfigError("severity_level must be in [0,5]");
    if (coverage > 1.0) throw ConfigError("coverage must be in [0,1]");
    if (opacity < 0.0 || opacity > 1.0) throw ConfigError("opacity must be in [0,1]");
}

bool has_continuous_severity(CorruptionKind kind) {
    return kind != CorruptionKind::box_blur;
}

double severity_parameter(CorruptionKind kind, double alpha) {
    switch (kind) {
        case CorruptionKind::gaussian_noise: return lerp_table(kNoiseSigma, alpha);
        case CorruptionKind::brightness: return lerp_table(kBrightnessShift, alpha);
        case CorruptionKind::contrast: return lerp_table(kContrastScale, alpha);
        case CorruptionKind::box_blur:
            return kBlurKernel[static_cast<size_t>(std::lround(std::clamp(alpha, 0.0, 1.0) * 5.0))];
        case CorruptionKind::occlusion_overlay: return alpha;
    }
    throw ConfigError("unhandled corruption kind");
}

std::vector<double> apply_corruption(const std::vector<double>& image, int h, int w,
                                     const CorruptionSpec& spec, uint64_t sample_seed) {
    if (static_cast<int>(image.size()) != h * w)
        throw ShapeError("image size does not match the given dimensions");
    for (double v : image)
        if (!(v >= 0.0 && v <= 1.0)) throw InvalidInputError("input pixels must lie in [0,1]");
    spec.validate();

    if (spec.is_identity()) return image;

    double alpha = spec.alpha();
    std::vector<double> out = image;
    Rng rng(derive_key(sample_seed, static_cast<uint64_t>(spec.kind) + 0xc0de));

    switch (spec.kind) {
        case CorruptionKind::gaussian_noise: {
            double sigma = lerp_table(kNoiseSigma, alpha);
            for (double& v : out) v = clamp01(v + sigma * rng.next_normal());
            break;
        }
        case CorruptionKind::brightness: {
            double shift = lerp_table(kBrightnessShift, alpha);
            for (double& v : out) v = clamp01(v + shift);
            break;
        }
        case CorruptionKind::contrast: {
            double scale = lerp_table(kContrastScale, alpha);
            for (double& v : out) v = clamp01(0.5 + (v - 0.5) * scale);
            break;
        }
        case CorruptionKind::box_blur: {
            int level_eq = static_cast<int>(std::lround(alpha * 5.0));
            int kernel = kBlurKernel[static_cast<size_t>(level_eq)];
            int passes = kBlurPasses[static_cast<size_t>(level_eq)];
            if (kernel > 1)
                for (int p = 0; p < passes; ++p) box_blur_pass(out, h, w, kernel);
            for (double& v : out) v = clamp01(v);
            break;
        }
        case CorruptionKind::occlusion_overlay: {
            double area = alpha * h * w;
            double aspect = rng.next_range(0.5, 2.0);
            int rw = std::clamp(static_cast<int>(std::lround(std::sqrt(area * aspect))), 1, w);
            int rh = std::clamp(static_cast<int>(std::lround(area / rw)), 1, h);
            if (alpha >= 1.0) { rw = w; rh = h; }
            int x0 = static_cast<int>(rng.next_below(static_cast<uint64_t>(w - rw + 1)));
            int y0 = static_cast<int>(rng.next_below(static_cast<uint64_t>(h - rh + 1)));
            for (int y = y0; y < y0 + rh; ++y)
                for (int x = x0; x < x0 + rw; ++x) {
                    size_t p = static_cast<size_t>(y) * w + x;
                    out[p] = clamp01((1.0 - spec.opacity) * out[p] + spec.opacity * kOcclusionFill);
                }
            break;
        }
    }
    return out;
}

}  // namespace driftlab
