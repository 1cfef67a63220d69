#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace driftlab {

enum class CorruptionKind {
    gaussian_noise,
    brightness,
    contrast,
    box_blur,
    occlusion_overlay,
};

const char* corruption_kind_name(CorruptionKind kind);
CorruptionKind corruption_kind_from_name(const std::string& name);

// A shift kind plus its strength. Strength is either a discrete severity
// level in [0,5] (0 = identity) or, when coverage >= 0, a continuous value
// in [0,1]. For occlusion_overlay the continuous value is literally the
// covered image fraction; for the other kinds it interpolates the level
// parameter table (level = 5 * coverage).
struct CorruptionSpec {
    CorruptionKind kind = CorruptionKind::gaussian_noise;
    int severity_level = 0;
    double coverage = -1.0;  // continuous severity knob; < 0 means "use severity_level"
    double opacity = 0.9;    // occlusion blend factor
    uint64_t rng_salt = 0;

    // Normalized strength in [0,1].
    double alpha() const;
    bool is_identity() const { return alpha() <= 0.0; }
    void validate() const;
};

// Applies the corruption to one image, clamped back to [0,1]. Deterministic
// in (image, spec, sample_seed); severity 0 returns the input bit-exactly.
//
// Severity parameter tables (levels 0..5):
//   gaussian_noise  sigma   {0, .05, .10, .18, .26, .38}
//   brightness      shift   {0, .1, .2, .3, .4, .5}
//   contrast        scale   {1, .75, .6, .45, .3, .2} about mean 0.5
//   box_blur        kernel  {1, 3, 3, 5, 5, 7} applied {1, 1, 2, 2, 3, 3} times
//   occlusion       covered fraction = level/5 (or the continuous coverage),
//                   seeded rectangle blended at `opacity` over a dark fill
std::vector<double> apply_corruption(const std::vector<double>& image, int h, int w,
                                     const CorruptionSpec& spec, uint64_t sample_seed);

// True if the kind exposes a smooth continuous severity knob usable for
// calibration (box_blur only has discrete kernel sizes).
bool has_continuous_severity(CorruptionKind kind);

// The kind's raw parameter at normalized strength alpha in [0,1]
// (linear interpolation of the level table). Exposed for tests.
double severity_parameter(CorruptionKind kind, double alpha);

}  // namespace driftlab
